#include "wmbench/reweight.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>

#include "wmbench/errors.hpp"

namespace wmbench::reweight {

namespace {

std::string fmt_param(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void require_valid(const TokenDistribution& dist) {
  if (!dist.is_valid()) throw InputDomainError("reweight: invalid TokenDistribution");
}

TokenDistribution normalized(std::vector<double> w) {
  double sum = 0.0;
  for (double x : w) sum += x;
  if (sum <= 0.0) throw InputDomainError("reweight: transform produced zero mass");
  for (double& x : w) x /= sum;
  return TokenDistribution(std::move(w));
}

// ---------------------------------------------------------------------------
// Per-family conditionals, written against explicit keyed parts so that the
// sampling path and the key-enumeration path share one formula.
// ---------------------------------------------------------------------------

std::vector<double> kgw_conditional(const TokenDistribution& dist,
                                    const std::vector<Token>& perm, double delta,
                                    double gamma) {
  const std::uint32_t v = dist.size();
  const std::uint32_t g = green_set_size(v, gamma);
  std::vector<double> w(dist.probs);
  const double boost = std::exp(delta);
  for (std::uint32_t j = 0; j < g; ++j) w[perm[j]] *= boost;
  return w;
}

double clip_at(double c, double a) { return c > a ? c - a : 0.0; }

std::vector<double> dipmark_conditional(const TokenDistribution& dist,
                                        const std::vector<Token>& perm, double alpha) {
  const std::uint32_t v = dist.size();
  std::vector<double> out(v, 0.0);
  double c_prev = 0.0;
  for (std::uint32_t j = 0; j < v; ++j) {
    const double c_cur = c_prev + dist[perm[j]];
    out[perm[j]] = (clip_at(c_cur, alpha) - clip_at(c_prev, alpha)) +
                   (clip_at(c_cur, 1.0 - alpha) - clip_at(c_prev, 1.0 - alpha));
    c_prev = c_cur;
  }
  return out;
}

std::vector<double> mcmark_conditional(const TokenDistribution& dist,
                                       const std::vector<Token>& perm,
                                       std::uint32_t segment, std::uint32_t segments) {
  const std::uint32_t v = dist.size();
  const double l = static_cast<double>(segments);
  const double lo = static_cast<double>(segment) / l;
  const double hi = static_cast<double>(segment + 1) / l;
  std::vector<double> out(v, 0.0);
  double c_prev = 0.0;
  for (std::uint32_t j = 0; j < v; ++j) {
    const double c_cur = c_prev + dist[perm[j]];
    const double overlap = std::max(0.0, std::min(c_cur, hi) - std::max(c_prev, lo));
    out[perm[j]] = l * overlap;
    c_prev = c_cur;
  }
  return out;
}

std::vector<double> sta1_conditional(const TokenDistribution& dist,
                                     const std::vector<Token>& perm, double gamma) {
  const std::uint32_t v = dist.size();
  const std::uint32_t g = green_set_size(v, gamma);
  std::vector<bool> green(v, false);
  for (std::uint32_t j = 0; j < g; ++j) green[perm[j]] = true;
  double red_mass = 0.0;
  for (std::uint32_t x = 0; x < v; ++x) {
    if (!green[x]) red_mass += dist[x];
  }
  std::vector<double> out(v);
  for (std::uint32_t x = 0; x < v; ++x) {
    out[x] = dist[x] * ((green[x] ? 1.0 : 0.0) + red_mass);
  }
  return out;
}

/// Inverse cdf over the permuted order; intervals are [C_{j-1}, C_j).
Token permuted_inverse_cdf(const TokenDistribution& dist,
                           const std::vector<Token>& perm, double u) {
  const std::uint32_t v = dist.size();
  double acc = 0.0;
  for (std::uint32_t j = 0; j < v; ++j) {
    acc += dist[perm[j]];
    if (u < acc) return perm[j];
  }
  for (std::uint32_t j = v; j-- > 0;) {
    if (dist[perm[j]] > 0.0) return perm[j];
  }
  return perm[0];
}

/// Gumbel-style argmax of u_x^(1/p_x); ties resolve to the lowest index.
Token exp_argmax(const TokenDistribution& dist, const std::vector<double>& uniforms) {
  const std::uint32_t v = dist.size();
  Token best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::uint32_t x = 0; x < v; ++x) {
    if (dist[x] <= 0.0) continue;
    const double u = uniforms[x];
    const double score =
        u > 0.0 ? std::log(u) / dist[x] : -std::numeric_limits<double>::infinity();
    if (!found || score > best_score) {
      best = x;
      best_score = score;
      found = true;
    }
  }
  if (!found) throw InputDomainError("exp_argmax: distribution has no support");
  return best;
}

/// Single-elimination tournament over 2^m candidates; higher g wins,
/// ties promote the earlier candidate.
Token synthid_tournament(std::vector<Token> candidates,
                         const std::vector<std::uint8_t>& bits, std::uint32_t layers,
                         std::uint32_t v) {
  for (std::uint32_t layer = 0; layer < layers; ++layer) {
    std::vector<Token> next;
    next.reserve(candidates.size() / 2);
    for (std::size_t k = 0; k + 1 < candidates.size(); k += 2) {
      const Token a = candidates[k];
      const Token b = candidates[k + 1];
      const std::uint8_t ga = bits[layer * v + a];
      const std::uint8_t gb = bits[layer * v + b];
      next.push_back(ga >= gb ? a : b);
    }
    candidates = std::move(next);
  }
  return candidates.front();
}

std::vector<Token> synthid_candidates_from(const TokenDistribution& dist,
                                           std::uint32_t layers,
                                           const std::function<double()>& unit) {
  if (layers > 20) throw BudgetError("synthid: tournament depth beyond 2^20 candidates");
  const std::size_t count = std::size_t{1} << layers;
  std::vector<Token> c(count);
  for (std::size_t k = 0; k < count; ++k) c[k] = dist.sample(unit());
  return c;
}

/// Adapter: a KeyDraw view over plain Monte Carlo randomness, used when the
/// key space is averaged by sampling instead of enumeration.
class RngKeyDraw final : public keys::KeyDraw {
 public:
  explicit RngKeyDraw(Rng& rng) : rng_(rng) {}
  double uniform() override { return rng_.unit(); }
  std::uint64_t uniform_below(std::uint64_t n) override { return rng_.below(n); }

 private:
  Rng& rng_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Strategy configuration
// ---------------------------------------------------------------------------

WatermarkStrategy WatermarkStrategy::kgw(double delta, double gamma) {
  if (!(delta > 0.0)) throw InputDomainError("kgw: delta must be > 0");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputDomainError("kgw: gamma in (0,1)");
  WatermarkStrategy s;
  s.family = Family::KGW;
  s.delta = delta;
  s.gamma = gamma;
  return s;
}

WatermarkStrategy WatermarkStrategy::unigram(double delta, double gamma) {
  WatermarkStrategy s = kgw(delta, gamma);
  s.family = Family::Unigram;
  return s;
}

WatermarkStrategy WatermarkStrategy::dipmark(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 0.5)) throw InputDomainError("dipmark: alpha in [0, 0.5]");
  WatermarkStrategy s;
  s.family = Family::DiPmark;
  s.alpha = alpha;
  return s;
}

WatermarkStrategy WatermarkStrategy::gamma_reweight() {
  WatermarkStrategy s;
  s.family = Family::GammaReweight;
  s.alpha = 0.5;
  return s;
}

WatermarkStrategy WatermarkStrategy::its() {
  WatermarkStrategy s;
  s.family = Family::ITS;
  return s;
}

WatermarkStrategy WatermarkStrategy::exp() {
  WatermarkStrategy s;
  s.family = Family::EXP;
  return s;
}

WatermarkStrategy WatermarkStrategy::synthid(std::uint32_t layers) {
  if (layers < 1) throw InputDomainError("synthid: layers must be >= 1");
  WatermarkStrategy s;
  s.family = Family::SynthID;
  s.layers = layers;
  return s;
}

WatermarkStrategy WatermarkStrategy::mcmark(std::uint32_t segments) {
  if (segments < 2) throw InputDomainError("mcmark: segments must be >= 2");
  WatermarkStrategy s;
  s.family = Family::MCmark;
  s.segments = segments;
  return s;
}

WatermarkStrategy WatermarkStrategy::sta1(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputDomainError("sta1: gamma in (0,1)");
  WatermarkStrategy s;
  s.family = Family::STA1;
  s.gamma = gamma;
  return s;
}

keys::ContextScheme WatermarkStrategy::default_scheme() const {
  if (family == Family::Unigram) return keys::ContextScheme::global();
  return keys::ContextScheme::ngram(2);
}

bool WatermarkStrategy::has_closed_form() const {
  switch (family) {
    case Family::KGW:
    case Family::Unigram:
    case Family::DiPmark:
    case Family::GammaReweight:
    case Family::MCmark:
    case Family::STA1:
      return true;
    case Family::ITS:
    case Family::EXP:
    case Family::SynthID:
      return false;
  }
  return false;
}

std::string WatermarkStrategy::name() const {
  switch (family) {
    case Family::KGW:
      return "kgw_d" + fmt_param(delta);
    case Family::Unigram:
      return "unigram_d" + fmt_param(delta);
    case Family::DiPmark:
      return "dipmark_a" + fmt_param(alpha);
    case Family::GammaReweight:
      return "gamma_reweight";
    case Family::ITS:
      return "its";
    case Family::EXP:
      return "exp";
    case Family::SynthID:
      return "synthid_m" + std::to_string(layers);
    case Family::MCmark:
      return "mcmark_l" + std::to_string(segments);
    case Family::STA1:
      return "sta1_g" + fmt_param(gamma);
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Keyed structures
// ---------------------------------------------------------------------------

std::uint32_t green_set_size(std::uint32_t v, double gamma) {
  const auto g = static_cast<std::uint32_t>(std::ceil(gamma * static_cast<double>(v)));
  return std::min(std::max<std::uint32_t>(g, 1), v);
}

std::vector<bool> green_mask_from_permutation(const std::vector<Token>& perm,
                                              double gamma) {
  const auto v = static_cast<std::uint32_t>(perm.size());
  const std::uint32_t g = green_set_size(v, gamma);
  std::vector<bool> mask(v, false);
  for (std::uint32_t j = 0; j < g; ++j) mask[perm[j]] = true;
  return mask;
}

std::vector<bool> dipmark_green_mask(const std::vector<Token>& perm) {
  const auto v = static_cast<std::uint32_t>(perm.size());
  const std::uint32_t g = (v + 1) / 2;  // ceil(V/2) high-cdf slots
  std::vector<bool> mask(v, false);
  for (std::uint32_t j = v - g; j < v; ++j) mask[perm[j]] = true;
  return mask;
}

std::vector<std::uint8_t> synthid_bits(keys::KeyDraw& draw, std::uint32_t layers,
                                       std::uint32_t v) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(layers) * v);
  for (auto& b : bits) b = draw.uniform() >= 0.5 ? 1 : 0;
  return bits;
}

McmarkKey mcmark_key(keys::KeyDraw& draw, std::uint32_t segments, std::uint32_t v) {
  McmarkKey key;
  key.perm = draw.permutation(v);
  key.segments = segments;
  const double u = draw.uniform();
  key.segment = std::min(static_cast<std::uint32_t>(u * static_cast<double>(segments)),
                         segments - 1);
  return key;
}

bool mcmark_member(const McmarkKey& key, Token token) {
  const auto v = static_cast<std::uint32_t>(key.perm.size());
  std::uint32_t rank = 0;
  for (std::uint32_t j = 0; j < v; ++j) {
    if (key.perm[j] == token) {
      rank = j;
      break;
    }
  }
  const auto block = static_cast<std::uint32_t>(
      static_cast<std::uint64_t>(rank) * key.segments / v);
  return block == key.segment;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

TokenDistribution watermarked_distribution(const WatermarkStrategy& strategy,
                                           const TokenDistribution& dist,
                                           keys::KeyDraw& draw) {
  require_valid(dist);
  const std::uint32_t v = dist.size();
  switch (strategy.family) {
    case Family::KGW:
    case Family::Unigram:
      return normalized(kgw_conditional(dist, draw.permutation(v), strategy.delta,
                                        strategy.gamma));
    case Family::DiPmark:
      return normalized(dipmark_conditional(dist, draw.permutation(v), strategy.alpha));
    case Family::GammaReweight:
      return normalized(dipmark_conditional(dist, draw.permutation(v), 0.5));
    case Family::MCmark: {
      const McmarkKey key = mcmark_key(draw, strategy.segments, v);
      return normalized(mcmark_conditional(dist, key.perm, key.segment,
                                           strategy.segments));
    }
    case Family::STA1:
      return normalized(sta1_conditional(dist, draw.permutation(v), strategy.gamma));
    case Family::ITS:
    case Family::EXP:
    case Family::SynthID:
      throw ContractError(
          "watermarked_distribution: " + strategy.name() +
          " is sampling-defined; use watermarked_sample");
  }
  throw ContractError("watermarked_distribution: unknown family");
}

namespace {

SampleOutcome sample_impl(const WatermarkStrategy& strategy,
                          const TokenDistribution& dist, keys::KeyDraw& draw,
                          const std::function<double()>& noise) {
  require_valid(dist);
  const std::uint32_t v = dist.size();
  switch (strategy.family) {
    case Family::ITS: {
      const auto perm = draw.permutation(v);
      const double u = draw.uniform();
      return {permuted_inverse_cdf(dist, perm, u), u};
    }
    case Family::EXP: {
      std::vector<double> uniforms(v);
      for (auto& u : uniforms) u = draw.uniform();
      const Token t = exp_argmax(dist, uniforms);
      return {t, uniforms[t]};
    }
    case Family::SynthID: {
      const auto bits = synthid_bits(draw, strategy.layers, v);
      auto candidates = synthid_candidates_from(dist, strategy.layers, noise);
      return {synthid_tournament(std::move(candidates), bits, strategy.layers, v),
              std::nullopt};
    }
    case Family::MCmark: {
      const McmarkKey key = mcmark_key(draw, strategy.segments, v);
      // Sampling coordinate confined to the selected cdf segment; this is
      // exactly the clipped-and-rescaled conditional.
      const double coord =
          (static_cast<double>(key.segment) + noise()) /
          static_cast<double>(strategy.segments);
      return {permuted_inverse_cdf(dist, key.perm, coord), std::nullopt};
    }
    default: {
      const TokenDistribution pw = watermarked_distribution(strategy, dist, draw);
      return {pw.sample(noise()), std::nullopt};
    }
  }
}

}  // namespace

SampleOutcome watermarked_sample(const WatermarkStrategy& strategy,
                                 const TokenDistribution& dist, keys::KeyDraw& draw) {
  return sample_impl(strategy, dist, draw, [&draw] { return draw.uniform(); });
}

SampleOutcome watermarked_sample(const WatermarkStrategy& strategy,
                                 const TokenDistribution& dist, keys::KeyDraw& draw,
                                 Rng& rng) {
  return sample_impl(strategy, dist, draw, [&rng] { return rng.unit(); });
}

namespace {

TokenDistribution expected_exhaustive(const WatermarkStrategy& strategy,
                                      const TokenDistribution& dist) {
  const std::uint32_t v = dist.size();
  if (v > 6) {
    throw BudgetError("expected_watermarked_distribution: exhaustive enumeration "
                      "limited to V <= 6");
  }

  std::vector<long double> acc(v, 0.0L);
  long double weight_total = 0.0L;

  if (strategy.family == Family::EXP) {
    // Integrate the argmax win probability over the uniform key:
    // P(win = i) = integral_0^1 d(y^{p_i}) prod_{j != i} y^{p_j}.
    const std::size_t nodes = 128;
    gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(nodes);
    std::vector<double> out(v, 0.0);
    for (std::uint32_t i = 0; i < v; ++i) {
      if (dist[i] <= 0.0) continue;
      double integral = 0.0;
      for (std::size_t q = 0; q < nodes; ++q) {
        double y, w;
        gsl_integration_glfixed_point(0.0, 1.0, q, &y, &w, table);
        double f = dist[i] * std::pow(y, dist[i] - 1.0);
        for (std::uint32_t j = 0; j < v; ++j) {
          if (j != i && dist[j] > 0.0) f *= std::pow(y, dist[j]);
        }
        integral += w * f;
      }
      out[i] = integral;
    }
    gsl_integration_glfixed_table_free(table);
    return normalized(std::move(out));
  }

  std::vector<Token> perm(v);
  for (std::uint32_t i = 0; i < v; ++i) perm[i] = i;

  do {
    switch (strategy.family) {
      case Family::KGW:
      case Family::Unigram: {
        const TokenDistribution pw =
            normalized(kgw_conditional(dist, perm, strategy.delta, strategy.gamma));
        for (std::uint32_t x = 0; x < v; ++x) acc[x] += pw[x];
        weight_total += 1.0L;
        break;
      }
      case Family::DiPmark:
      case Family::GammaReweight: {
        const double alpha =
            strategy.family == Family::GammaReweight ? 0.5 : strategy.alpha;
        const auto w = dipmark_conditional(dist, perm, alpha);
        for (std::uint32_t x = 0; x < v; ++x) acc[x] += w[x];
        weight_total += 1.0L;
        break;
      }
      case Family::STA1: {
        const auto w = sta1_conditional(dist, perm, strategy.gamma);
        for (std::uint32_t x = 0; x < v; ++x) acc[x] += w[x];
        weight_total += 1.0L;
        break;
      }
      case Family::MCmark: {
        for (std::uint32_t seg = 0; seg < strategy.segments; ++seg) {
          const auto w = mcmark_conditional(dist, perm, seg, strategy.segments);
          for (std::uint32_t x = 0; x < v; ++x) acc[x] += w[x];
          weight_total += 1.0L;
        }
        break;
      }
      case Family::ITS: {
        // The u-integral of inverse-cdf sampling is the interval measure.
        double c_prev = 0.0;
        for (std::uint32_t j = 0; j < v; ++j) {
          const double c_cur = c_prev + dist[perm[j]];
          acc[perm[j]] += static_cast<long double>(c_cur - c_prev);
          c_prev = c_cur;
        }
        weight_total += 1.0L;
        break;
      }
      default:
        throw ContractError("expected_watermarked_distribution: no key enumeration "
                            "for " + strategy.name());
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<double> out(v);
  for (std::uint32_t x = 0; x < v; ++x) {
    out[x] = static_cast<double>(acc[x] / weight_total);
  }
  return normalized(std::move(out));
}

TokenDistribution expected_monte_carlo(const WatermarkStrategy& strategy,
                                       const TokenDistribution& dist,
                                       std::uint64_t samples, std::uint64_t seed) {
  if (samples == 0) {
    throw BudgetError("expected_watermarked_distribution: Monte Carlo budget is zero");
  }
  const std::uint32_t v = dist.size();
  Rng rng(seed);
  RngKeyDraw draw(rng);
  std::vector<double> counts(v, 0.0);
  for (std::uint64_t s = 0; s < samples; ++s) {
    counts[watermarked_sample(strategy, dist, draw).token] += 1.0;
  }
  return normalized(std::move(counts));
}

}  // namespace

TokenDistribution expected_watermarked_distribution(const WatermarkStrategy& strategy,
                                                    const TokenDistribution& dist,
                                                    const KeyBudget& budget) {
  require_valid(dist);
  if (budget.exhaustive) {
    if (strategy.family == Family::SynthID) {
      throw ContractError(
          "expected_watermarked_distribution: synthid has no enumerable key space; "
          "supply a Monte Carlo budget");
    }
    return expected_exhaustive(strategy, dist);
  }
  return expected_monte_carlo(strategy, dist, budget.mc_samples, budget.mc_seed);
}

}  // namespace wmbench::reweight
