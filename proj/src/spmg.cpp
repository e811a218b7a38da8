#include "wmbench/spmg.hpp"

#include <algorithm>
#include <cmath>

#include "wmbench/parallel.hpp"
#include "wmbench/random.hpp"
#include "wmbench/stats.hpp"

namespace wmbench::spmg {

namespace {

constexpr double kNllClip = 10.0;

std::vector<double> per_prompt_means(const TestModel& model,
                                     const std::vector<TokenSeq>& prompts,
                                     std::uint32_t generations, std::uint32_t gen_len,
                                     const MetricSurrogate& met) {
  const std::size_t n = prompts.size();
  const std::size_t total = n * generations;
  std::vector<double> values(total);
  par::parallel_for(total, [&](std::size_t item) {
    const std::size_t i = item / generations;
    const std::size_t j = item % generations;
    const std::uint64_t seed = derive_seed(derive_seed(model.sampling_seed, i), j);
    const lm::Generation g =
        lm::generate(model.base, prompts[i], gen_len, model.policy, seed, i);
    values[item] = met.evaluate(g);
  });
  std::vector<double> means(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < generations; ++j) acc += values[i * generations + j];
    means[i] = acc / static_cast<double>(generations);
  }
  return means;
}

double gap_of_means(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

}  // namespace

MetricSurrogate MetricSurrogate::clipped_mean_nll() {
  MetricSurrogate m;
  m.kind = Kind::ClippedMeanNll;
  m.bound = kNllClip;
  return m;
}

MetricSurrogate MetricSurrogate::clipped_perplexity() {
  MetricSurrogate m;
  m.kind = Kind::ClippedPerplexity;
  m.bound = std::exp(kNllClip);
  return m;
}

MetricSurrogate MetricSurrogate::green_rate(keys::SecretKey sk,
                                            keys::ContextScheme scheme,
                                            const Vocab& vocab, double gamma) {
  MetricSurrogate m;
  m.kind = Kind::GreenRate;
  m.bound = 1.0;
  m.green_sk = std::move(sk);
  m.green_scheme = scheme;
  m.green_gamma = gamma;
  m.green_vocab = vocab.size;
  return m;
}

double MetricSurrogate::evaluate(const lm::Generation& g) const {
  if (g.tokens.empty()) throw InputDomainError("MetricSurrogate: empty generation");
  switch (kind) {
    case Kind::ClippedMeanNll: {
      double acc = 0.0;
      for (double lp : g.per_token_logprob) acc += -lp;
      const double mean_nll = acc / static_cast<double>(g.per_token_logprob.size());
      return std::min(mean_nll, bound);
    }
    case Kind::ClippedPerplexity: {
      double acc = 0.0;
      for (double lp : g.per_token_logprob) acc += -lp;
      const double mean_nll = acc / static_cast<double>(g.per_token_logprob.size());
      return std::min(std::exp(mean_nll), bound);
    }
    case Kind::GreenRate: {
      if (green_vocab < 2) throw ContractError("GreenRate surrogate: vocab not set");
      const Vocab vocab(green_vocab);
      std::size_t hits = 0;
      const std::span<const Token> view(g.tokens);
      for (std::uint32_t t = 0; t < g.tokens.size(); ++t) {
        auto draw =
            keys::derive(green_sk, green_scheme, view.subspan(0, t), t, vocab);
        const auto mask = reweight::green_mask_from_permutation(
            draw.permutation(vocab.size), green_gamma);
        if (mask[g.tokens[t]]) ++hits;
      }
      return static_cast<double>(hits) / static_cast<double>(g.tokens.size());
    }
  }
  throw ContractError("MetricSurrogate: unknown kind");
}

std::string MetricSurrogate::name() const {
  switch (kind) {
    case Kind::ClippedMeanNll:
      return "clipped_mean_nll";
    case Kind::ClippedPerplexity:
      return "clipped_perplexity";
    case Kind::GreenRate:
      return "green_rate";
  }
  return "unknown";
}

TestModel TestModel::plain(const lm::ToyLM& base, std::uint64_t sampling_seed) {
  return TestModel{base.clone(), lm::SamplingPolicy::plain(), sampling_seed};
}

TestModel TestModel::watermarked(const lm::ToyLM& base, reweight::WatermarkStrategy s,
                                 keys::SecretKey sk, keys::ContextScheme scheme,
                                 std::uint64_t sampling_seed) {
  return TestModel{
      base.clone(),
      lm::SamplingPolicy::watermarked(std::move(s), std::move(sk), scheme),
      sampling_seed};
}

double spmg_gap(const TestModel& model_p, const TestModel& model_q,
                const std::vector<TokenSeq>& prompts, std::uint32_t generations,
                std::uint32_t gen_len, const MetricSurrogate& met, std::uint64_t seed) {
  if (prompts.empty() || generations < 1) {
    throw InputDomainError("spmg_gap: need n >= 1 prompts and m >= 1 generations");
  }
  (void)seed;  // sampling seeds live on the models themselves
  const auto means_p = per_prompt_means(model_p, prompts, generations, gen_len, met);
  const auto means_q = per_prompt_means(model_q, prompts, generations, gen_len, met);
  return gap_of_means(means_p, means_q);
}

SPMGReport detwmk(const TestModel& base, const TestModel& test,
                  const MetricSurrogate& met, const SpmgBudget& budget) {
  if (budget.prompts < 1 || budget.generations < 1) {
    throw InputDomainError("detwmk: need n >= 1 and m >= 1");
  }
  const auto prompts = lm::make_prompt_corpus(base.base.vocab(), budget.prompts,
                                              budget.prompt_len,
                                              derive_seed(budget.seed, 0xC0FFEE));
  // The clone is an independent model with the same distribution as P_M:
  // identical parameters, fresh sampling seed stream.
  const TestModel clone =
      TestModel::plain(base.base, derive_seed(budget.seed, 0x10D));

  SPMGReport report;
  report.per_prompt_mean_base =
      per_prompt_means(base, prompts, budget.generations, budget.gen_len, met);
  report.per_prompt_mean_test =
      per_prompt_means(test, prompts, budget.generations, budget.gen_len, met);
  report.per_prompt_mean_clone =
      per_prompt_means(clone, prompts, budget.generations, budget.gen_len, met);

  report.delta_mt = gap_of_means(report.per_prompt_mean_base, report.per_prompt_mean_test);
  report.delta_mm =
      gap_of_means(report.per_prompt_mean_base, report.per_prompt_mean_clone);
  report.detwmk = report.delta_mt - report.delta_mm;
  report.threshold =
      mcdiarmid_threshold(met.bound, budget.generations, budget.prompts, budget.alpha);
  report.reject = report.detwmk >= report.threshold;
  return report;
}

double mcdiarmid_threshold(double bound, std::uint32_t generations,
                           std::uint32_t prompts, double alpha) {
  if (!(bound > 0.0)) throw InputDomainError("mcdiarmid_threshold: bound must be > 0");
  if (generations < 1 || prompts < 1) {
    throw InputDomainError("mcdiarmid_threshold: m and n must be >= 1");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InputDomainError("mcdiarmid_threshold: alpha in (0,1)");
  }
  const double mn = static_cast<double>(generations) * static_cast<double>(prompts);
  return bound * std::sqrt(12.0 * std::log(2.0 / alpha) / mn);
}

double bhattacharyya(const TokenDistribution& p, const TokenDistribution& q) {
  if (p.size() != q.size()) throw InputDomainError("bhattacharyya: size mismatch");
  double acc = 0.0;
  for (std::uint32_t i = 0; i < p.size(); ++i) acc += std::sqrt(p[i] * q[i]);
  return acc;
}

double tv_product_lower_bound(const TokenDistribution& p, const TokenDistribution& q,
                              std::uint32_t m) {
  if (m < 1) throw InputDomainError("tv_product_lower_bound: m >= 1");
  return 1.0 - std::pow(bhattacharyya(p, q), static_cast<double>(m));
}

TokenDistribution fixed_key_law(const reweight::WatermarkStrategy& strategy,
                                const TokenDistribution& dist, keys::KeyDraw& draw) {
  using reweight::Family;
  const std::uint32_t v = dist.size();
  switch (strategy.family) {
    case Family::ITS:
    case Family::EXP: {
      // Fully key-determined samplers: the fixed-key law is a point mass.
      const auto outcome = reweight::watermarked_sample(strategy, dist, draw);
      return TokenDistribution::one_hot(v, outcome.token);
    }
    case Family::SynthID: {
      // Exact per-layer update: a pair of i.i.d. candidates keeps the one
      // with the higher keyed bit (ties keep the first), so
      //   w'(x) = w(x) * (2 * W_below(x) + W_equal(x)).
      const auto bits = reweight::synthid_bits(draw, strategy.layers, v);
      std::vector<double> w(dist.probs);
      for (std::uint32_t layer = 0; layer < strategy.layers; ++layer) {
        double mass_one = 0.0;
        for (std::uint32_t x = 0; x < v; ++x) {
          if (bits[static_cast<std::size_t>(layer) * v + x]) mass_one += w[x];
        }
        const double mass_zero = 1.0 - mass_one;
        std::vector<double> next(v);
        for (std::uint32_t x = 0; x < v; ++x) {
          const bool one = bits[static_cast<std::size_t>(layer) * v + x] != 0;
          next[x] = w[x] * (one ? (1.0 + mass_zero) : mass_zero);
        }
        w = std::move(next);
      }
      double sum = 0.0;
      for (double x : w) sum += x;
      for (double& x : w) x /= sum;
      return TokenDistribution(std::move(w));
    }
    default:
      return reweight::watermarked_distribution(strategy, dist, draw);
  }
}

DivergenceWitness fixed_key_divergence(const lm::ToyLM& lm,
                                       const reweight::WatermarkStrategy& strategy,
                                       const keys::SecretKey& sk,
                                       const keys::ContextScheme& scheme,
                                       double tv_floor, double target,
                                       std::uint32_t m_max,
                                       std::uint32_t context_candidates) {
  DivergenceWitness best;
  best.bc = 1.0;
  Rng rng(0xD1BA5Eu);
  const std::uint32_t ctx_len = std::max<std::uint32_t>(lm.context_order(), 1);
  for (std::uint32_t c = 0; c < context_candidates; ++c) {
    TokenSeq ctx(ctx_len);
    for (auto& t : ctx) t = static_cast<Token>(rng.below(lm.vocab().size));
    const TokenDistribution& dist = lm.next_distribution(ctx);
    auto draw = keys::derive(sk, scheme, ctx, static_cast<std::uint32_t>(ctx.size()),
                             lm.vocab());
    const TokenDistribution law = fixed_key_law(strategy, dist, draw);
    const double tv = stats::total_variation(law.probs, dist.probs);
    const double bc = bhattacharyya(law, dist);
    if (tv > best.tv) {
      best.context = ctx;
      best.tv = tv;
      best.bc = bc;
    }
  }
  if (best.tv > tv_floor && best.bc < 1.0) {
    // Smallest m with 1 - bc^m >= target.
    const double need = std::log(1.0 - target) / std::log(best.bc);
    const auto m = static_cast<std::uint32_t>(std::ceil(need));
    if (m <= m_max) best.m_needed = std::max<std::uint32_t>(m, 1);
  }
  return best;
}

}  // namespace wmbench::spmg
