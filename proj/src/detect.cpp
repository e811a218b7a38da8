#include "wmbench/detect.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "wmbench/parallel.hpp"
#include "wmbench/random.hpp"
#include "wmbench/stats.hpp"

namespace wmbench::detect {

namespace {

constexpr double kExpClip = 10.0;
constexpr std::uint64_t kItsTableSize = 1'000'000;
constexpr std::uint64_t kItsTableSeed = 0x17500babe5ULL;

double its_token_score(double u, std::uint32_t rank, std::uint32_t v) {
  const double target = static_cast<double>(rank) / static_cast<double>(v - 1);
  return 1.0 - std::abs(u - target);
}

// Monte Carlo null tables for the its_score statistic, one per (T, V).
class ItsNullTables {
 public:
  static ItsNullTables& instance() {
    static ItsNullTables tables;
    return tables;
  }

  const std::vector<double>& table(std::uint32_t token_count, std::uint32_t vocab) {
    const std::uint64_t key = (static_cast<std::uint64_t>(token_count) << 32) | vocab;
    {
      std::lock_guard lock(mutex_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return *it->second;
    }
    auto built = std::make_shared<std::vector<double>>(build(token_count, vocab));
    std::lock_guard lock(mutex_);
    auto [it, inserted] = cache_.try_emplace(key, std::move(built));
    return *it->second;
  }

 private:
  static std::vector<double> build(std::uint32_t token_count, std::uint32_t vocab) {
    std::vector<double> stats(kItsTableSize);
    constexpr std::uint64_t kChunk = 4096;
    const std::uint64_t chunks = (kItsTableSize + kChunk - 1) / kChunk;
    const std::uint64_t table_seed =
        kItsTableSeed ^ (static_cast<std::uint64_t>(token_count) << 20) ^ vocab;
    par::parallel_for(chunks, [&](std::size_t c) {
      Rng rng(derive_seed(table_seed, c));
      const std::uint64_t begin = c * kChunk;
      const std::uint64_t end = std::min(begin + kChunk, kItsTableSize);
      for (std::uint64_t s = begin; s < end; ++s) {
        double sum = 0.0;
        for (std::uint32_t t = 0; t < token_count; ++t) {
          sum += its_token_score(rng.unit(),
                                 static_cast<std::uint32_t>(rng.below(vocab)), vocab);
        }
        stats[s] = sum;
      }
    });
    std::sort(stats.begin(), stats.end());
    return stats;
  }

  std::mutex mutex_;
  std::map<std::uint64_t, std::shared_ptr<std::vector<double>>> cache_;
};

double score_one(const Detector& d, std::span<const Token> prefix, Token token,
                 std::uint32_t position, const keys::SecretKey& sk) {
  const Vocab vocab(d.vocab_size);
  auto draw = keys::derive(sk, d.scheme, prefix, position, vocab);
  switch (d.score_kind) {
    case ScoreKind::GreenCount: {
      const auto perm = draw.permutation(d.vocab_size);
      const bool dip_family =
          d.strategy.family == reweight::Family::DiPmark ||
          d.strategy.family == reweight::Family::GammaReweight;
      const auto mask = dip_family
                            ? reweight::dipmark_green_mask(perm)
                            : reweight::green_mask_from_permutation(perm, d.strategy.gamma);
      return mask[token] ? 1.0 : 0.0;
    }
    case ScoreKind::BitSum: {
      const auto bits = reweight::synthid_bits(draw, d.strategy.layers, d.vocab_size);
      double s = 0.0;
      for (std::uint32_t layer = 0; layer < d.strategy.layers; ++layer) {
        s += bits[static_cast<std::size_t>(layer) * d.vocab_size + token];
      }
      return s;
    }
    case ScoreKind::ExpScore: {
      std::vector<double> uniforms(d.vocab_size);
      for (auto& u : uniforms) u = draw.uniform();
      const double u = uniforms[token];
      const double raw = -std::log1p(-u);
      return std::min(raw, d.score_bound);
    }
    case ScoreKind::ItsScore: {
      const auto perm = draw.permutation(d.vocab_size);
      const double u = draw.uniform();
      std::uint32_t rank = 0;
      for (std::uint32_t j = 0; j < d.vocab_size; ++j) {
        if (perm[j] == token) {
          rank = j;
          break;
        }
      }
      return its_token_score(u, rank, d.vocab_size);
    }
    case ScoreKind::McmarkSegment: {
      const auto key = reweight::mcmark_key(draw, d.strategy.segments, d.vocab_size);
      return reweight::mcmark_member(key, token) ? 1.0 : 0.0;
    }
  }
  throw ContractError("score_one: unknown score kind");
}

}  // namespace

Detector Detector::for_strategy(const reweight::WatermarkStrategy& strategy,
                                const keys::ContextScheme& scheme, const Vocab& vocab) {
  Detector d;
  d.strategy = strategy;
  d.scheme = scheme;
  d.vocab_size = vocab.size;
  switch (strategy.family) {
    case reweight::Family::KGW:
    case reweight::Family::Unigram:
    case reweight::Family::STA1:
    case reweight::Family::DiPmark:
    case reweight::Family::GammaReweight:
      d.score_kind = ScoreKind::GreenCount;
      d.score_bound = 1.0;
      break;
    case reweight::Family::SynthID:
      d.score_kind = ScoreKind::BitSum;
      d.score_bound = static_cast<double>(strategy.layers);
      break;
    case reweight::Family::EXP:
      d.score_kind = ScoreKind::ExpScore;
      d.score_bound = kExpClip;
      break;
    case reweight::Family::ITS:
      d.score_kind = ScoreKind::ItsScore;
      d.score_bound = 1.0;
      break;
    case reweight::Family::MCmark:
      if (vocab.size % strategy.segments != 0) {
        throw InputDomainError(
            "mcmark detector: vocab size must be divisible by the segment count "
            "for an exact null rate");
      }
      d.score_kind = ScoreKind::McmarkSegment;
      d.score_bound = 1.0;
      break;
  }
  return d;
}

double Detector::null_rate() const {
  switch (score_kind) {
    case ScoreKind::GreenCount: {
      const bool dip_family = strategy.family == reweight::Family::DiPmark ||
                              strategy.family == reweight::Family::GammaReweight;
      const std::uint32_t g = dip_family
                                  ? (vocab_size + 1) / 2
                                  : reweight::green_set_size(vocab_size, strategy.gamma);
      return static_cast<double>(g) / static_cast<double>(vocab_size);
    }
    case ScoreKind::BitSum:
      return 0.5;
    case ScoreKind::McmarkSegment:
      return 1.0 / static_cast<double>(strategy.segments);
    case ScoreKind::ExpScore:
    case ScoreKind::ItsScore:
      throw ContractError("null_rate: not a binomial score kind");
  }
  throw ContractError("null_rate: unknown score kind");
}

DetectionResult score_sequence(const Detector& detector, const TokenSeq& tokens,
                               const keys::SecretKey& sk) {
  if (tokens.empty()) throw InputDomainError("score_sequence: empty sequence");
  for (Token t : tokens) {
    if (t >= detector.vocab_size) {
      throw InputDomainError("score_sequence: token out of vocab range");
    }
  }
  DetectionResult result;
  result.token_count = static_cast<std::uint32_t>(tokens.size());
  result.per_token_scores.resize(tokens.size());
  double sum = 0.0;
  const std::span<const Token> view(tokens);
  for (std::uint32_t t = 0; t < tokens.size(); ++t) {
    const double s = score_one(detector, view.subspan(0, t), tokens[t], t, sk);
    result.per_token_scores[t] = s;
    sum += s;
  }
  result.statistic = sum;
  result.p_value = p_value(detector, sum, result.token_count);
  return result;
}

double sequence_statistic(const Detector& detector, const TokenSeq& tokens,
                          const keys::SecretKey& sk) {
  if (tokens.empty()) throw InputDomainError("sequence_statistic: empty sequence");
  double sum = 0.0;
  const std::span<const Token> view(tokens);
  for (std::uint32_t t = 0; t < tokens.size(); ++t) {
    sum += score_one(detector, view.subspan(0, t), tokens[t], t, sk);
  }
  return sum;
}

double p_value(const Detector& detector, double statistic, std::uint32_t token_count) {
  if (token_count == 0) throw InputDomainError("p_value: empty sequence");
  const double max_s = static_cast<double>(token_count) * detector.score_bound;
  if (statistic < -1e-9 || statistic > max_s + 1e-9) {
    throw InputDomainError("p_value: statistic outside [0, T*B]");
  }
  switch (detector.score_kind) {
    case ScoreKind::GreenCount:
    case ScoreKind::McmarkSegment: {
      const long long k = std::llround(statistic);
      return stats::binomial_upper_tail(k, token_count, detector.null_rate());
    }
    case ScoreKind::BitSum: {
      const long long k = std::llround(statistic);
      const long long n = static_cast<long long>(token_count) * detector.strategy.layers;
      return stats::binomial_upper_tail(k, n, 0.5);
    }
    case ScoreKind::ExpScore:
      // Clipping only lowers the statistic, so the unclipped gamma tail is
      // conservative (documented bias < 5e-5 per token).
      return stats::gamma_upper_tail(static_cast<double>(token_count), statistic);
    case ScoreKind::ItsScore: {
      const auto& table =
          ItsNullTables::instance().table(token_count, detector.vocab_size);
      const auto it = std::lower_bound(table.begin(), table.end(), statistic);
      const auto ge = static_cast<double>(table.end() - it);
      return (1.0 + ge) / (static_cast<double>(table.size()) + 1.0);
    }
  }
  throw ContractError("p_value: unknown score kind");
}

double detection_threshold(const Detector& detector, std::uint32_t token_count,
                           double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InputDomainError("detection_threshold: alpha in (0,1)");
  }
  switch (detector.score_kind) {
    case ScoreKind::GreenCount:
    case ScoreKind::McmarkSegment:
    case ScoreKind::BitSum: {
      const long long trials =
          detector.score_kind == ScoreKind::BitSum
              ? static_cast<long long>(token_count) * detector.strategy.layers
              : static_cast<long long>(token_count);
      const double rate = detector.score_kind == ScoreKind::BitSum
                              ? 0.5
                              : detector.null_rate();
      long long lo = 0;
      long long hi = trials + 1;
      while (lo < hi) {  // first k with tail(k) <= alpha
        const long long mid = lo + (hi - lo) / 2;
        if (stats::binomial_upper_tail(mid, trials, rate) <= alpha) {
          hi = mid;
        } else {
          lo = mid + 1;
        }
      }
      // Bit-sum statistics count per-token sums; the threshold is on the
      // total either way since both use the same binomial grid.
      return static_cast<double>(lo);
    }
    case ScoreKind::ExpScore: {
      double lo = 0.0;
      double hi = static_cast<double>(token_count) * detector.score_bound;
      for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (stats::gamma_upper_tail(token_count, mid) <= alpha) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      return hi;
    }
    case ScoreKind::ItsScore:
      throw ContractError("detection_threshold: its_score uses a Monte Carlo null");
  }
  throw ContractError("detection_threshold: unknown score kind");
}

double tpr_at_fpr(const std::vector<double>& pos_pvalues, double fpr) {
  if (pos_pvalues.empty()) throw InputDomainError("tpr_at_fpr: empty input");
  if (!(fpr > 0.0 && fpr < 1.0)) throw InputDomainError("tpr_at_fpr: fpr in (0,1)");
  std::size_t hits = 0;
  for (double p : pos_pvalues) {
    if (p <= fpr) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pos_pvalues.size());
}

double auroc(const std::vector<double>& pos_pvalues,
             const std::vector<double>& neg_pvalues) {
  if (pos_pvalues.empty() || neg_pvalues.empty()) {
    throw InputDomainError("auroc: both sample sets must be nonempty");
  }
  struct Item {
    double p;
    bool positive;
  };
  std::vector<Item> pool;
  pool.reserve(pos_pvalues.size() + neg_pvalues.size());
  for (double p : pos_pvalues) pool.push_back({p, true});
  for (double p : neg_pvalues) pool.push_back({p, false});
  std::sort(pool.begin(), pool.end(),
            [](const Item& a, const Item& b) { return a.p < b.p; });

  // Rank sum of positives with average ranks on ties; smaller p = stronger.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < pool.size()) {
    std::size_t j = i;
    while (j < pool.size() && pool[j].p == pool[i].p) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (pool[k].positive) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double n_pos = static_cast<double>(pos_pvalues.size());
  const double n_neg = static_cast<double>(neg_pvalues.size());
  const double above = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
  return 1.0 - above / (n_pos * n_neg);
}

double median_pvalue(std::vector<double> pvalues) {
  if (pvalues.empty()) throw InputDomainError("median_pvalue: empty input");
  std::sort(pvalues.begin(), pvalues.end());
  return pvalues[(pvalues.size() - 1) / 2];  // lower median
}

void warm_its_null_table(std::uint32_t token_count, std::uint32_t vocab_size) {
  ItsNullTables::instance().table(token_count, vocab_size);
}

}  // namespace wmbench::detect
