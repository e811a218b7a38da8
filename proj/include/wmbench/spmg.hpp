#pragma once

/**
 * Repeated-prompt unbiasedness: the single-prompt multi-generation gap,
 * the clone-calibrated DetWmk statistic with its McDiarmid threshold, and
 * the product-distribution divergence behind the impossibility argument.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wmbench/generation.hpp"
#include "wmbench/lm.hpp"
#include "wmbench/types.hpp"

namespace wmbench::spmg {

/**
 * Bounded per-generation performance surrogate |Met(g)| <= A.
 *   ClippedMeanNll    mean per-token -log P_M, clipped to [0, A], A = 10
 *   ClippedPerplexity exp(mean nll) clipped to [0, A], A = e^10
 *   GreenRate         fraction of tokens in the keyed green set, A = 1
 *                     (keyed with the evaluated strategy's own sk/scheme)
 */
struct MetricSurrogate {
  enum class Kind { ClippedMeanNll, ClippedPerplexity, GreenRate };
  Kind kind = Kind::GreenRate;
  double bound = 1.0;

  // GreenRate configuration
  keys::SecretKey green_sk;
  keys::ContextScheme green_scheme = keys::ContextScheme::ngram(2);
  double green_gamma = 0.5;
  std::uint32_t green_vocab = 0;

  static MetricSurrogate clipped_mean_nll();
  static MetricSurrogate clipped_perplexity();
  static MetricSurrogate green_rate(keys::SecretKey sk, keys::ContextScheme scheme,
                                    const Vocab& vocab, double gamma = 0.5);

  /// Generations already carry base-model log-probs, so no LM is needed here.
  double evaluate(const lm::Generation& g) const;
  std::string name() const;
};

/// A model under SPMG evaluation: the base toy LM plus an optional
/// watermark layer with a fixed key, and a private sampling-seed stream.
struct TestModel {
  lm::ToyLM base;
  lm::SamplingPolicy policy;
  std::uint64_t sampling_seed = 0;

  static TestModel plain(const lm::ToyLM& base, std::uint64_t sampling_seed);
  static TestModel watermarked(const lm::ToyLM& base, reweight::WatermarkStrategy s,
                               keys::SecretKey sk, keys::ContextScheme scheme,
                               std::uint64_t sampling_seed);
};

struct SpmgBudget {
  std::uint32_t prompts = 10;        // n
  std::uint32_t generations = 100;   // m per prompt (key fixed across them)
  std::uint32_t gen_len = 32;
  std::uint32_t prompt_len = 4;
  double alpha = 0.05;
  std::uint64_t seed = 1;
};

struct SPMGReport {
  std::vector<double> per_prompt_mean_base;   // P_M
  std::vector<double> per_prompt_mean_test;   // P_T
  std::vector<double> per_prompt_mean_clone;  // P_M'
  double delta_mt = 0.0;
  double delta_mm = 0.0;
  double detwmk = 0.0;  // delta_mt - delta_mm exactly
  double threshold = 0.0;
  bool reject = false;  // detwmk >= threshold
};

/// (1/n) sum_i | mean_j Met(g_ij(P)) - mean_j Met(g_ij(Q)) |.
double spmg_gap(const TestModel& model_p, const TestModel& model_q,
                const std::vector<TokenSeq>& prompts, std::uint32_t generations,
                std::uint32_t gen_len, const MetricSurrogate& met, std::uint64_t seed);

/// Full calibrated statistic with an i.i.d. clone baseline P_M'.
SPMGReport detwmk(const TestModel& base, const TestModel& test,
                  const MetricSurrogate& met, const SpmgBudget& budget);

/// Theorem-2-consistent two-sided deviation bound A*sqrt(12 ln(2/alpha)/(m n)).
double mcdiarmid_threshold(double bound, std::uint32_t generations,
                           std::uint32_t prompts, double alpha);

/// Bhattacharyya coefficient sum_x sqrt(P(x) Q(x)) in (0, 1].
double bhattacharyya(const TokenDistribution& p, const TokenDistribution& q);

/// TV(P^m, Q^m) >= 1 - BC(P,Q)^m; the product-amplification lower bound.
double tv_product_lower_bound(const TokenDistribution& p, const TokenDistribution& q,
                              std::uint32_t m);

/**
 * Impossibility witness for a detectable strategy under a fixed key:
 * searches toy contexts for one where the fixed-key conditional P_W
 * deviates from P_M, and reports how many repeated queries make the
 * product laws essentially disjoint.
 */
struct DivergenceWitness {
  TokenSeq context;
  double tv = 0.0;                       // TV(P_W(.|ctx,k), P_M(.|ctx))
  double bc = 1.0;                       // Bhattacharyya coefficient
  std::optional<std::uint32_t> m_needed; // smallest m with 1 - bc^m >= target
};

DivergenceWitness fixed_key_divergence(const lm::ToyLM& lm,
                                       const reweight::WatermarkStrategy& strategy,
                                       const keys::SecretKey& sk,
                                       const keys::ContextScheme& scheme,
                                       double tv_floor = 0.01, double target = 0.99,
                                       std::uint32_t m_max = 1000,
                                       std::uint32_t context_candidates = 64);

/// Exact fixed-key conditional law P_W(. | draw) for any family.
TokenDistribution fixed_key_law(const reweight::WatermarkStrategy& strategy,
                                const TokenDistribution& dist, keys::KeyDraw& draw);

}  // namespace wmbench::spmg
