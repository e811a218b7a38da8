#pragma once

/**
 * Watermark detection: per-token scores, additive statistics, analytic and
 * Monte Carlo calibrated p-values, and aggregate metrics.
 *
 * Score kinds and exact one-sided nulls:
 *   green_count  s_t = [token in keyed green set], B = 1
 *                null Binomial(T, green_size/V)
 *   bit_sum      s_t = sum of m keyed bits, B = m; null Binomial(T*m, 1/2)
 *   exp_score    s_t = -log(1 - u_token) clipped to [0, 10]
 *                null via Gamma(T, 1) upper tail (conservative under clipping)
 *   its_score    s_t = 1 - |u_t - rank(token)/(V-1)|, B = 1
 *                null from a Monte Carlo table (1e6 sequences per T bucket)
 *   mcmark_segment  s_t = [token in selected segment], B = 1
 *                null Binomial(T, 1/l)
 */

#include <cstdint>
#include <vector>

#include "wmbench/keys.hpp"
#include "wmbench/reweight.hpp"
#include "wmbench/types.hpp"

namespace wmbench::detect {

enum class ScoreKind { GreenCount, BitSum, ExpScore, ItsScore, McmarkSegment };

struct Detector {
  reweight::WatermarkStrategy strategy;
  keys::ContextScheme scheme;
  ScoreKind score_kind = ScoreKind::GreenCount;
  double score_bound = 1.0;     // B; every per-token score lies in [0, B]
  std::uint32_t vocab_size = 0;

  /// Canonical detector for a strategy (score kind, bound, null rate).
  static Detector for_strategy(const reweight::WatermarkStrategy& strategy,
                               const keys::ContextScheme& scheme, const Vocab& vocab);

  /// Per-token null success rate for the binomial score kinds.
  double null_rate() const;
};

struct DetectionResult {
  double statistic = 0.0;
  std::uint32_t token_count = 0;
  double p_value = 1.0;
  std::vector<double> per_token_scores;
};

/// Scores a full sequence and attaches the analytic p-value.
DetectionResult score_sequence(const Detector& detector, const TokenSeq& tokens,
                               const keys::SecretKey& sk);

/// Just the additive statistic; used by edit-ball sweeps.
double sequence_statistic(const Detector& detector, const TokenSeq& tokens,
                          const keys::SecretKey& sk);

/// One-sided null tail P(S_null >= S) for a length-T sequence.
double p_value(const Detector& detector, double statistic, std::uint32_t token_count);

/**
 * Smallest statistic with p_value <= alpha at this length (the analytic
 * decision threshold tau). Defined for the analytic-null score kinds;
 * throws ContractError for its_score (Monte Carlo null, not certified).
 */
double detection_threshold(const Detector& detector, std::uint32_t token_count,
                           double alpha);

/// Fraction of positive p-values <= fpr (analytic-null thresholding).
double tpr_at_fpr(const std::vector<double>& pos_pvalues, double fpr);

/// Rank-based Mann-Whitney AUROC on statistic -p; ties count 1/2.
double auroc(const std::vector<double>& pos_pvalues,
             const std::vector<double>& neg_pvalues);

/// Lower median.
double median_pvalue(std::vector<double> pvalues);

/**
 * Shared-table calibration for the its_score null. Tables are simulated
 * once per (T, V) bucket with a fixed internal seed and cached; the
 * p-value is the standard conservative (1 + #{null >= S}) / (N + 1).
 */
void warm_its_null_table(std::uint32_t token_count, std::uint32_t vocab_size);

}  // namespace wmbench::detect
