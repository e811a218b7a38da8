#pragma once

/**
 * Robustness certificates. One token edit can change at most R_max
 * detector scores, each bounded by B, so the additive statistic is
 * Lipschitz in edit distance:  S(x) - S(x') <= b * R_max * B  for any
 * b-edit attack. The certified l0 radius is the largest b for which
 * detection at threshold tau is guaranteed.
 */

#include <cstdint>

#include "wmbench/detect.hpp"
#include "wmbench/keys.hpp"
#include "wmbench/types.hpp"

namespace wmbench::cert {

struct Certificate {
  double statistic = 0.0;
  double threshold = 0.0;
  std::uint32_t r_max = 1;
  double score_bound = 1.0;
  /// Largest b with S - tau > b * R_max * B; -1 if S <= tau.
  std::int64_t radius = -1;
};

/// Largest integer b >= 0 satisfying S - tau > b * R_max * B, or -1.
std::int64_t certified_radius(double statistic, double tau, std::uint32_t r_max,
                              double score_bound);

Certificate make_certificate(double statistic, double tau,
                             const keys::ContextScheme& scheme, double score_bound,
                             std::uint32_t token_count);

/**
 * Exhaustive oracle for the analytic bound: true iff every sequence
 * within edit distance <= b keeps S(x') >= tau. Parallelizes over the
 * enumerated candidates.
 */
bool verify_certificate_exhaustive(const TokenSeq& tokens,
                                   const detect::Detector& detector,
                                   const keys::SecretKey& sk, double tau,
                                   std::uint32_t b);

/// Largest single-edit statistic drop over the whole edit ball of size 1.
double max_one_edit_drop(const TokenSeq& tokens, const detect::Detector& detector,
                         const keys::SecretKey& sk);

/// Expected drop of a green-count statistic from one edit of effect length R.
double expected_drop_green(double green_rate, std::uint32_t region);

/// Expected drop of a SynthID bit-sum statistic, P_s = E[s_t] under watermark.
double expected_drop_bits(double bit_mean, std::uint32_t layers, std::uint32_t region);

}  // namespace wmbench::cert
