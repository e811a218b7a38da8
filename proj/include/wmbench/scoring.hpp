#pragma once

/**
 * Three-axis aggregation: unbiasedness, detectability, robustness. All
 * scores are reported on [0, 1].
 */

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wmbench/errors.hpp"

namespace wmbench::scoring {

/// Quality metrics for one method and the unwatermarked baseline, under
/// config 1 (many prompts, one generation) and config 2 (few prompts,
/// many generations; values are drift deltas).
struct UnbiasednessInputs {
  std::vector<double> method_cfg1;
  std::vector<double> baseline_cfg1;   // strictly positive (denominators)
  std::vector<double> method_cfg2_delta;
  std::vector<double> baseline_cfg2_delta;
};

/**
 * score = 1 - (lambda * D1 + (1 - lambda) * D2) where
 *   r1_m = |x_m - x_m^none| / x_m^none
 *   r2_m = max(0, |d_m| - |d_m^none|) / x_m^none   (noise floor removed)
 * and D1, D2 are the metric means. The published formula mentions an
 * unused shape parameter alpha; it is accepted and ignored.
 */
double unbiasedness_score(const UnbiasednessInputs& inputs, double lambda = 0.6,
                          double alpha = 1.0);

/**
 * s_tpr = 0.2 tpr5 + 0.3 tpr1 + 0.5 tpr01
 * s_p   = min(1, -log10(max(p, 1e-22)) / 22)
 * score = w_tpr * s_tpr + w_auc * auroc + w_p * s_p
 */
double detectability_score(double tpr5, double tpr1, double tpr01, double median_p,
                           double auroc,
                           const std::array<double, 3>& weights = {0.60, 0.25, 0.15});

enum class Attack { Dipper, Random30, Random20, Random10 };
enum class FprLevel { P01, P1, P5 };  // 0.1%, 1%, 5%

/// TPR table over the 4 attacks x 3 FPR levels; every cell required.
class RobustnessTable {
 public:
  void set(Attack a, FprLevel f, double tpr);
  double get(Attack a, FprLevel f) const;
  bool complete() const;

 private:
  std::map<std::pair<int, int>, double> cells_;
};

/**
 * s_a = 0.5 t_{a,0.1%} + 0.3 t_{a,1%} + 0.2 t_{a,5%}
 * R   = 0.2 s_dipper + 0.4 s_r30 + (4/15) s_r20 + (2/15) s_r10
 */
double robustness_score(const RobustnessTable& table);

/**
 * Live-run variant for attack subsets (desk-scale runs have no paraphrase
 * attack): per-attack weights are renormalized over the attacks present.
 * The full-table operation above keeps its strict contract.
 */
double robustness_score_partial(
    const std::vector<std::pair<Attack, std::array<double, 3>>>& rows);

struct ScoreCard {
  std::string method;
  std::optional<double> unbiasedness;
  std::optional<double> detectability;
  std::optional<double> robustness;
};

}  // namespace wmbench::scoring
