#include "wmbench/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace wmbench::scoring {

namespace {

constexpr double kPClip = 1e-22;

double clamp01(double x) { return std::max(0.0, std::min(1.0, x)); }

void require_rate(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) throw InputDomainError(std::string(what) + " in [0,1]");
}

}  // namespace

double unbiasedness_score(const UnbiasednessInputs& inputs, double lambda,
                          double alpha) {
  (void)alpha;  // accepted for interface parity; the formula never uses it
  const std::size_t m = inputs.method_cfg1.size();
  if (m == 0 || inputs.baseline_cfg1.size() != m ||
      inputs.method_cfg2_delta.size() != m || inputs.baseline_cfg2_delta.size() != m) {
    throw InputDomainError("unbiasedness_score: metric vectors must align");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InputDomainError("unbiasedness_score: lambda in [0,1]");
  }
  double d1 = 0.0;
  double d2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double base = inputs.baseline_cfg1[i];
    if (!(base > 0.0)) {
      throw InputDomainError("unbiasedness_score: baseline metrics must be positive");
    }
    d1 += std::abs(inputs.method_cfg1[i] - base) / base;
    const double excess = std::max(
        0.0, std::abs(inputs.method_cfg2_delta[i]) - std::abs(inputs.baseline_cfg2_delta[i]));
    d2 += excess / base;
  }
  d1 /= static_cast<double>(m);
  d2 /= static_cast<double>(m);
  const double d = lambda * d1 + (1.0 - lambda) * d2;
  return clamp01(1.0 - d);
}

double detectability_score(double tpr5, double tpr1, double tpr01, double median_p,
                           double auroc, const std::array<double, 3>& weights) {
  require_rate(tpr5, "tpr5");
  require_rate(tpr1, "tpr1");
  require_rate(tpr01, "tpr01");
  require_rate(auroc, "auroc");
  if (!(median_p > 0.0 && median_p <= 1.0)) {
    throw InputDomainError("detectability_score: median_p in (0,1]");
  }
  const double s_tpr = 0.2 * tpr5 + 0.3 * tpr1 + 0.5 * tpr01;
  const double s_p =
      std::min(1.0, -std::log10(std::max(median_p, kPClip)) / 22.0);
  return weights[0] * s_tpr + weights[1] * auroc + weights[2] * s_p;
}

void RobustnessTable::set(Attack a, FprLevel f, double tpr) {
  require_rate(tpr, "tpr");
  cells_[{static_cast<int>(a), static_cast<int>(f)}] = tpr;
}

double RobustnessTable::get(Attack a, FprLevel f) const {
  const auto it = cells_.find({static_cast<int>(a), static_cast<int>(f)});
  if (it == cells_.end()) throw InputDomainError("RobustnessTable: missing cell");
  return it->second;
}

bool RobustnessTable::complete() const { return cells_.size() == 12; }

namespace {

double per_attack_score(double t01, double t1, double t5) {
  return 0.5 * t01 + 0.3 * t1 + 0.2 * t5;
}

double attack_weight(Attack a) {
  switch (a) {
    case Attack::Dipper:
      return 0.2;
    case Attack::Random30:
      return 0.4;
    case Attack::Random20:
      return 4.0 / 15.0;
    case Attack::Random10:
      return 2.0 / 15.0;
  }
  throw InputDomainError("attack_weight: unknown attack");
}

}  // namespace

double robustness_score(const RobustnessTable& table) {
  if (!table.complete()) throw InputDomainError("robustness_score: incomplete table");
  double r = 0.0;
  for (Attack a : {Attack::Dipper, Attack::Random30, Attack::Random20, Attack::Random10}) {
    const double s = per_attack_score(table.get(a, FprLevel::P01),
                                      table.get(a, FprLevel::P1),
                                      table.get(a, FprLevel::P5));
    r += attack_weight(a) * s;
  }
  return r;
}

double robustness_score_partial(
    const std::vector<std::pair<Attack, std::array<double, 3>>>& rows) {
  if (rows.empty()) throw InputDomainError("robustness_score_partial: no attacks");
  double weight_sum = 0.0;
  double acc = 0.0;
  for (const auto& [attack, tpr] : rows) {
    // tpr = {t_{0.1%}, t_{1%}, t_{5%}}
    const double w = attack_weight(attack);
    acc += w * per_attack_score(tpr[0], tpr[1], tpr[2]);
    weight_sum += w;
  }
  return acc / weight_sum;
}

}  // namespace wmbench::scoring
