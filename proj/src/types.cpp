#include "wmbench/types.hpp"

#include <cmath>

namespace wmbench {

TokenDistribution TokenDistribution::validated(std::vector<double> p) {
  TokenDistribution d(std::move(p));
  if (!d.is_valid()) throw InputDomainError("TokenDistribution: invalid probability vector");
  return d;
}

TokenDistribution TokenDistribution::uniform(std::uint32_t v) {
  return TokenDistribution(std::vector<double>(v, 1.0 / static_cast<double>(v)));
}

TokenDistribution TokenDistribution::one_hot(std::uint32_t v, Token hot) {
  if (hot >= v) throw InputDomainError("one_hot: token out of range");
  std::vector<double> p(v, 0.0);
  p[hot] = 1.0;
  return TokenDistribution(std::move(p));
}

bool TokenDistribution::is_valid(double tol) const {
  if (probs.empty()) return false;
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

std::vector<double> TokenDistribution::cdf() const {
  std::vector<double> c(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    c[i] = acc;
  }
  if (!c.empty()) c.back() = 1.0;  // guard against rounding at the top
  return c;
}

Token TokenDistribution::sample(double u) const {
  double acc = 0.0;
  const std::size_t n = probs.size();
  for (std::size_t i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<Token>(i);
  }
  // u landed at/above the accumulated total (rounding): last positive entry.
  for (std::size_t i = n; i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<Token>(i);
  }
  return 0;
}

}  // namespace wmbench
