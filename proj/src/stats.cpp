#include "wmbench/stats.hpp"

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_gamma.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "wmbench/errors.hpp"

namespace wmbench::stats {

namespace {

void disable_gsl_abort() {
  static std::once_flag flag;
  std::call_once(flag, [] { gsl_set_error_handler_off(); });
}

}  // namespace

double binomial_upper_tail(long long k, long long n, double p) {
  disable_gsl_abort();
  if (n < 0 || p < 0.0 || p > 1.0) throw InputDomainError("binomial_upper_tail: bad args");
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  // P(X >= k) = P(X > k - 1)
  return gsl_cdf_binomial_Q(static_cast<unsigned int>(k - 1), p,
                            static_cast<unsigned int>(n));
}

double gamma_upper_tail(double a, double x) {
  disable_gsl_abort();
  if (a <= 0.0) throw InputDomainError("gamma_upper_tail: shape must be positive");
  if (x <= 0.0) return 1.0;
  gsl_sf_result r;
  if (gsl_sf_gamma_inc_Q_e(a, x, &r) != GSL_SUCCESS) {
    return x > a ? 0.0 : 1.0;  // extreme arguments under/overflow the series
  }
  return r.val;
}

double chi_square_upper_quantile(double alpha, double dof) {
  disable_gsl_abort();
  if (alpha <= 0.0 || alpha >= 1.0 || dof <= 0.0) {
    throw InputDomainError("chi_square_upper_quantile: bad args");
  }
  return gsl_cdf_chisq_Qinv(alpha, dof);
}

double chi_square_statistic(const std::vector<long long>& counts,
                            const std::vector<double>& probs) {
  if (counts.size() != probs.size() || counts.empty()) {
    throw InputDomainError("chi_square_statistic: size mismatch");
  }
  long long total = 0;
  for (long long c : counts) total += c;
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = static_cast<double>(total) * probs[i];
    if (expected <= 0.0) {
      if (counts[i] != 0) throw InputDomainError("chi_square_statistic: mass on zero cell");
      continue;
    }
    const double d = static_cast<double>(counts[i]) - expected;
    stat += d * d / expected;
  }
  return stat;
}

double ks_statistic_uniform(std::vector<double> samples) {
  if (samples.empty()) throw InputDomainError("ks_statistic_uniform: empty");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double x = samples[i];
    const double hi = (static_cast<double>(i) + 1.0) / n - x;
    const double lo = x - static_cast<double>(i) / n;
    d = std::max(d, std::max(hi, lo));
  }
  return d;
}

double ks_critical_value(double alpha, std::size_t n) {
  if (alpha <= 0.0 || alpha >= 1.0 || n == 0) {
    throw InputDomainError("ks_critical_value: bad args");
  }
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

double entropy(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw InputDomainError("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw InputDomainError("mean: empty");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) throw InputDomainError("sample_stddev: need >= 2 samples");
  const double m = mean(xs);
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return std::sqrt(v / static_cast<double>(xs.size() - 1));
}

}  // namespace wmbench::stats
