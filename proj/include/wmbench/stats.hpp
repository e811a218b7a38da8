#pragma once

/**
 * Shared statistics helpers: exact discrete tails, gamma tails, divergence
 * measures, and a couple of classical goodness-of-fit statistics used by
 * the test suites. Special functions are backed by GSL.
 */

#include <cstddef>
#include <vector>

namespace wmbench::stats {

/// P(X >= k) for X ~ Binomial(n, p). Exact one-sided upper tail.
double binomial_upper_tail(long long k, long long n, double p);

/// P(G >= x) for G ~ Gamma(shape a, scale 1): regularized Q(a, x).
double gamma_upper_tail(double a, double x);

/// Quantile c with P(ChiSq(dof) >= c) = alpha.
double chi_square_upper_quantile(double alpha, double dof);

/// Pearson chi-square statistic of observed counts against expected probs.
double chi_square_statistic(const std::vector<long long>& counts,
                            const std::vector<double>& probs);

/// One-sample Kolmogorov-Smirnov statistic against U[0,1). Sorts a copy.
double ks_statistic_uniform(std::vector<double> samples);

/// Asymptotic KS critical value at level alpha for n samples.
double ks_critical_value(double alpha, std::size_t n);

/// Shannon entropy in nats. Zero entries contribute zero.
double entropy(const std::vector<double>& probs);

/// Total variation distance (1/2) * sum |p - q|.
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

double mean(const std::vector<double>& xs);
double sample_stddev(const std::vector<double>& xs);

}  // namespace wmbench::stats
