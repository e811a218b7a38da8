#pragma once

/**
 * Shared fixtures and independent oracles for the test suites. Everything
 * here deliberately avoids the library's own computation paths: the
 * Levenshtein oracle is a plain DP, the binomial tail is a direct
 * log-space summation, and the DiPmark oracle integrates the reweight
 * density on a fine grid.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "wmbench/types.hpp"

namespace wmbench::testing {

/// The V <= 6 distribution fixtures used across unbiasedness suites.
inline std::vector<TokenDistribution> unbiasedness_fixtures() {
  const std::vector<std::vector<double>> raw = {
      {0.5, 0.5},
      {0.9, 0.1},
      {0.99, 0.01},
      {1.0, 0.0},
      {1.0 / 3, 1.0 / 3, 1.0 / 3},
      {0.7, 0.2, 0.1},
      {0.05, 0.9, 0.05},
      {0.0, 0.5, 0.5},
      {0.25, 0.25, 0.25, 0.25},
      {0.4, 0.3, 0.2, 0.1},
      {0.97, 0.01, 0.01, 0.01},
      {0.1, 0.2, 0.3, 0.4},
      {0.5, 0.5, 0.0, 0.0},
      {0.2, 0.2, 0.2, 0.2, 0.2},
      {0.30, 0.25, 0.20, 0.15, 0.10},
      {0.6, 0.1, 0.1, 0.1, 0.1},
      {1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6},
      {0.35, 0.25, 0.15, 0.10, 0.10, 0.05},
      {0.01, 0.01, 0.01, 0.01, 0.01, 0.95},
      {0.0, 0.0, 0.0, 0.0, 0.0, 1.0},
  };
  std::vector<TokenDistribution> out;
  out.reserve(raw.size());
  for (const auto& p : raw) out.push_back(TokenDistribution::validated(p));
  return out;
}

inline double max_norm_diff(const TokenDistribution& a, const TokenDistribution& b) {
  double d = 0.0;
  for (std::uint32_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

/// Plain DP Levenshtein distance over token sequences.
inline std::uint32_t levenshtein(const TokenSeq& a, const TokenSeq& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<std::uint32_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<std::uint32_t>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

/// Direct log-space summation of the binomial upper tail P(X >= k).
inline double binomial_tail_direct(long long k, long long n, double p) {
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  long double total = 0.0L;
  for (long long j = k; j <= n; ++j) {
    const long double lg = std::lgamma(static_cast<long double>(n + 1)) -
                           std::lgamma(static_cast<long double>(j + 1)) -
                           std::lgamma(static_cast<long double>(n - j + 1)) +
                           static_cast<long double>(j) * std::log(static_cast<long double>(p)) +
                           static_cast<long double>(n - j) *
                               std::log(static_cast<long double>(1.0 - p));
    total += std::exp(lg);
  }
  return static_cast<double>(std::min(total, 1.0L));
}

/**
 * Riemann-sum oracle for the DiPmark transform: the reweight density over
 * the permuted cdf axis is w(t) = [t > alpha] + [t > 1 - alpha]; a token's
 * mass is the integral of w over its cdf interval.
 */
inline std::vector<double> dipmark_riemann(const TokenDistribution& dist,
                                           const std::vector<Token>& perm, double alpha,
                                           std::size_t cells = 2'000'000) {
  std::vector<double> out(dist.size(), 0.0);
  std::vector<double> cuts;  // permuted cdf breakpoints
  cuts.push_back(0.0);
  double acc = 0.0;
  for (std::uint32_t j = 0; j < dist.size(); ++j) {
    acc += dist[perm[j]];
    cuts.push_back(acc);
  }
  const double h = 1.0 / static_cast<double>(cells);
  std::size_t j = 0;
  for (std::size_t c = 0; c < cells; ++c) {
    const double t = (static_cast<double>(c) + 0.5) * h;
    while (j + 1 < dist.size() && t >= cuts[j + 1]) ++j;
    const double w = (t > alpha ? 1.0 : 0.0) + (t > 1.0 - alpha ? 1.0 : 0.0);
    out[perm[j]] += w * h;
  }
  return out;
}

}  // namespace wmbench::testing
