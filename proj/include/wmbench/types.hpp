#pragma once

/**
 * Core token-domain types. Tokens are opaque dense integers 0..V-1; there
 * are no strings or tokenizers anywhere in the toolkit.
 */

#include <cstdint>
#include <vector>

#include "wmbench/errors.hpp"

namespace wmbench {

using Token = std::uint32_t;
using TokenSeq = std::vector<Token>;

struct Vocab {
  std::uint32_t size = 0;

  explicit Vocab(std::uint32_t v) : size(v) {
    if (v < 2) throw InputDomainError("Vocab: size must be >= 2");
  }

  bool contains(Token t) const { return t < size; }

  /// Padding sentinel for short n-gram contexts: one past the last token id.
  Token sentinel() const { return size; }
};

/**
 * Probability vector over a vocabulary. Entries are >= 0 and sum to 1
 * within 1e-12 (checked on construction via `validated`).
 */
struct TokenDistribution {
  std::vector<double> probs;

  TokenDistribution() = default;
  explicit TokenDistribution(std::vector<double> p) : probs(std::move(p)) {}

  static TokenDistribution validated(std::vector<double> p);
  static TokenDistribution uniform(std::uint32_t v);
  static TokenDistribution one_hot(std::uint32_t v, Token hot);

  std::uint32_t size() const { return static_cast<std::uint32_t>(probs.size()); }
  double operator[](std::size_t i) const { return probs[i]; }

  bool is_valid(double tol = 1e-12) const;

  /// Cumulative sums; cdf[j] = sum of probs[0..j].
  std::vector<double> cdf() const;

  /// Inverse-cdf sample: smallest j with u < cdf[j].
  Token sample(double u) const;
};

}  // namespace wmbench
