#pragma once

/**
 * Deterministic synthetic autoregressive token model.
 *
 * The next-token distribution for a context is a seeded Dirichlet-style
 * draw: the truncated context is hashed with the model seed into a PRF
 * stream, V positive Gamma(concentration) variates are drawn from that
 * stream and normalized. Identical (seed, context_order, concentration,
 * prefix) always yields the bitwise-identical distribution, which makes
 * every expectation in the benchmark either exactly computable or cheaply
 * estimable without model weights.
 */

#include <cstdint>
#include <memory>

#include "wmbench/types.hpp"

namespace wmbench::lm {

class ToyLM {
 public:
  ToyLM(std::uint64_t seed, std::uint32_t context_order, double concentration,
        Vocab vocab);

  std::uint64_t seed() const { return seed_; }
  std::uint32_t context_order() const { return context_order_; }
  double concentration() const { return concentration_; }
  const Vocab& vocab() const { return vocab_; }

  /// Same parameters, different identity; used for i.i.d. model clones.
  ToyLM clone() const { return ToyLM(seed_, context_order_, concentration_, vocab_); }

  /**
   * Next-token distribution given a prefix. Pure function of the model
   * parameters and the last min(context_order, |prefix|) prefix tokens.
   * Thread-safe; results are memoized per context.
   */
  const TokenDistribution& next_distribution(const TokenSeq& prefix) const;

  /// log P_M(token | prefix), natural log.
  double log_prob(const TokenSeq& prefix, Token token) const;

 private:
  std::uint64_t seed_;
  std::uint32_t context_order_;
  double concentration_;
  Vocab vocab_;

  struct Cache;
  std::shared_ptr<Cache> cache_;  // memo of context -> distribution
};

}  // namespace wmbench::lm
