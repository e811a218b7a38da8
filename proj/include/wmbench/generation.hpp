#pragma once

/**
 * Decoding loop around the toy model: plain or watermarked autoregressive
 * sampling. Watermark keys are derived from the generated continuation
 * only (position = index within the continuation), which is exactly the
 * view a detector has of standalone text; the prompt conditions content
 * through the model context but never enters the key.
 */

#include <cstdint>
#include <optional>
#include <vector>

#include "wmbench/keys.hpp"
#include "wmbench/lm.hpp"
#include "wmbench/reweight.hpp"
#include "wmbench/types.hpp"

namespace wmbench::lm {

struct Generation {
  std::uint64_t prompt_id = 0;
  TokenSeq tokens;
  /// Natural-log probability of each token under the base model P_M,
  /// even when sampling was watermarked (SPMG surrogates need the base
  /// model's likelihood scale).
  std::vector<double> per_token_logprob;
};

struct SamplingPolicy {
  struct Watermark {
    reweight::WatermarkStrategy strategy;
    keys::SecretKey sk;
    keys::ContextScheme scheme;
  };
  std::optional<Watermark> watermark;  // empty = plain sampling from P_M

  static SamplingPolicy plain() { return {}; }
  static SamplingPolicy watermarked(reweight::WatermarkStrategy strategy,
                                    keys::SecretKey sk, keys::ContextScheme scheme) {
    return {Watermark{std::move(strategy), std::move(sk), std::move(scheme)}};
  }
};

Generation generate(const ToyLM& lm, const TokenSeq& prompt, std::uint32_t length,
                    const SamplingPolicy& policy, std::uint64_t rng_seed,
                    std::uint64_t prompt_id = 0);

/// Deterministic prompt corpus: `count` prompts of length `prompt_len`.
std::vector<TokenSeq> make_prompt_corpus(const Vocab& vocab, std::uint32_t count,
                                         std::uint32_t prompt_len, std::uint64_t seed);

}  // namespace wmbench::lm
