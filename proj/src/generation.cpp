#include "wmbench/generation.hpp"

#include <cmath>

#include "wmbench/random.hpp"

namespace wmbench::lm {

Generation generate(const ToyLM& lm, const TokenSeq& prompt, std::uint32_t length,
                    const SamplingPolicy& policy, std::uint64_t rng_seed,
                    std::uint64_t prompt_id) {
  if (length < 1) throw InputDomainError("generate: length must be >= 1");
  for (Token t : prompt) {
    if (!lm.vocab().contains(t)) {
      throw InputDomainError("generate: prompt token out of vocab range");
    }
  }

  Rng rng(rng_seed);
  Generation g;
  g.prompt_id = prompt_id;
  g.tokens.reserve(length);
  g.per_token_logprob.reserve(length);

  TokenSeq model_ctx = prompt;  // conditions the LM; never enters the key
  model_ctx.reserve(prompt.size() + length);

  for (std::uint32_t pos = 0; pos < length; ++pos) {
    const TokenDistribution& dist = lm.next_distribution(model_ctx);
    Token token;
    if (policy.watermark) {
      const auto& wm = *policy.watermark;
      auto draw = keys::derive(wm.sk, wm.scheme, g.tokens, pos, lm.vocab());
      token = reweight::watermarked_sample(wm.strategy, dist, draw, rng).token;
    } else {
      token = dist.sample(rng.unit());
    }
    g.tokens.push_back(token);
    g.per_token_logprob.push_back(std::log(dist[token]));
    model_ctx.push_back(token);
  }
  return g;
}

std::vector<TokenSeq> make_prompt_corpus(const Vocab& vocab, std::uint32_t count,
                                         std::uint32_t prompt_len, std::uint64_t seed) {
  std::vector<TokenSeq> prompts(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    TokenSeq p(prompt_len);
    for (auto& t : p) t = static_cast<Token>(rng.below(vocab.size));
    prompts[i] = std::move(p);
  }
  return prompts;
}

}  // namespace wmbench::lm
