#include <cmath>
#include <set>

#include "doctest.h"
#include "test_support.hpp"
#include "wmbench/generation.hpp"
#include "wmbench/lm.hpp"
#include "wmbench/random.hpp"
#include "wmbench/stats.hpp"

using namespace wmbench;

TEST_CASE("TokenDistribution validation and sampling") {
  CHECK_THROWS_AS(TokenDistribution::validated({0.5, 0.6}), InputDomainError);
  CHECK_THROWS_AS(TokenDistribution::validated({-0.1, 1.1}), InputDomainError);
  CHECK_THROWS_AS(TokenDistribution::validated({}), InputDomainError);

  const auto d = TokenDistribution::validated({0.4, 0.3, 0.2, 0.1});
  CHECK(d.sample(0.0) == 0);
  CHECK(d.sample(0.39) == 0);
  CHECK(d.sample(0.65) == 1);
  CHECK(d.sample(0.95) == 3);

  // One-hot sampling returns the hot token for every coordinate.
  const auto hot = TokenDistribution::one_hot(5, 3);
  for (double u : {0.0, 0.2, 0.5, 0.99}) CHECK(hot.sample(u) == 3);
}

TEST_CASE("Vocab bounds") {
  CHECK_THROWS_AS(Vocab(1), InputDomainError);
  const Vocab v(32);
  CHECK(v.contains(31));
  CHECK_FALSE(v.contains(32));
  CHECK(v.sentinel() == 32);
}

TEST_CASE("ToyLM determinism and context truncation") {
  const lm::ToyLM model(7, 2, 1.0, Vocab(32));
  const TokenSeq prefix = {1, 2, 3, 4};
  const auto& a = model.next_distribution(prefix);
  const auto& b = model.next_distribution(prefix);
  CHECK(a.probs == b.probs);  // bitwise identical

  // Only the last context_order tokens matter.
  const auto& c = model.next_distribution({9, 9, 3, 4});
  CHECK(a.probs == c.probs);
  const auto& d = model.next_distribution({1, 2, 3, 5});
  CHECK(a.probs != d.probs);

  // A fresh instance with identical parameters reproduces the numbers.
  const lm::ToyLM again(7, 2, 1.0, Vocab(32));
  CHECK(again.next_distribution(prefix).probs == a.probs);

  CHECK_THROWS_AS(model.next_distribution({99}), InputDomainError);
}

TEST_CASE("ToyLM entropy grows with concentration") {
  const TokenSeq prefix = {3, 11};
  double prev = -1.0;
  for (double conc : {0.1, 1.0, 10.0, 100.0}) {
    const lm::ToyLM model(7, 2, conc, Vocab(32));
    const double h = stats::entropy(model.next_distribution(prefix).probs);
    CHECK(h > prev);
    prev = h;
  }
  // At high concentration the distribution approaches uniform.
  CHECK(prev > 0.98 * std::log(32.0));
}

TEST_CASE("ToyLM sampling matches next_distribution (chi-square)") {
  const lm::ToyLM model(21, 2, 1.0, Vocab(8));
  const TokenSeq prefix = {1, 5};
  const auto& dist = model.next_distribution(prefix);
  Rng rng(99);
  std::vector<long long> counts(8, 0);
  const long long n = 100'000;
  for (long long i = 0; i < n; ++i) counts[dist.sample(rng.unit())]++;
  const double stat = stats::chi_square_statistic(counts, dist.probs);
  CHECK(stat < stats::chi_square_upper_quantile(0.001, 7.0));
}

TEST_CASE("generate: determinism, lengths, base-model log-probs") {
  const lm::ToyLM model(7, 2, 1.0, Vocab(32));
  const TokenSeq prompt = {4, 9, 17};
  const auto g1 = lm::generate(model, prompt, 20, lm::SamplingPolicy::plain(), 555, 3);
  const auto g2 = lm::generate(model, prompt, 20, lm::SamplingPolicy::plain(), 555, 3);
  CHECK(g1.tokens == g2.tokens);
  CHECK(g1.per_token_logprob == g2.per_token_logprob);
  CHECK(g1.prompt_id == 3);
  CHECK(g1.tokens.size() == 20);
  CHECK(g1.per_token_logprob.size() == g1.tokens.size());

  // Log-probs are the base model's, recomputable from the prefix chain.
  TokenSeq ctx = prompt;
  for (std::size_t t = 0; t < g1.tokens.size(); ++t) {
    CHECK(g1.per_token_logprob[t] ==
          doctest::Approx(model.log_prob(ctx, g1.tokens[t])).epsilon(1e-12));
    ctx.push_back(g1.tokens[t]);
  }

  CHECK_THROWS_AS(lm::generate(model, prompt, 0, lm::SamplingPolicy::plain(), 1),
                  InputDomainError);
}

TEST_CASE("generate: watermarked sampling keeps base log-probs") {
  const lm::ToyLM model(7, 2, 1.0, Vocab(32));
  const auto sk = keys::SecretKey::from_seed(42);
  const auto strategy = reweight::WatermarkStrategy::kgw(2.0);
  const auto policy =
      lm::SamplingPolicy::watermarked(strategy, sk, strategy.default_scheme());
  const auto g = lm::generate(model, {1, 2}, 30, policy, 777);
  TokenSeq ctx = {1, 2};
  for (std::size_t t = 0; t < g.tokens.size(); ++t) {
    CHECK(g.per_token_logprob[t] ==
          doctest::Approx(model.log_prob(ctx, g.tokens[t])).epsilon(1e-12));
    ctx.push_back(g.tokens[t]);
  }
}

TEST_CASE("generate: first-token frequencies match the model law") {
  const lm::ToyLM model(3, 2, 1.0, Vocab(4));
  const TokenSeq prompt = {0, 2};
  const auto& dist = model.next_distribution(prompt);
  std::vector<long long> counts(4, 0);
  const long long n = 100'000;
  for (long long i = 0; i < n; ++i) {
    const auto g = lm::generate(model, prompt, 5, lm::SamplingPolicy::plain(),
                                derive_seed(2024, static_cast<std::uint64_t>(i)));
    counts[g.tokens.front()]++;
  }
  for (std::uint32_t x = 0; x < 4; ++x) {
    const double freq = static_cast<double>(counts[x]) / static_cast<double>(n);
    const double se = std::sqrt(dist[x] * (1.0 - dist[x]) / static_cast<double>(n));
    CHECK(std::abs(freq - dist[x]) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("prompt corpus is deterministic and in-vocab") {
  const Vocab v(32);
  const auto a = lm::make_prompt_corpus(v, 10, 6, 99);
  const auto b = lm::make_prompt_corpus(v, 10, 6, 99);
  CHECK(a == b);
  std::set<TokenSeq> uniq(a.begin(), a.end());
  CHECK(uniq.size() > 1);
  for (const auto& p : a) {
    CHECK(p.size() == 6);
    for (Token t : p) CHECK(v.contains(t));
  }
}
