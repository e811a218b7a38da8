#include <cmath>

#include "doctest.h"
#include "test_support.hpp"
#include "wmbench/keys.hpp"
#include "wmbench/random.hpp"
#include "wmbench/reweight.hpp"
#include "wmbench/stats.hpp"

using namespace wmbench;
using reweight::WatermarkStrategy;
using testing::max_norm_diff;
using testing::unbiasedness_fixtures;

namespace {

std::vector<Token> identity_perm(std::uint32_t v) {
  std::vector<Token> p(v);
  for (std::uint32_t i = 0; i < v; ++i) p[i] = i;
  return p;
}

/// Monte Carlo of the real sampler under random keys; checks the sampler
/// agrees with a reference law within 4 standard errors per token.
void check_sampler_matches(const WatermarkStrategy& strategy,
                           const TokenDistribution& dist,
                           const TokenDistribution& reference, std::uint64_t samples,
                           std::uint64_t seed) {
  const auto mc = reweight::expected_watermarked_distribution(
      strategy, dist, {.exhaustive = false, .mc_samples = samples, .mc_seed = seed});
  for (std::uint32_t x = 0; x < dist.size(); ++x) {
    const double se =
        std::sqrt(std::max(reference[x] * (1.0 - reference[x]), 1e-12) /
                  static_cast<double>(samples));
    CHECK(std::abs(mc[x] - reference[x]) <= 4.0 * se + 1e-9);
  }
}

}  // namespace

TEST_CASE("DiPmark alpha=0 is the identity transform") {
  const auto dist = TokenDistribution::validated({0.4, 0.3, 0.2, 0.1});
  keys::ScriptedKeyDraw draw;
  draw.push_permutation({2, 0, 3, 1});
  const auto out =
      reweight::watermarked_distribution(WatermarkStrategy::dipmark(0.0), dist, draw);
  CHECK(max_norm_diff(out, dist) < 1e-15);
}

TEST_CASE("DiPmark clipping formula on a pinned fixture") {
  // V=4, dist (.4,.3,.2,.1), identity permutation, alpha=0.3:
  // cdf (.4,.7,.9,1); low-clip increments (.1,.3,.2,.1); high-clip (0,0,.2,.1).
  const auto dist = TokenDistribution::validated({0.4, 0.3, 0.2, 0.1});
  keys::ScriptedKeyDraw draw;
  draw.push_permutation(identity_perm(4));
  const auto out =
      reweight::watermarked_distribution(WatermarkStrategy::dipmark(0.3), dist, draw);
  const std::vector<double> expected = {0.1, 0.3, 0.4, 0.2};
  for (int i = 0; i < 4; ++i) CHECK(out[i] == doctest::Approx(expected[i]).epsilon(1e-12));

  // Independent route: integrate the reweight density over the cdf axis.
  const auto riemann = testing::dipmark_riemann(dist, identity_perm(4), 0.3);
  for (int i = 0; i < 4; ++i) CHECK(out[i] == doctest::Approx(riemann[i]).epsilon(1e-5));
}

TEST_CASE("DiPmark riemann oracle agrees under a scrambled permutation") {
  const auto dist = TokenDistribution::validated({0.1, 0.2, 0.3, 0.4});
  const std::vector<Token> perm = {3, 1, 0, 2};
  keys::ScriptedKeyDraw draw;
  draw.push_permutation(perm);
  const auto out =
      reweight::watermarked_distribution(WatermarkStrategy::dipmark(0.4), dist, draw);
  const auto riemann = testing::dipmark_riemann(dist, perm, 0.4);
  for (int i = 0; i < 4; ++i) {
    CHECK(out[i] == doctest::Approx(riemann[i]).epsilon(2e-5));
  }
}

TEST_CASE("MCmark conditions on a cdf segment") {
  const auto dist = TokenDistribution::uniform(4);
  keys::ScriptedKeyDraw draw;
  draw.push_permutation(identity_perm(4));
  draw.push_uniform(0.25);  // selects segment 0 of 2
  const auto out =
      reweight::watermarked_distribution(WatermarkStrategy::mcmark(2), dist, draw);
  CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out[2] == doctest::Approx(0.0));
  CHECK(out[3] == doctest::Approx(0.0));
}

TEST_CASE("MCmark straddling token mass is clipped proportionally") {
  const auto dist = TokenDistribution::validated({0.4, 0.3, 0.2, 0.1});
  keys::ScriptedKeyDraw draw;
  draw.push_permutation(identity_perm(4));
  draw.push_uniform(0.75);  // segment 1 of 2: [0.5, 1)
  const auto out =
      reweight::watermarked_distribution(WatermarkStrategy::mcmark(2), dist, draw);
  // Segment [0.5,1) overlaps token1 [.4,.7) by .2, token2 fully, token3 fully.
  CHECK(out[0] == doctest::Approx(0.0));
  CHECK(out[1] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(out[2] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(out[3] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("MCmark sampling route agrees with the conditional distribution") {
  const auto dist = TokenDistribution::validated({0.4, 0.3, 0.2, 0.1});
  const auto strategy = WatermarkStrategy::mcmark(2);
  // Fixed keyed parts, fresh sampling noise.
  const std::uint64_t n = 200'000;
  std::vector<double> freq(4, 0.0);
  Rng rng(314);
  for (std::uint64_t i = 0; i < n; ++i) {
    keys::ScriptedKeyDraw draw;
    draw.push_permutation(identity_perm(4));
    draw.push_uniform(0.75);
    freq[reweight::watermarked_sample(strategy, dist, draw, rng).token] += 1.0;
  }
  keys::ScriptedKeyDraw draw;
  draw.push_permutation(identity_perm(4));
  draw.push_uniform(0.75);
  const auto cond = reweight::watermarked_distribution(strategy, dist, draw);
  for (int x = 0; x < 4; ++x) {
    const double f = freq[x] / static_cast<double>(n);
    const double se = std::sqrt(std::max(cond[x] * (1 - cond[x]), 1e-12) /
                                static_cast<double>(n));
    CHECK(std::abs(f - cond[x]) <= 4.0 * se + 1e-9);
  }
}

TEST_CASE("ITS inverse-cdf sampling on a pinned fixture") {
  const auto dist = TokenDistribution::validated({0.4, 0.3, 0.2, 0.1});
  keys::ScriptedKeyDraw draw;
  draw.push_permutation(identity_perm(4));
  draw.push_uniform(0.65);
  const auto out = reweight::watermarked_sample(WatermarkStrategy::its(), dist, draw);
  CHECK(out.token == 1);  // cdf 0.4 <= 0.65 < 0.7
  CHECK(out.aux.has_value());
  CHECK(*out.aux == doctest::Approx(0.65));
}

TEST_CASE("EXP with a one-hot distribution always emits the hot token") {
  const auto dist = TokenDistribution::one_hot(6, 4);
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    keys::ScriptedKeyDraw draw;
    for (int k = 0; k < 6; ++k) draw.push_uniform(rng.unit());
    CHECK(reweight::watermarked_sample(WatermarkStrategy::exp(), dist, draw).token == 4);
  }
}

TEST_CASE("Single-token distributions are fixed points for every family") {
  const TokenDistribution dist(std::vector<double>{1.0});
  const std::vector<WatermarkStrategy> all = {
      WatermarkStrategy::kgw(2.0),     WatermarkStrategy::unigram(1.0),
      WatermarkStrategy::dipmark(0.3), WatermarkStrategy::gamma_reweight(),
      WatermarkStrategy::its(),        WatermarkStrategy::exp(),
      WatermarkStrategy::synthid(3),   WatermarkStrategy::mcmark(2),
      WatermarkStrategy::sta1(0.5)};
  for (const auto& s : all) {
    Rng rng(1);
    keys::ScriptedKeyDraw draw;
    CHECK(reweight::watermarked_sample(s, dist, draw, rng).token == 0);
  }
}

TEST_CASE("watermarked_sample is a pure function of (strategy, dist, draw)") {
  const auto dist = TokenDistribution::validated({0.3, 0.3, 0.2, 0.2});
  const auto sk = keys::SecretKey::from_seed(9);
  const Vocab v(4);
  for (const auto& s :
       {WatermarkStrategy::kgw(1.0), WatermarkStrategy::dipmark(0.4),
        WatermarkStrategy::its(), WatermarkStrategy::exp(), WatermarkStrategy::synthid(3),
        WatermarkStrategy::mcmark(2), WatermarkStrategy::sta1(0.5)}) {
    auto d1 = keys::derive(sk, s.default_scheme(), TokenSeq{1, 2}, 2, v);
    auto d2 = keys::derive(sk, s.default_scheme(), TokenSeq{1, 2}, 2, v);
    CHECK(reweight::watermarked_sample(s, dist, d1).token ==
          reweight::watermarked_sample(s, dist, d2).token);
  }
}

TEST_CASE("watermarked_distribution rejects sampling-defined families") {
  const auto dist = TokenDistribution::uniform(4);
  keys::ScriptedKeyDraw draw;
  CHECK_THROWS_AS(
      reweight::watermarked_distribution(WatermarkStrategy::exp(), dist, draw),
      ContractError);
  CHECK_THROWS_AS(
      reweight::watermarked_distribution(WatermarkStrategy::synthid(2), dist, draw),
      ContractError);
}

TEST_CASE("Exact unbiasedness of the distortion-free families (enumeration)") {
  const auto fixtures = unbiasedness_fixtures();
  const std::vector<WatermarkStrategy> unbiased = {
      WatermarkStrategy::dipmark(0.3), WatermarkStrategy::dipmark(0.4),
      WatermarkStrategy::dipmark(0.5), WatermarkStrategy::gamma_reweight(),
      WatermarkStrategy::its(),        WatermarkStrategy::exp(),
      WatermarkStrategy::mcmark(2),    WatermarkStrategy::mcmark(4),
      WatermarkStrategy::sta1(0.5)};
  for (const auto& s : unbiased) {
    for (const auto& dist : fixtures) {
      const auto avg = reweight::expected_watermarked_distribution(s, dist);
      CHECK_MESSAGE(max_norm_diff(avg, dist) <= 1e-9,
                    s.name(), " deviates on a fixture of size ", dist.size());
    }
  }
}

TEST_CASE("KGW and Unigram are biased (TV above 1e-3 on some fixture)") {
  const auto fixtures = unbiasedness_fixtures();
  for (const auto& s : {WatermarkStrategy::kgw(1.0), WatermarkStrategy::kgw(2.0),
                        WatermarkStrategy::unigram(1.0), WatermarkStrategy::unigram(2.0)}) {
    double worst = 0.0;
    for (const auto& dist : fixtures) {
      const auto avg = reweight::expected_watermarked_distribution(s, dist);
      worst = std::max(worst, stats::total_variation(avg.probs, dist.probs));
    }
    CHECK(worst > 1e-3);
  }
}

TEST_CASE("Sampler-level unbiasedness cross-checks (Monte Carlo)") {
  const auto dist = TokenDistribution::validated({0.4, 0.3, 0.2, 0.1});
  for (const auto& s : {WatermarkStrategy::its(), WatermarkStrategy::exp(),
                        WatermarkStrategy::mcmark(2), WatermarkStrategy::sta1(0.5)}) {
    check_sampler_matches(s, dist, dist, 200'000, 77);
  }
}

TEST_CASE("SynthID tournament is unbiased (Monte Carlo at V=8)") {
  std::vector<double> p = {0.25, 0.20, 0.15, 0.12, 0.10, 0.08, 0.06, 0.04};
  const auto dist = TokenDistribution::validated(p);
  for (std::uint32_t m : {1u, 2u, 4u}) {
    check_sampler_matches(WatermarkStrategy::synthid(m), dist, dist, 1'000'000,
                          1000 + m);
  }
}

TEST_CASE("expected_watermarked_distribution guards its budgets") {
  const auto big = TokenDistribution::uniform(8);
  CHECK_THROWS_AS(
      reweight::expected_watermarked_distribution(WatermarkStrategy::dipmark(0.3), big),
      BudgetError);
  CHECK_THROWS_AS(reweight::expected_watermarked_distribution(
                      WatermarkStrategy::synthid(2), TokenDistribution::uniform(4)),
                  ContractError);
  CHECK_THROWS_AS(
      reweight::expected_watermarked_distribution(
          WatermarkStrategy::its(), TokenDistribution::uniform(4),
          {.exhaustive = false, .mc_samples = 0}),
      BudgetError);
}

TEST_CASE("Strategy parameter validation and defaults") {
  CHECK_THROWS_AS(WatermarkStrategy::kgw(0.0), InputDomainError);
  CHECK_THROWS_AS(WatermarkStrategy::kgw(1.0, 1.0), InputDomainError);
  CHECK_THROWS_AS(WatermarkStrategy::dipmark(0.6), InputDomainError);
  CHECK_THROWS_AS(WatermarkStrategy::mcmark(1), InputDomainError);
  CHECK(WatermarkStrategy::unigram(1.0).default_scheme().kind ==
        keys::SchemeKind::Global);
  CHECK(WatermarkStrategy::dipmark(0.3).default_scheme().kind ==
        keys::SchemeKind::NGram);
  CHECK(WatermarkStrategy::dipmark(0.3).default_scheme().param == 2);
}
