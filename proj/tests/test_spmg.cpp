#include <cmath>

#include "doctest.h"
#include "test_support.hpp"
#include "wmbench/random.hpp"
#include "wmbench/spmg.hpp"
#include "wmbench/stats.hpp"

using namespace wmbench;
using reweight::WatermarkStrategy;
using spmg::MetricSurrogate;
using spmg::TestModel;

namespace {

lm::ToyLM toy16() { return lm::ToyLM(11, 2, 1.0, Vocab(16)); }

MetricSurrogate green_met(const lm::ToyLM& model, std::uint64_t key_seed = 404) {
  return MetricSurrogate::green_rate(keys::SecretKey::from_seed(key_seed),
                                     keys::ContextScheme::ngram(2), model.vocab());
}

}  // namespace

TEST_CASE("spmg_gap of a model against itself is exactly zero") {
  const auto model = toy16();
  const auto prompts = lm::make_prompt_corpus(model.vocab(), 4, 3, 7);
  const TestModel p = TestModel::plain(model, 31);
  const auto met = green_met(model);
  CHECK(spmg::spmg_gap(p, p, prompts, 5, 8, met, 0) == 0.0);
}

TEST_CASE("spmg_gap matches a hand-computed one-prompt mean difference") {
  const auto model = toy16();
  const std::vector<TokenSeq> prompts = {{1, 2, 3}};
  const TestModel p = TestModel::plain(model, 100);
  const TestModel q = TestModel::plain(model, 200);
  const auto met = green_met(model);
  const std::uint32_t m = 16;
  const std::uint32_t len = 8;

  const auto mean_of = [&](const TestModel& tm) {
    double acc = 0.0;
    for (std::uint32_t j = 0; j < m; ++j) {
      const auto seed = derive_seed(derive_seed(tm.sampling_seed, 0), j);
      acc += met.evaluate(lm::generate(tm.base, prompts[0], len, tm.policy, seed, 0));
    }
    return acc / m;
  };
  const double expected = std::abs(mean_of(p) - mean_of(q));
  CHECK(spmg::spmg_gap(p, q, prompts, m, len, met, 0) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("spmg_gap is symmetric and nonnegative") {
  const auto model = toy16();
  const auto prompts = lm::make_prompt_corpus(model.vocab(), 6, 3, 5);
  const TestModel p = TestModel::plain(model, 1);
  const TestModel q = TestModel::plain(model, 2);
  const auto met = green_met(model);
  const double pq = spmg::spmg_gap(p, q, prompts, 20, 8, met, 0);
  const double qp = spmg::spmg_gap(q, p, prompts, 20, 8, met, 0);
  CHECK(pq == doctest::Approx(qp).epsilon(1e-15));
  CHECK(pq >= 0.0);
}

TEST_CASE("mcdiarmid_threshold pins") {
  CHECK(spmg::mcdiarmid_threshold(1.0, 10, 10, 0.05) ==
        doctest::Approx(0.6653).epsilon(1e-4));
  // Quadrupling m*n halves the threshold.
  CHECK(spmg::mcdiarmid_threshold(1.0, 40, 10, 0.05) * 2.0 ==
        doctest::Approx(spmg::mcdiarmid_threshold(1.0, 10, 10, 0.05)).epsilon(1e-12));
  // alpha -> 1 limit stays positive: A * sqrt(12 ln 2 / (mn)).
  const double limit = std::sqrt(12.0 * std::log(2.0) / 100.0);
  CHECK(spmg::mcdiarmid_threshold(1.0, 10, 10, 1.0 - 1e-12) ==
        doctest::Approx(limit).epsilon(1e-9));
  CHECK_THROWS_AS(spmg::mcdiarmid_threshold(1.0, 10, 10, 0.0), InputDomainError);
  CHECK_THROWS_AS(spmg::mcdiarmid_threshold(0.0, 10, 10, 0.5), InputDomainError);
}

TEST_CASE("bhattacharyya and product amplification pins") {
  const auto p = TokenDistribution::validated({0.5, 0.5});
  const auto q = TokenDistribution::validated({0.9, 0.1});
  CHECK(spmg::bhattacharyya(p, p) == doctest::Approx(1.0));
  const auto a = TokenDistribution::validated({1.0, 0.0});
  const auto b = TokenDistribution::validated({0.0, 1.0});
  CHECK(spmg::bhattacharyya(a, b) == doctest::Approx(0.0));
  const double bc = spmg::bhattacharyya(p, q);
  CHECK(bc == doctest::Approx(0.8944).epsilon(1e-4));

  CHECK(spmg::tv_product_lower_bound(p, p, 100) == doctest::Approx(0.0));
  CHECK(spmg::tv_product_lower_bound(p, q, 1) == doctest::Approx(1.0 - bc));
  CHECK(spmg::tv_product_lower_bound(p, q, 40) >= 0.98);
}

TEST_CASE("clone gap stays under the concentration envelope") {
  // Two independent clones of the same model: the SPMG gap lives far
  // below the McDiarmid deviation bound.
  const auto model = toy16();
  const auto prompts = lm::make_prompt_corpus(model.vocab(), 10, 3, 55);
  const auto met = green_met(model);
  const double bound = spmg::mcdiarmid_threshold(1.0, 1000, 10, 0.001);
  int within = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const TestModel p = TestModel::plain(model, derive_seed(9000, t * 2));
    const TestModel q = TestModel::plain(model, derive_seed(9000, t * 2 + 1));
    const double gap = spmg::spmg_gap(p, q, prompts, 1000, 8, met, 0);
    if (gap < bound) ++within;
  }
  CHECK(within >= static_cast<int>(0.999 * trials));
}

TEST_CASE("detwmk: null model stays under t_alpha, fields are consistent") {
  const auto model = toy16();
  const auto met = green_met(model);
  spmg::SpmgBudget budget;
  budget.prompts = 10;
  budget.generations = 100;
  budget.gen_len = 8;
  budget.alpha = 0.05;
  int within = 0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    budget.seed = derive_seed(31, t);
    const TestModel base = TestModel::plain(model, derive_seed(100, t));
    const TestModel null_test = TestModel::plain(model, derive_seed(200, t));
    const auto rep = spmg::detwmk(base, null_test, met, budget);
    CHECK(rep.detwmk == rep.delta_mt - rep.delta_mm);  // exact
    CHECK(rep.reject == (rep.detwmk >= rep.threshold));
    CHECK(rep.per_prompt_mean_base.size() == budget.prompts);
    if (std::abs(rep.detwmk) <= rep.threshold) ++within;
  }
  CHECK(within >= static_cast<int>(0.94 * trials));
}

TEST_CASE("detwmk: fixed-key KGW rejects, DiPmark drifts above the clone noise") {
  const auto model = toy16();
  const auto sk = keys::SecretKey::from_seed(404);
  const auto met = green_met(model);
  spmg::SpmgBudget budget;
  budget.prompts = 10;
  budget.generations = 100;
  budget.gen_len = 8;
  budget.alpha = 0.05;

  int kgw_rejects = 0;
  const int trials = 20;
  std::vector<double> clone_levels;
  std::vector<double> dip_levels;
  for (int t = 0; t < trials; ++t) {
    budget.seed = derive_seed(77, t);
    const TestModel base = TestModel::plain(model, derive_seed(300, t));
    const TestModel kgw = TestModel::watermarked(model, WatermarkStrategy::kgw(2.0), sk,
                                                 keys::ContextScheme::ngram(2),
                                                 derive_seed(400, t));
    if (spmg::detwmk(base, kgw, met, budget).reject) ++kgw_rejects;

    const TestModel null_test = TestModel::plain(model, derive_seed(500, t));
    clone_levels.push_back(spmg::detwmk(base, null_test, met, budget).detwmk);
    const TestModel dip = TestModel::watermarked(model, WatermarkStrategy::dipmark(0.3),
                                                 sk, keys::ContextScheme::ngram(2),
                                                 derive_seed(600, t));
    dip_levels.push_back(spmg::detwmk(base, dip, met, budget).detwmk);
  }
  CHECK(kgw_rejects >= static_cast<int>(0.95 * trials));
  // Repeated-prompt drift of an unbiased watermark under a fixed key
  // exceeds the clone baseline.
  CHECK(stats::mean(dip_levels) > stats::mean(clone_levels));
}

TEST_CASE("fixed_key_law: SynthID closed form matches tournament sampling") {
  const auto dist = TokenDistribution::validated({0.4, 0.3, 0.2, 0.1});
  const auto strategy = WatermarkStrategy::synthid(3);
  const auto sk = keys::SecretKey::from_seed(8);
  const Vocab v(4);
  const auto scheme = keys::ContextScheme::ngram(2);

  auto draw_law = keys::derive(sk, scheme, TokenSeq{0, 1}, 2, v);
  const auto law = spmg::fixed_key_law(strategy, dist, draw_law);

  const std::uint64_t n = 200'000;
  std::vector<double> freq(4, 0.0);
  Rng rng(17);
  for (std::uint64_t i = 0; i < n; ++i) {
    auto draw = keys::derive(sk, scheme, TokenSeq{0, 1}, 2, v);
    freq[reweight::watermarked_sample(strategy, dist, draw, rng).token] += 1.0;
  }
  for (int x = 0; x < 4; ++x) {
    const double f = freq[x] / static_cast<double>(n);
    const double se =
        std::sqrt(std::max(law[x] * (1 - law[x]), 1e-12) / static_cast<double>(n));
    CHECK(std::abs(f - law[x]) <= 4.0 * se + 1e-9);
  }
}

TEST_CASE("fixed_key_divergence finds a witness for every detectable family") {
  const lm::ToyLM model(19, 2, 1.0, Vocab(16));
  const auto sk = keys::SecretKey::from_seed(33);
  const std::vector<WatermarkStrategy> all = {
      WatermarkStrategy::kgw(2.0),     WatermarkStrategy::unigram(2.0),
      WatermarkStrategy::dipmark(0.3), WatermarkStrategy::gamma_reweight(),
      WatermarkStrategy::its(),        WatermarkStrategy::exp(),
      WatermarkStrategy::synthid(4),   WatermarkStrategy::mcmark(4),
      WatermarkStrategy::sta1(0.5)};
  for (const auto& s : all) {
    const auto scheme =
        s.family == reweight::Family::Unigram ? keys::ContextScheme::global()
                                              : keys::ContextScheme::ngram(2);
    const auto w = spmg::fixed_key_divergence(model, s, sk, scheme);
    CHECK_MESSAGE(w.tv > 0.01, s.name(), " tv=", w.tv);
    CHECK_MESSAGE(w.m_needed.has_value(), s.name(), " bc=", w.bc);
    if (w.m_needed) {
      CHECK(*w.m_needed <= 1000);
      const auto& dist = model.next_distribution(w.context);
      auto draw = keys::derive(sk, scheme, w.context,
                               static_cast<std::uint32_t>(w.context.size()),
                               model.vocab());
      const auto law = spmg::fixed_key_law(s, dist, draw);
      CHECK(spmg::tv_product_lower_bound(law, dist, *w.m_needed) >= 0.99);
    }
  }
}
