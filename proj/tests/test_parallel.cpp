#include <numeric>

#include "doctest.h"
#include "wmbench/detect.hpp"
#include "wmbench/generation.hpp"
#include "wmbench/parallel.hpp"
#include "wmbench/pipeline.hpp"
#include "wmbench/random.hpp"

using namespace wmbench;

TEST_CASE("parallel_for covers every index exactly once") {
  std::vector<int> hits(1000, 0);
  par::parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 1000);
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("map_indexed is byte-identical across serial and parallel modes") {
  // A floating-point kernel with per-item seeding; slots plus a serial
  // reduction keep results independent of scheduling.
  const auto kernel = [](std::size_t i) {
    Rng rng(derive_seed(42, i));
    double acc = 0.0;
    for (int k = 0; k < 100; ++k) acc += rng.unit() * 1e-3;
    return acc;
  };
  const auto serial = par::map_indexed<double>(500, kernel, par::Mode::Serial);
  const auto parallel = par::map_indexed<double>(500, kernel, par::Mode::OpenMp);
  CHECK(serial == parallel);
}

TEST_CASE("batch scoring kernel: serial and OpenMP agree bitwise") {
  const Vocab v(16);
  const lm::ToyLM model(3, 2, 1.0, v);
  const auto sk = keys::SecretKey::from_seed(5);
  const auto strategy = reweight::WatermarkStrategy::dipmark(0.5);
  const auto detector =
      detect::Detector::for_strategy(strategy, strategy.default_scheme(), v);

  const auto kernel = [&](std::size_t i) {
    const auto g = lm::generate(model, {1, 2}, 40, lm::SamplingPolicy::plain(),
                                derive_seed(1000, i));
    return detect::score_sequence(detector, g.tokens, sk).p_value;
  };
  const auto serial = par::map_indexed<double>(64, kernel, par::Mode::Serial);
  const auto parallel = par::map_indexed<double>(64, kernel, par::Mode::OpenMp);
  CHECK(serial == parallel);
}

TEST_CASE("pipeline reports are byte-identical across serial and parallel modes") {
  auto manifest = bench::RunManifest::smoke_defaults();
  manifest.corpus.prompts = 16;
  manifest.corpus.gen_len = 30;
  manifest.spmg.prompts = 4;
  manifest.spmg.generations = 8;
  manifest.spmg.gen_len = 8;
  manifest.strategies.resize(1);

  const auto serial = bench::run_pipeline(manifest, {par::Mode::Serial});
  const auto parallel = bench::run_pipeline(manifest, {par::Mode::OpenMp});
  CHECK(serial.status == "complete");
  CHECK(serial.to_json() == parallel.to_json());
}
