#pragma once

/**
 * Run manifest: the single source of truth for a benchmark run. Every
 * random stream in the pipeline derives from the master seed recorded
 * here, so one manifest reproduces one byte-identical report.
 */

#include <cstdint>
#include <string>
#include <vector>

#include "wmbench/attacks.hpp"
#include "wmbench/keys.hpp"
#include "wmbench/reweight.hpp"
#include "wmbench/spmg.hpp"

namespace wmbench::bench {

struct LmConfig {
  std::uint32_t vocab = 32;
  std::uint32_t context_order = 2;
  double concentration = 1.0;
  std::uint64_t seed = 7;
};

struct CorpusConfig {
  std::uint32_t prompts = 200;
  std::uint32_t prompt_len = 8;
  std::uint32_t gen_len = 100;
};

struct StrategyConfig {
  reweight::WatermarkStrategy strategy;
  keys::ContextScheme scheme;
  std::uint64_t key_seed = 1;

  std::string label() const;
};

struct SpmgConfig {
  std::uint32_t prompts = 10;
  std::uint32_t generations = 100;
  std::uint32_t gen_len = 32;
  double alpha = 0.05;
  std::string surrogate = "green_rate";
};

struct RunManifest {
  std::string toolkit_version;
  std::string created_utc;  // recorded at manifest creation, copied verbatim
  std::uint64_t master_seed = 20260809;
  LmConfig lm;
  CorpusConfig corpus;
  std::vector<StrategyConfig> strategies;
  std::vector<attacks::AttackSpec> attacks;
  std::vector<double> fpr_targets = {0.05, 0.01, 0.001};
  SpmgConfig spmg;
  double cert_alpha = 0.01;

  static RunManifest smoke_defaults();

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);

  static RunManifest load(const std::string& path);
  void save(const std::string& path) const;

  /// BLAKE2b-256 hex of the canonical JSON serialization.
  std::string hash() const;
};

}  // namespace wmbench::bench
