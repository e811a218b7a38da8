#pragma once

/**
 * Benchmark report: everything a run produces, serialized as structured
 * JSON with pinned field ordering so diffs across runs are meaningful.
 */

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wmbench/manifest.hpp"
#include "wmbench/scoring.hpp"
#include "wmbench/spmg.hpp"

namespace wmbench::bench {

struct DetectionSummary {
  std::map<std::string, double> tpr_at;  // keyed by fpr label, e.g. "0.05"
  double median_p = 1.0;                 // pooled lower median
  double auroc = 0.5;
};

struct RobustnessCell {
  std::string attack;
  double fraction = 0.0;
  std::map<std::string, double> tpr_at;
  double median_p = 1.0;
};

struct SpmgSummary {
  std::string surrogate;
  double delta_mt = 0.0;
  double delta_mm = 0.0;
  double detwmk = 0.0;
  double threshold = 0.0;
  bool reject = false;
};

struct CertificateSummary {
  double tau = 0.0;
  std::uint32_t r_max = 1;
  double score_bound = 1.0;
  double mean_radius = -1.0;
  std::int64_t median_radius = -1;
  double frac_radius_ge_1 = 0.0;
};

struct StrategyReport {
  std::string name;
  DetectionSummary detection;
  std::vector<RobustnessCell> robustness;
  std::optional<SpmgSummary> spmg;
  std::optional<CertificateSummary> certificate;
  std::optional<double> score_unbiasedness;
  std::optional<double> score_detectability;
  std::optional<double> score_robustness;
};

struct Report {
  int schema_version = 1;
  std::string toolkit_version;
  std::string manifest_hash;
  std::string status = "complete";  // or "partial: <error>"
  RunManifest manifest;
  std::vector<StrategyReport> strategies;

  std::string to_json() const;
  static Report from_json(const std::string& text);
  static Report load(const std::string& path);

  /// Atomic write: temp file in the target directory, then rename.
  void save(const std::string& path) const;

  std::string hash() const;
};

enum class TableFormat { MachineReadable, Delimited, PlotData };

/**
 * Emits the three-axis summary, the per-attack TPR tables, and scatter
 * plot data (method, unbiasedness, detectability, robustness) under
 * `out_dir`. Returns the written file paths.
 */
std::vector<std::string> emit_tables(const Report& report, const std::string& out_dir);

}  // namespace wmbench::bench
