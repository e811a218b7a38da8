#pragma once

/**
 * Full benchmark pipeline: generate matched corpora, attack, detect,
 * run SPMG, certify, score, and assemble the report. Work fans out over
 * (strategy x sequence) items; all reductions are serial and index-ordered
 * so the report is a pure function of the manifest.
 */

#include <string>

#include "wmbench/manifest.hpp"
#include "wmbench/parallel.hpp"
#include "wmbench/report.hpp"

namespace wmbench::bench {

struct PipelineOptions {
  par::Mode mode = par::Mode::Auto;
};

Report run_pipeline(const RunManifest& manifest, const PipelineOptions& options = {});

/// Built-in report sanity checks (--check): matched sets, score ranges,
/// invariant closure. Returns a list of failures (empty = ok).
std::vector<std::string> check_report(const Report& report);

}  // namespace wmbench::bench
