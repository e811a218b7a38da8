// Command-line front end: seeded generate -> attack -> detect -> spmg ->
// cert -> score pipelines over the synthetic token model, plus the full
// `run` orchestration and table emission. Flags always override manifest
// fields. Exit codes: 0 success, 2 configuration error, 3 budget error,
// 4 failed --check.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wmbench/cert.hpp"
#include "wmbench/detect.hpp"
#include "wmbench/generation.hpp"
#include "wmbench/pipeline.hpp"
#include "wmbench/random.hpp"
#include "wmbench/scoring.hpp"
#include "wmbench/version.hpp"

namespace {

using namespace wmbench;
using bench::RunManifest;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;
constexpr int kExitCheck = 4;

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

RunManifest load_or_default(const std::string& path) {
  if (path.empty()) {
    RunManifest m = RunManifest::smoke_defaults();
    m.created_utc = now_utc();
    return m;
  }
  return RunManifest::load(path);
}

void write_json(const std::string& path, const ordered_json& j) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << "\n";
}

ordered_json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("parse error in ") + path + ": " + e.what());
  }
  return j;
}

const bench::StrategyConfig& find_strategy(const RunManifest& m,
                                           const std::string& label) {
  for (const auto& s : m.strategies) {
    if (s.label() == label) return s;
  }
  std::string known;
  for (const auto& s : m.strategies) known += " " + s.label();
  throw ConfigError("strategy '" + label + "' not in manifest; available:" + known);
}

attacks::AttackKind parse_kind(const std::string& name) {
  if (name == "substitution") return attacks::AttackKind::Substitution;
  if (name == "insertion") return attacks::AttackKind::Insertion;
  if (name == "deletion") return attacks::AttackKind::Deletion;
  if (name == "mixed") return attacks::AttackKind::Mixed;
  throw ConfigError("unknown attack kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// Subcommand payloads
// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string manifest;
  std::string out = "generations.json";
  std::string strategy;  // empty = plain sampling
  std::optional<std::uint32_t> prompts;
  std::optional<std::uint32_t> gen_len;
  std::optional<std::uint64_t> seed;
};

int cmd_generate(const GenerateArgs& args) {
  RunManifest m = load_or_default(args.manifest);
  if (args.prompts) m.corpus.prompts = *args.prompts;
  if (args.gen_len) m.corpus.gen_len = *args.gen_len;
  if (args.seed) m.master_seed = *args.seed;

  const Vocab vocab(m.lm.vocab);
  const lm::ToyLM model(m.lm.seed, m.lm.context_order, m.lm.concentration, vocab);
  const auto prompts = lm::make_prompt_corpus(vocab, m.corpus.prompts,
                                              m.corpus.prompt_len,
                                              derive_seed(m.master_seed, 0x01));
  lm::SamplingPolicy policy = lm::SamplingPolicy::plain();
  if (!args.strategy.empty()) {
    const auto& sc = find_strategy(m, args.strategy);
    policy = lm::SamplingPolicy::watermarked(
        sc.strategy, keys::SecretKey::from_seed(sc.key_seed), sc.scheme);
  }

  ordered_json j;
  j["schema_version"] = 1;
  j["toolkit_version"] = kVersion;
  j["manifest_hash"] = m.hash();
  j["lm"] = {{"vocab", m.lm.vocab},
             {"context_order", m.lm.context_order},
             {"concentration", m.lm.concentration},
             {"seed", m.lm.seed}};
  j["strategy"] = args.strategy.empty() ? "plain" : args.strategy;
  j["sequences"] = ordered_json::array();
  for (std::uint32_t i = 0; i < prompts.size(); ++i) {
    const auto g = lm::generate(model, prompts[i], m.corpus.gen_len, policy,
                                derive_seed(derive_seed(m.master_seed, 0x02), i), i);
    j["sequences"].push_back(
        {{"prompt_id", i}, {"prompt", prompts[i]}, {"tokens", g.tokens}});
  }
  write_json(args.out, j);
  std::printf("wrote %s (%zu sequences)\n", args.out.c_str(), prompts.size());
  return kExitOk;
}

struct AttackArgs {
  std::string in;
  std::string out = "attacked.json";
  std::string kind = "substitution";
  std::optional<double> fraction;
  std::optional<std::uint32_t> edits;
  std::uint64_t seed = 0;
};

int cmd_attack(const AttackArgs& args) {
  ordered_json in = read_json(args.in);
  const std::uint32_t vocab_size = in.at("lm").at("vocab").get<std::uint32_t>();
  const Vocab vocab(vocab_size);
  attacks::AttackSpec spec;
  spec.kind = parse_kind(args.kind);
  if (args.fraction && args.edits) throw ConfigError("give --fraction or --edits, not both");
  if (args.fraction) {
    spec = attacks::AttackSpec::ratio(spec.kind, *args.fraction, args.seed);
  } else if (args.edits) {
    spec = attacks::AttackSpec::count(spec.kind, *args.edits, args.seed);
  } else {
    throw ConfigError("attack needs --fraction or --edits");
  }

  ordered_json out = in;
  out["attack"] = {{"kind", args.kind},
                   {"fraction", args.fraction ? ordered_json(*args.fraction)
                                              : ordered_json(nullptr)},
                   {"edits", args.edits ? ordered_json(*args.edits)
                                        : ordered_json(nullptr)},
                   {"seed", args.seed}};
  std::size_t idx = 0;
  for (auto& seq : out.at("sequences")) {
    attacks::AttackSpec seq_spec = spec;
    seq_spec.seed = derive_seed(args.seed, idx++);
    const auto tokens = seq.at("tokens").get<TokenSeq>();
    const auto attacked = attacks::apply_attack(tokens, seq_spec, vocab);
    seq["tokens"] = attacked.tokens;
    ordered_json log = ordered_json::array();
    for (const auto& e : attacked.edit_log) {
      ordered_json ej;
      ej["kind"] = e.kind == attacks::AttackKind::Substitution ? "substitution"
                   : e.kind == attacks::AttackKind::Insertion  ? "insertion"
                                                               : "deletion";
      ej["position"] = e.position;
      if (e.old_token) ej["old"] = *e.old_token;
      if (e.new_token) ej["new"] = *e.new_token;
      log.push_back(ej);
    }
    seq["edit_log"] = log;
  }
  write_json(args.out, out);
  std::printf("wrote %s\n", args.out.c_str());
  return kExitOk;
}

struct DetectArgs {
  std::string in;
  std::string manifest;
  std::string strategy;
  std::string out = "detections.json";
};

int cmd_detect(const DetectArgs& args) {
  const RunManifest m = load_or_default(args.manifest);
  const auto& sc = find_strategy(m, args.strategy);
  const Vocab vocab(m.lm.vocab);
  const auto detector = detect::Detector::for_strategy(sc.strategy, sc.scheme, vocab);
  const auto sk = keys::SecretKey::from_seed(sc.key_seed);

  const ordered_json in = read_json(args.in);
  ordered_json out;
  out["schema_version"] = 1;
  out["strategy"] = args.strategy;
  out["results"] = ordered_json::array();
  std::vector<double> pvalues;
  for (const auto& seq : in.at("sequences")) {
    const auto tokens = seq.at("tokens").get<TokenSeq>();
    const auto r = detect::score_sequence(detector, tokens, sk);
    pvalues.push_back(r.p_value);
    out["results"].push_back({{"prompt_id", seq.at("prompt_id")},
                              {"statistic", r.statistic},
                              {"token_count", r.token_count},
                              {"p_value", r.p_value}});
  }
  ordered_json summary;
  for (double f : m.fpr_targets) {
    std::ostringstream key;
    key << "tpr_at_" << f;
    summary[key.str()] = detect::tpr_at_fpr(pvalues, f);
  }
  summary["median_p"] = detect::median_pvalue(pvalues);
  out["summary"] = summary;
  write_json(args.out, out);
  std::printf("wrote %s (%zu results, median p %.3g)\n", args.out.c_str(),
              pvalues.size(), detect::median_pvalue(pvalues));
  return kExitOk;
}

struct SpmgArgs {
  std::string manifest;
  std::string strategy;
  std::string out = "spmg.json";
};

int cmd_spmg(const SpmgArgs& args) {
  const RunManifest m = load_or_default(args.manifest);
  const auto& sc = find_strategy(m, args.strategy);
  const Vocab vocab(m.lm.vocab);
  const lm::ToyLM model(m.lm.seed, m.lm.context_order, m.lm.concentration, vocab);
  const auto sk = keys::SecretKey::from_seed(sc.key_seed);

  spmg::MetricSurrogate met = spmg::MetricSurrogate::green_rate(sk, sc.scheme, vocab);
  if (m.spmg.surrogate == "clipped_mean_nll") {
    met = spmg::MetricSurrogate::clipped_mean_nll();
  } else if (m.spmg.surrogate == "clipped_perplexity") {
    met = spmg::MetricSurrogate::clipped_perplexity();
  } else if (m.spmg.surrogate != "green_rate") {
    throw ConfigError("unknown spmg surrogate '" + m.spmg.surrogate + "'");
  }

  spmg::SpmgBudget budget;
  budget.prompts = m.spmg.prompts;
  budget.generations = m.spmg.generations;
  budget.gen_len = m.spmg.gen_len;
  budget.alpha = m.spmg.alpha;
  budget.seed = derive_seed(m.master_seed, 0xB000);

  const auto base = spmg::TestModel::plain(model, derive_seed(m.master_seed, 0xB001));
  const auto test = spmg::TestModel::watermarked(model, sc.strategy, sk, sc.scheme,
                                                 derive_seed(m.master_seed, 0xB002));
  const auto rep = spmg::detwmk(base, test, met, budget);

  ordered_json out;
  out["schema_version"] = 1;
  out["strategy"] = args.strategy;
  out["surrogate"] = met.name();
  out["delta_mt"] = rep.delta_mt;
  out["delta_mm"] = rep.delta_mm;
  out["detwmk"] = rep.detwmk;
  out["threshold"] = rep.threshold;
  out["reject"] = rep.reject;
  out["per_prompt_mean_base"] = rep.per_prompt_mean_base;
  out["per_prompt_mean_test"] = rep.per_prompt_mean_test;
  out["per_prompt_mean_clone"] = rep.per_prompt_mean_clone;
  write_json(args.out, out);
  std::printf("wrote %s (detwmk %.4f threshold %.4f reject %d)\n", args.out.c_str(),
              rep.detwmk, rep.threshold, rep.reject ? 1 : 0);
  return kExitOk;
}

struct CertArgs {
  std::string in;
  std::string manifest;
  std::string strategy;
  double alpha = 0.0;  // 0 = use manifest value
  std::string out = "certificates.json";
};

int cmd_cert(const CertArgs& args) {
  const RunManifest m = load_or_default(args.manifest);
  const auto& sc = find_strategy(m, args.strategy);
  const Vocab vocab(m.lm.vocab);
  const auto detector = detect::Detector::for_strategy(sc.strategy, sc.scheme, vocab);
  const auto sk = keys::SecretKey::from_seed(sc.key_seed);
  const double alpha = args.alpha > 0.0 ? args.alpha : m.cert_alpha;

  const ordered_json in = read_json(args.in);
  ordered_json out;
  out["schema_version"] = 1;
  out["strategy"] = args.strategy;
  out["alpha"] = alpha;
  out["certificates"] = ordered_json::array();
  for (const auto& seq : in.at("sequences")) {
    const auto tokens = seq.at("tokens").get<TokenSeq>();
    const auto T = static_cast<std::uint32_t>(tokens.size());
    const double tau = detect::detection_threshold(detector, T, alpha);
    const double s = detect::sequence_statistic(detector, tokens, sk);
    const auto c = cert::make_certificate(s, tau, sc.scheme, detector.score_bound, T);
    out["certificates"].push_back({{"prompt_id", seq.at("prompt_id")},
                                   {"statistic", c.statistic},
                                   {"tau", c.threshold},
                                   {"r_max", c.r_max},
                                   {"score_bound", c.score_bound},
                                   {"radius", c.radius}});
  }
  write_json(args.out, out);
  std::printf("wrote %s\n", args.out.c_str());
  return kExitOk;
}

struct ScoreArgs {
  std::string fixtures;
  std::string out = "scores";
  bool check = false;
};

int cmd_score(const ScoreArgs& args) {
  const ordered_json fx = read_json(args.fixtures);
  namespace fs = std::filesystem;
  fs::create_directories(args.out);

  std::ostringstream csv;
  csv << "method,unbiasedness,detectability_formula,detectability_published,"
         "robustness,robustness_published\n";
  bool check_ok = true;
  const auto metrics = fx.at("quality_metrics").get<std::vector<std::string>>();
  for (const auto& [method, pub] : fx.at("published_scores").items()) {
    scoring::UnbiasednessInputs ui;
    for (const auto& metric : metrics) {
      ui.method_cfg1.push_back(
          fx.at("quality_config1").at("methods").at(method).at(metric).get<double>());
      ui.baseline_cfg1.push_back(
          fx.at("quality_config1").at("baseline").at(metric).get<double>());
      ui.method_cfg2_delta.push_back(fx.at("quality_config2_delta")
                                         .at("methods")
                                         .at(method)
                                         .at(metric)
                                         .get<double>());
      ui.baseline_cfg2_delta.push_back(
          fx.at("quality_config2_delta").at("baseline").at(metric).get<double>());
    }
    const double u = scoring::unbiasedness_score(ui);

    const auto& det = fx.at("detection").at(method);
    const double d_formula = scoring::detectability_score(
        det.at("tpr5").get<double>(), det.at("tpr1").get<double>(),
        det.at("tpr01").get<double>(), det.at("median_p").get<double>(),
        det.at("auroc").get<double>());

    scoring::RobustnessTable table;
    const auto fill = [&](const char* block, scoring::FprLevel level) {
      const auto& row = fx.at("attack_tpr").at(block).at(method);
      table.set(scoring::Attack::Dipper, level, row.at("dipper").get<double>());
      table.set(scoring::Attack::Random30, level, row.at("random30").get<double>());
      table.set(scoring::Attack::Random20, level, row.at("random20").get<double>());
      table.set(scoring::Attack::Random10, level, row.at("random10").get<double>());
    };
    fill("fpr_0.1pct", scoring::FprLevel::P01);
    fill("fpr_1pct", scoring::FprLevel::P1);
    fill("fpr_5pct", scoring::FprLevel::P5);
    const double r = scoring::robustness_score(table);

    const double r_pub = pub.at("robustness").get<double>();
    const double u_pub = pub.at("unbiasedness").get<double>();
    if (std::abs(r - r_pub) > 0.002 || std::abs(u - u_pub) > 0.002) check_ok = false;

    csv << method << ',' << u << ',' << d_formula << ','
        << pub.at("detectability").get<double>() << ',' << r << ',' << r_pub << '\n';
  }
  const std::string path = (fs::path(args.out) / "score_reproduction.csv").string();
  std::ofstream out(path);
  out << csv.str();
  std::printf("wrote %s\n", path.c_str());
  if (args.check && !check_ok) {
    std::fprintf(stderr, "score --check: reproduction outside +/-0.002\n");
    return kExitCheck;
  }
  return kExitOk;
}

struct RunArgs {
  std::string manifest;
  std::string out = "run_out";
  std::string write_manifest;
  bool check = false;
  bool serial = false;
};

int cmd_run(const RunArgs& args) {
  RunManifest m = load_or_default(args.manifest);
  if (!args.write_manifest.empty()) m.save(args.write_manifest);

  bench::PipelineOptions opts;
  opts.mode = args.serial ? par::Mode::Serial : par::Mode::Auto;
  const auto report = bench::run_pipeline(m, opts);

  namespace fs = std::filesystem;
  fs::create_directories(args.out);
  const std::string report_path = (fs::path(args.out) / "report.json").string();
  report.save(report_path);
  const auto tables = bench::emit_tables(report, args.out);
  std::printf("wrote %s and %zu tables (status: %s)\n", report_path.c_str(),
              tables.size(), report.status.c_str());

  if (report.status.rfind("partial(budget)", 0) == 0) return kExitBudget;
  if (report.status != "complete") return kExitConfig;
  if (args.check) {
    const auto failures = bench::check_report(report);
    if (!failures.empty()) {
      for (const auto& f : failures) std::fprintf(stderr, "check: %s\n", f.c_str());
      return kExitCheck;
    }
    std::printf("check: ok\n");
  }
  return kExitOk;
}

struct TablesArgs {
  std::string report;
  std::string out = "tables";
};

int cmd_tables(const TablesArgs& args) {
  const auto report = bench::Report::load(args.report);
  const auto files = bench::emit_tables(report, args.out);
  for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark toolkit for unbiased language-model watermarking over a "
               "deterministic synthetic token model"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenerateArgs gen_args;
  auto* gen = app.add_subcommand("generate", "Generate a seeded toy corpus");
  gen->add_option("--manifest", gen_args.manifest, "Manifest file (default: smoke)");
  gen->add_option("-o,--out", gen_args.out, "Output generations file");
  gen->add_option("--strategy", gen_args.strategy,
                  "Watermark with this manifest strategy (default: plain)");
  gen->add_option("--prompts", gen_args.prompts, "Override prompt count");
  gen->add_option("--gen-len", gen_args.gen_len, "Override generation length");
  gen->add_option("--seed", gen_args.seed, "Override master seed");

  AttackArgs atk_args;
  auto* atk = app.add_subcommand("attack", "Apply edit-bounded token attacks");
  atk->add_option("-i,--in", atk_args.in, "Generations file")->required();
  atk->add_option("-o,--out", atk_args.out, "Output file");
  atk->add_option("--kind", atk_args.kind, "substitution|insertion|deletion|mixed");
  atk->add_option("--fraction", atk_args.fraction, "Edit budget as a fraction of T");
  atk->add_option("--edits", atk_args.edits, "Edit budget as a count");
  atk->add_option("--seed", atk_args.seed, "Attack seed");

  DetectArgs det_args;
  auto* det = app.add_subcommand("detect", "Score sequences against a detector");
  det->add_option("-i,--in", det_args.in, "Generations/attacked file")->required();
  det->add_option("--manifest", det_args.manifest, "Manifest file (default: smoke)");
  det->add_option("--strategy", det_args.strategy, "Strategy label")->required();
  det->add_option("-o,--out", det_args.out, "Output detections file");

  SpmgArgs spmg_args;
  auto* spmg_cmd = app.add_subcommand("spmg", "Repeated-prompt drift statistic");
  spmg_cmd->add_option("--manifest", spmg_args.manifest, "Manifest file (default: smoke)");
  spmg_cmd->add_option("--strategy", spmg_args.strategy, "Strategy label")->required();
  spmg_cmd->add_option("-o,--out", spmg_args.out, "Output file");

  CertArgs cert_args;
  auto* cert_cmd = app.add_subcommand("cert", "Certified radii for detections");
  cert_cmd->add_option("-i,--in", cert_args.in, "Generations file")->required();
  cert_cmd->add_option("--manifest", cert_args.manifest, "Manifest file (default: smoke)");
  cert_cmd->add_option("--strategy", cert_args.strategy, "Strategy label")->required();
  cert_cmd->add_option("--alpha", cert_args.alpha, "Detection level for tau");
  cert_cmd->add_option("-o,--out", cert_args.out, "Output file");

  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "Three-axis scores from reference tables");
  score->add_option("--fixtures", score_args.fixtures, "Reference tables JSON")
      ->required();
  score->add_option("-o,--out", score_args.out, "Output directory");
  score->add_flag("--check", score_args.check,
                  "Exit 4 unless published scores reproduce within 0.002");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Full pipeline: generate/attack/detect/"
                                        "spmg/cert/score");
  run->add_option("--manifest", run_args.manifest, "Manifest file (default: smoke)");
  run->add_option("-o,--out", run_args.out, "Output directory");
  run->add_option("--write-manifest", run_args.write_manifest,
                  "Also write the effective manifest here");
  run->add_flag("--check", run_args.check, "Run report sanity checks (exit 4 on fail)");
  run->add_flag("--serial", run_args.serial, "Force the serial reference kernels");

  TablesArgs tables_args;
  auto* tables = app.add_subcommand("tables", "Emit CSV tables from a report");
  tables->add_option("-i,--report", tables_args.report, "Report JSON")->required();
  tables->add_option("-o,--out", tables_args.out, "Output directory");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_generate(gen_args);
    if (atk->parsed()) return cmd_attack(atk_args);
    if (det->parsed()) return cmd_detect(det_args);
    if (spmg_cmd->parsed()) return cmd_spmg(spmg_args);
    if (cert_cmd->parsed()) return cmd_cert(cert_args);
    if (score->parsed()) return cmd_score(score_args);
    if (run->parsed()) return cmd_run(run_args);
    if (tables->parsed()) return cmd_tables(tables_args);
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  } catch (const BudgetError& e) {
    std::fprintf(stderr, "budget error: %s\n", e.what());
    return kExitBudget;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
}
