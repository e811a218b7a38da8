#include "wmbench/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "wmbench/errors.hpp"

namespace wmbench::bench {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json tpr_map_json(const std::map<std::string, double>& tpr) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : tpr) j[k] = v;
  return j;
}

std::map<std::string, double> tpr_map_from(const ordered_json& j) {
  std::map<std::string, double> out;
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = it.value().get<double>();
  return out;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ConfigError("report: cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, target);
}

std::string csv_num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

std::string Report::to_json() const {
  ordered_json j;
  j["schema_version"] = schema_version;
  j["toolkit_version"] = toolkit_version;
  j["manifest_hash"] = manifest_hash;
  j["status"] = status;
  j["manifest"] = ordered_json::parse(manifest.to_json());
  j["strategies"] = ordered_json::array();
  for (const auto& s : strategies) {
    ordered_json sj;
    sj["name"] = s.name;
    sj["detection"] = {{"tpr_at", tpr_map_json(s.detection.tpr_at)},
                       {"median_p", s.detection.median_p},
                       {"auroc", s.detection.auroc}};
    sj["robustness"] = ordered_json::array();
    for (const auto& cell : s.robustness) {
      sj["robustness"].push_back({{"attack", cell.attack},
                                  {"fraction", cell.fraction},
                                  {"tpr_at", tpr_map_json(cell.tpr_at)},
                                  {"median_p", cell.median_p}});
    }
    if (s.spmg) {
      sj["spmg"] = {{"surrogate", s.spmg->surrogate}, {"delta_mt", s.spmg->delta_mt},
                    {"delta_mm", s.spmg->delta_mm},   {"detwmk", s.spmg->detwmk},
                    {"threshold", s.spmg->threshold}, {"reject", s.spmg->reject}};
    }
    if (s.certificate) {
      sj["certificate"] = {{"tau", s.certificate->tau},
                           {"r_max", s.certificate->r_max},
                           {"score_bound", s.certificate->score_bound},
                           {"mean_radius", s.certificate->mean_radius},
                           {"median_radius", s.certificate->median_radius},
                           {"frac_radius_ge_1", s.certificate->frac_radius_ge_1}};
    }
    ordered_json scores = ordered_json::object();
    if (s.score_unbiasedness) scores["unbiasedness"] = *s.score_unbiasedness;
    if (s.score_detectability) scores["detectability"] = *s.score_detectability;
    if (s.score_robustness) scores["robustness"] = *s.score_robustness;
    sj["scores"] = scores;
    j["strategies"].push_back(sj);
  }
  return j.dump(2) + "\n";
}

Report Report::from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("report: parse error: ") + e.what());
  }
  Report r;
  r.schema_version = j.at("schema_version").get<int>();
  r.toolkit_version = j.at("toolkit_version").get<std::string>();
  r.manifest_hash = j.at("manifest_hash").get<std::string>();
  r.status = j.at("status").get<std::string>();
  r.manifest = RunManifest::from_json(j.at("manifest").dump());
  for (const auto& sj : j.at("strategies")) {
    StrategyReport s;
    s.name = sj.at("name").get<std::string>();
    const auto& dj = sj.at("detection");
    s.detection.tpr_at = tpr_map_from(dj.at("tpr_at"));
    s.detection.median_p = dj.at("median_p").get<double>();
    s.detection.auroc = dj.at("auroc").get<double>();
    for (const auto& cj : sj.at("robustness")) {
      RobustnessCell cell;
      cell.attack = cj.at("attack").get<std::string>();
      cell.fraction = cj.at("fraction").get<double>();
      cell.tpr_at = tpr_map_from(cj.at("tpr_at"));
      cell.median_p = cj.at("median_p").get<double>();
      s.robustness.push_back(std::move(cell));
    }
    if (sj.contains("spmg")) {
      const auto& pj = sj.at("spmg");
      s.spmg = SpmgSummary{pj.at("surrogate").get<std::string>(),
                           pj.at("delta_mt").get<double>(),
                           pj.at("delta_mm").get<double>(),
                           pj.at("detwmk").get<double>(),
                           pj.at("threshold").get<double>(),
                           pj.at("reject").get<bool>()};
    }
    if (sj.contains("certificate")) {
      const auto& cj = sj.at("certificate");
      s.certificate = CertificateSummary{cj.at("tau").get<double>(),
                                         cj.at("r_max").get<std::uint32_t>(),
                                         cj.at("score_bound").get<double>(),
                                         cj.at("mean_radius").get<double>(),
                                         cj.at("median_radius").get<std::int64_t>(),
                                         cj.at("frac_radius_ge_1").get<double>()};
    }
    if (sj.contains("scores")) {
      const auto& kj = sj.at("scores");
      if (kj.contains("unbiasedness")) s.score_unbiasedness = kj.at("unbiasedness").get<double>();
      if (kj.contains("detectability")) {
        s.score_detectability = kj.at("detectability").get<double>();
      }
      if (kj.contains("robustness")) s.score_robustness = kj.at("robustness").get<double>();
    }
    r.strategies.push_back(std::move(s));
  }
  return r;
}

Report Report::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("report: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

void Report::save(const std::string& path) const { write_text_atomic(path, to_json()); }

std::string Report::hash() const { return blake2b_hex(to_json()); }

std::vector<std::string> emit_tables(const Report& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  // Three-axis summary (one row per method).
  {
    std::ostringstream os;
    os << "method,unbiasedness,detectability,robustness\n";
    for (const auto& s : report.strategies) {
      os << s.name << ',' << (s.score_unbiasedness ? csv_num(*s.score_unbiasedness) : "")
         << ',' << (s.score_detectability ? csv_num(*s.score_detectability) : "") << ','
         << (s.score_robustness ? csv_num(*s.score_robustness) : "") << '\n';
    }
    const std::string path = (fs::path(out_dir) / "summary_scores.csv").string();
    write_text_atomic(path, os.str());
    written.push_back(path);
  }

  // Detection operating points.
  {
    std::ostringstream os;
    os << "method";
    std::vector<std::string> fpr_labels;
    if (!report.strategies.empty()) {
      for (const auto& [k, v] : report.strategies.front().detection.tpr_at) {
        fpr_labels.push_back(k);
      }
    }
    for (const auto& k : fpr_labels) os << ",tpr_at_" << k;
    os << ",median_p,auroc\n";
    for (const auto& s : report.strategies) {
      os << s.name;
      for (const auto& k : fpr_labels) {
        const auto it = s.detection.tpr_at.find(k);
        os << ',' << (it != s.detection.tpr_at.end() ? csv_num(it->second) : "");
      }
      os << ',' << csv_num(s.detection.median_p) << ',' << csv_num(s.detection.auroc)
         << '\n';
    }
    const std::string path = (fs::path(out_dir) / "detection.csv").string();
    write_text_atomic(path, os.str());
    written.push_back(path);
  }

  // Per-attack TPR grid: one row per (method, attack, fpr target).
  {
    std::ostringstream os;
    os << "method,attack,fraction,fpr,tpr\n";
    for (const auto& s : report.strategies) {
      for (const auto& cell : s.robustness) {
        for (const auto& [fpr, tpr] : cell.tpr_at) {
          os << s.name << ',' << cell.attack << ',' << csv_num(cell.fraction) << ','
             << fpr << ',' << csv_num(tpr) << '\n';
        }
      }
    }
    const std::string path = (fs::path(out_dir) / "robustness_tpr.csv").string();
    write_text_atomic(path, os.str());
    written.push_back(path);
  }

  // Scatter data: x = unbiasedness, y = detectability, size = robustness.
  {
    std::ostringstream os;
    os << "method,x_unbiasedness,y_detectability,size_robustness\n";
    for (const auto& s : report.strategies) {
      os << s.name << ',' << (s.score_unbiasedness ? csv_num(*s.score_unbiasedness) : "")
         << ',' << (s.score_detectability ? csv_num(*s.score_detectability) : "") << ','
         << (s.score_robustness ? csv_num(*s.score_robustness) : "") << '\n';
    }
    const std::string path = (fs::path(out_dir) / "plot_data.csv").string();
    write_text_atomic(path, os.str());
    written.push_back(path);
  }

  return written;
}

}  // namespace wmbench::bench
