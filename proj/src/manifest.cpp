#include "wmbench/manifest.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "wmbench/errors.hpp"
#include "wmbench/version.hpp"

namespace wmbench::bench {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json scheme_to_json(const keys::ContextScheme& s) {
  ordered_json j;
  switch (s.kind) {
    case keys::SchemeKind::Global:
      j["kind"] = "global";
      break;
    case keys::SchemeKind::NGram:
      j["kind"] = "ngram";
      j["param"] = s.param;
      break;
    case keys::SchemeKind::Position:
      j["kind"] = "position";
      break;
    case keys::SchemeKind::FixedList:
      j["kind"] = "fixed_list";
      j["param"] = s.param;
      break;
  }
  return j;
}

keys::ContextScheme scheme_from_json(const ordered_json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "global") return keys::ContextScheme::global();
  if (kind == "ngram") return keys::ContextScheme::ngram(j.at("param").get<std::uint32_t>());
  if (kind == "position") return keys::ContextScheme::position();
  if (kind == "fixed_list") {
    return keys::ContextScheme::fixed_list(j.at("param").get<std::uint32_t>());
  }
  throw ConfigError("manifest: unknown context scheme '" + kind + "'");
}

ordered_json strategy_to_json(const reweight::WatermarkStrategy& s) {
  using reweight::Family;
  ordered_json j;
  switch (s.family) {
    case Family::KGW:
      j["family"] = "kgw";
      j["delta"] = s.delta;
      j["gamma"] = s.gamma;
      break;
    case Family::Unigram:
      j["family"] = "unigram";
      j["delta"] = s.delta;
      j["gamma"] = s.gamma;
      break;
    case Family::DiPmark:
      j["family"] = "dipmark";
      j["alpha"] = s.alpha;
      break;
    case Family::GammaReweight:
      j["family"] = "gamma_reweight";
      break;
    case Family::ITS:
      j["family"] = "its";
      break;
    case Family::EXP:
      j["family"] = "exp";
      break;
    case Family::SynthID:
      j["family"] = "synthid";
      j["layers"] = s.layers;
      break;
    case Family::MCmark:
      j["family"] = "mcmark";
      j["segments"] = s.segments;
      break;
    case Family::STA1:
      j["family"] = "sta1";
      j["gamma"] = s.gamma;
      break;
  }
  return j;
}

reweight::WatermarkStrategy strategy_from_json(const ordered_json& j) {
  using reweight::WatermarkStrategy;
  const std::string family = j.at("family").get<std::string>();
  if (family == "kgw") {
    return WatermarkStrategy::kgw(j.at("delta").get<double>(),
                                  j.value("gamma", 0.5));
  }
  if (family == "unigram") {
    return WatermarkStrategy::unigram(j.at("delta").get<double>(),
                                      j.value("gamma", 0.5));
  }
  if (family == "dipmark") return WatermarkStrategy::dipmark(j.at("alpha").get<double>());
  if (family == "gamma_reweight") return WatermarkStrategy::gamma_reweight();
  if (family == "its") return WatermarkStrategy::its();
  if (family == "exp") return WatermarkStrategy::exp();
  if (family == "synthid") {
    return WatermarkStrategy::synthid(j.at("layers").get<std::uint32_t>());
  }
  if (family == "mcmark") {
    return WatermarkStrategy::mcmark(j.at("segments").get<std::uint32_t>());
  }
  if (family == "sta1") return WatermarkStrategy::sta1(j.value("gamma", 0.5));
  throw ConfigError("manifest: unknown strategy family '" + family + "'");
}

ordered_json attack_to_json(const attacks::AttackSpec& a) {
  ordered_json j;
  switch (a.kind) {
    case attacks::AttackKind::Substitution:
      j["kind"] = "substitution";
      break;
    case attacks::AttackKind::Insertion:
      j["kind"] = "insertion";
      break;
    case attacks::AttackKind::Deletion:
      j["kind"] = "deletion";
      break;
    case attacks::AttackKind::Mixed:
      j["kind"] = "mixed";
      break;
  }
  if (a.edits) j["edits"] = *a.edits;
  if (a.fraction) j["fraction"] = *a.fraction;
  j["seed"] = a.seed;
  return j;
}

attacks::AttackSpec attack_from_json(const ordered_json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  attacks::AttackKind k;
  if (kind == "substitution") {
    k = attacks::AttackKind::Substitution;
  } else if (kind == "insertion") {
    k = attacks::AttackKind::Insertion;
  } else if (kind == "deletion") {
    k = attacks::AttackKind::Deletion;
  } else if (kind == "mixed") {
    k = attacks::AttackKind::Mixed;
  } else {
    throw ConfigError("manifest: unknown attack kind '" + kind + "'");
  }
  const std::uint64_t seed = j.value("seed", std::uint64_t{0});
  if (j.contains("edits")) {
    return attacks::AttackSpec::count(k, j.at("edits").get<std::uint32_t>(), seed);
  }
  if (j.contains("fraction")) {
    return attacks::AttackSpec::ratio(k, j.at("fraction").get<double>(), seed);
  }
  throw ConfigError("manifest: attack needs either 'edits' or 'fraction'");
}

}  // namespace

std::string StrategyConfig::label() const {
  const auto def = strategy.default_scheme();
  if (scheme.kind == def.kind && scheme.param == def.param) return strategy.name();
  return strategy.name() + "_" + scheme.name();
}

RunManifest RunManifest::smoke_defaults() {
  RunManifest m;
  m.toolkit_version = kVersion;
  m.created_utc = "2026-01-01T00:00:00Z";
  m.master_seed = 20260809;
  m.lm = LmConfig{};
  m.corpus = CorpusConfig{200, 8, 100};
  auto add = [&m](reweight::WatermarkStrategy s, std::uint64_t key_seed) {
    m.strategies.push_back({s, s.default_scheme(), key_seed});
  };
  add(reweight::WatermarkStrategy::kgw(2.0), 11);
  add(reweight::WatermarkStrategy::dipmark(0.5), 12);
  add(reweight::WatermarkStrategy::mcmark(4), 13);
  m.attacks = {
      attacks::AttackSpec::ratio(attacks::AttackKind::Substitution, 0.10, 101),
      attacks::AttackSpec::ratio(attacks::AttackKind::Substitution, 0.20, 102),
      attacks::AttackSpec::ratio(attacks::AttackKind::Substitution, 0.30, 103),
  };
  m.spmg = SpmgConfig{};
  m.cert_alpha = 0.01;
  return m;
}

std::string RunManifest::to_json() const {
  ordered_json j;
  j["schema_version"] = 1;
  j["toolkit_version"] = toolkit_version;
  j["created_utc"] = created_utc;
  j["master_seed"] = master_seed;
  j["lm"] = {{"vocab", lm.vocab},
             {"context_order", lm.context_order},
             {"concentration", lm.concentration},
             {"seed", lm.seed}};
  j["corpus"] = {{"prompts", corpus.prompts},
                 {"prompt_len", corpus.prompt_len},
                 {"gen_len", corpus.gen_len}};
  j["strategies"] = ordered_json::array();
  for (const auto& s : strategies) {
    ordered_json sj = strategy_to_json(s.strategy);
    sj["scheme"] = scheme_to_json(s.scheme);
    sj["key_seed"] = s.key_seed;
    j["strategies"].push_back(sj);
  }
  j["attacks"] = ordered_json::array();
  for (const auto& a : attacks) j["attacks"].push_back(attack_to_json(a));
  j["fpr_targets"] = fpr_targets;
  j["spmg"] = {{"prompts", spmg.prompts},
               {"generations", spmg.generations},
               {"gen_len", spmg.gen_len},
               {"alpha", spmg.alpha},
               {"surrogate", spmg.surrogate}};
  j["cert_alpha"] = cert_alpha;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest: parse error: ") + e.what());
  }
  try {
    RunManifest m;
    m.toolkit_version = j.value("toolkit_version", std::string(kVersion));
    m.created_utc = j.value("created_utc", std::string("1970-01-01T00:00:00Z"));
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    const auto& lj = j.at("lm");
    m.lm = LmConfig{lj.at("vocab").get<std::uint32_t>(),
                    lj.at("context_order").get<std::uint32_t>(),
                    lj.at("concentration").get<double>(),
                    lj.at("seed").get<std::uint64_t>()};
    const auto& cj = j.at("corpus");
    m.corpus = CorpusConfig{cj.at("prompts").get<std::uint32_t>(),
                            cj.at("prompt_len").get<std::uint32_t>(),
                            cj.at("gen_len").get<std::uint32_t>()};
    for (const auto& sj : j.at("strategies")) {
      StrategyConfig sc;
      sc.strategy = strategy_from_json(sj);
      sc.scheme = sj.contains("scheme") ? scheme_from_json(sj.at("scheme"))
                                        : sc.strategy.default_scheme();
      sc.key_seed = sj.value("key_seed", std::uint64_t{1});
      m.strategies.push_back(std::move(sc));
    }
    m.attacks.clear();
    for (const auto& aj : j.at("attacks")) m.attacks.push_back(attack_from_json(aj));
    m.fpr_targets = j.at("fpr_targets").get<std::vector<double>>();
    const auto& pj = j.at("spmg");
    m.spmg = SpmgConfig{pj.at("prompts").get<std::uint32_t>(),
                        pj.at("generations").get<std::uint32_t>(),
                        pj.at("gen_len").get<std::uint32_t>(),
                        pj.at("alpha").get<double>(),
                        pj.at("surrogate").get<std::string>()};
    m.cert_alpha = j.value("cert_alpha", 0.01);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest: missing or mistyped field: ") + e.what());
  }
}

RunManifest RunManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("manifest: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

void RunManifest::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("manifest: cannot write " + path);
  out << to_json();
}

std::string RunManifest::hash() const { return blake2b_hex(to_json()); }

}  // namespace wmbench::bench
