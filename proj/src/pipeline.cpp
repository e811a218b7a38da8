#include "wmbench/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "wmbench/cert.hpp"
#include "wmbench/detect.hpp"
#include "wmbench/generation.hpp"
#include "wmbench/random.hpp"
#include "wmbench/stats.hpp"
#include "wmbench/version.hpp"

namespace wmbench::bench {

namespace {

// Seed sub-stream tags; every random stream in a run hangs off master_seed.
constexpr std::uint64_t kSeedPrompts = 0x01;
constexpr std::uint64_t kSeedBaseline = 0x02;
constexpr std::uint64_t kSeedStrategy = 0x1000;
constexpr std::uint64_t kSeedAttack = 0xA000;
constexpr std::uint64_t kSeedSpmgBase = 0xB001;
constexpr std::uint64_t kSeedSpmgTest = 0xB002;
constexpr std::uint64_t kSeedSpmg = 0xB000;

std::string fpr_label(double fpr) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", fpr);
  return buf;
}

struct SpmgBundle {
  spmg::SPMGReport report;        // for the configured surrogate
  // Quality-surrogate drift deltas (mean-nll, perplexity) for the
  // unbiasedness axis. The keyed green-rate surrogate is deliberately
  // excluded there: it is the detection statistic, and under a fixed key
  // it drifts for every detectable watermark, which would conflate the
  // quality axis with detectability.
  std::vector<double> quality_deltas_mt;
  std::vector<double> quality_deltas_mm;
};

spmg::MetricSurrogate surrogate_by_name(const std::string& name,
                                        const keys::SecretKey& sk,
                                        const keys::ContextScheme& scheme,
                                        const Vocab& vocab) {
  if (name == "green_rate") {
    return spmg::MetricSurrogate::green_rate(sk, scheme, vocab);
  }
  if (name == "clipped_mean_nll") return spmg::MetricSurrogate::clipped_mean_nll();
  if (name == "clipped_perplexity") return spmg::MetricSurrogate::clipped_perplexity();
  throw ConfigError("manifest: unknown spmg surrogate '" + name + "'");
}

/// Generations for the three SPMG models evaluated under several
/// surrogates at once (one generation pass, many metrics).
SpmgBundle run_spmg(const lm::ToyLM& base_lm, const StrategyConfig& sc,
                    const keys::SecretKey& sk, const RunManifest& manifest,
                    std::uint64_t strat_seed, par::Mode mode) {
  const auto& cfg = manifest.spmg;
  const Vocab& vocab = base_lm.vocab();
  const auto prompts = lm::make_prompt_corpus(vocab, cfg.prompts, 4,
                                              derive_seed(strat_seed, kSeedPrompts));

  std::vector<spmg::MetricSurrogate> mets = {
      surrogate_by_name("clipped_mean_nll", sk, sc.scheme, vocab),
      surrogate_by_name("clipped_perplexity", sk, sc.scheme, vocab),
      surrogate_by_name("green_rate", sk, sc.scheme, vocab),
  };
  std::size_t configured = 0;
  for (std::size_t i = 0; i < mets.size(); ++i) {
    if (mets[i].name() == cfg.surrogate) configured = i;
  }

  const spmg::TestModel base =
      spmg::TestModel::plain(base_lm, derive_seed(strat_seed, kSeedSpmgBase));
  const spmg::TestModel clone =
      spmg::TestModel::plain(base_lm, derive_seed(strat_seed, kSeedSpmg));
  const spmg::TestModel test = spmg::TestModel::watermarked(
      base_lm, sc.strategy, sk, sc.scheme, derive_seed(strat_seed, kSeedSpmgTest));

  const auto collect = [&](const spmg::TestModel& model) {
    const std::size_t total = static_cast<std::size_t>(cfg.prompts) * cfg.generations;
    std::vector<std::vector<double>> values(mets.size(), std::vector<double>(total));
    par::parallel_for(
        total,
        [&](std::size_t item) {
          const std::size_t i = item / cfg.generations;
          const std::size_t j = item % cfg.generations;
          const std::uint64_t seed = derive_seed(derive_seed(model.sampling_seed, i), j);
          const auto g =
              lm::generate(model.base, prompts[i], cfg.gen_len, model.policy, seed, i);
          for (std::size_t k = 0; k < mets.size(); ++k) {
            values[k][item] = mets[k].evaluate(g);
          }
        },
        mode);
    std::vector<std::vector<double>> means(mets.size(),
                                           std::vector<double>(cfg.prompts, 0.0));
    for (std::size_t k = 0; k < mets.size(); ++k) {
      for (std::uint32_t i = 0; i < cfg.prompts; ++i) {
        double acc = 0.0;
        for (std::uint32_t j = 0; j < cfg.generations; ++j) {
          acc += values[k][static_cast<std::size_t>(i) * cfg.generations + j];
        }
        means[k][i] = acc / cfg.generations;
      }
    }
    return means;
  };

  const auto means_base = collect(base);
  const auto means_test = collect(test);
  const auto means_clone = collect(clone);

  const auto gap = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / static_cast<double>(a.size());
  };

  SpmgBundle bundle;
  for (std::size_t k = 0; k < mets.size(); ++k) {
    if (mets[k].kind != spmg::MetricSurrogate::Kind::GreenRate) {
      bundle.quality_deltas_mt.push_back(gap(means_base[k], means_test[k]));
      bundle.quality_deltas_mm.push_back(gap(means_base[k], means_clone[k]));
    }
  }

  auto& rep = bundle.report;
  rep.per_prompt_mean_base = means_base[configured];
  rep.per_prompt_mean_test = means_test[configured];
  rep.per_prompt_mean_clone = means_clone[configured];
  rep.delta_mt = gap(means_base[configured], means_test[configured]);
  rep.delta_mm = gap(means_base[configured], means_clone[configured]);
  rep.detwmk = rep.delta_mt - rep.delta_mm;
  rep.threshold = spmg::mcdiarmid_threshold(mets[configured].bound, cfg.generations,
                                            cfg.prompts, cfg.alpha);
  rep.reject = rep.detwmk >= rep.threshold;
  return bundle;
}

}  // namespace

Report run_pipeline(const RunManifest& manifest, const PipelineOptions& options) {
  Report report;
  report.toolkit_version = kVersion;
  report.manifest_hash = manifest.hash();
  report.manifest = manifest;

  try {
    const Vocab vocab(manifest.lm.vocab);
    const lm::ToyLM base_lm(manifest.lm.seed, manifest.lm.context_order,
                            manifest.lm.concentration, vocab);
    const auto prompts =
        lm::make_prompt_corpus(vocab, manifest.corpus.prompts, manifest.corpus.prompt_len,
                               derive_seed(manifest.master_seed, kSeedPrompts));
    const std::uint32_t n_seqs = manifest.corpus.prompts;
    const std::uint32_t gen_len = manifest.corpus.gen_len;

    // Matched unwatermarked corpus, shared by every strategy.
    std::vector<lm::Generation> baseline(n_seqs);
    par::parallel_for(
        n_seqs,
        [&](std::size_t i) {
          baseline[i] = lm::generate(
              base_lm, prompts[i], gen_len, lm::SamplingPolicy::plain(),
              derive_seed(derive_seed(manifest.master_seed, kSeedBaseline), i), i);
        },
        options.mode);

    // Baseline quality metrics for the unbiasedness axis (green rate is
    // strategy-keyed, so only the likelihood surrogates live here).
    const auto corpus_mean = [&](const std::vector<lm::Generation>& gens,
                                 const spmg::MetricSurrogate& met) {
      double acc = 0.0;
      for (const auto& g : gens) acc += met.evaluate(g);
      return acc / static_cast<double>(gens.size());
    };

    for (std::size_t sidx = 0; sidx < manifest.strategies.size(); ++sidx) {
      const StrategyConfig& sc = manifest.strategies[sidx];
      const std::uint64_t strat_seed =
          derive_seed(manifest.master_seed, kSeedStrategy + sidx);
      const keys::SecretKey sk = keys::SecretKey::from_seed(sc.key_seed);
      const auto policy = lm::SamplingPolicy::watermarked(sc.strategy, sk, sc.scheme);
      const auto detector = detect::Detector::for_strategy(sc.strategy, sc.scheme, vocab);

      StrategyReport sr;
      sr.name = sc.label();

      // Matched watermarked corpus.
      std::vector<lm::Generation> wm(n_seqs);
      par::parallel_for(
          n_seqs,
          [&](std::size_t i) {
            wm[i] = lm::generate(base_lm, prompts[i], gen_len, policy,
                                 derive_seed(strat_seed, i), i);
          },
          options.mode);

      if (detector.score_kind == detect::ScoreKind::ItsScore) {
        detect::warm_its_null_table(gen_len, vocab.size);
      }

      // Clean detection.
      std::vector<double> pos_p(n_seqs);
      std::vector<double> neg_p(n_seqs);
      std::vector<double> pos_stat(n_seqs);
      par::parallel_for(
          n_seqs,
          [&](std::size_t i) {
            const auto rp = detect::score_sequence(detector, wm[i].tokens, sk);
            pos_p[i] = rp.p_value;
            pos_stat[i] = rp.statistic;
            neg_p[i] = detect::score_sequence(detector, baseline[i].tokens, sk).p_value;
          },
          options.mode);
      for (double f : manifest.fpr_targets) {
        sr.detection.tpr_at[fpr_label(f)] = detect::tpr_at_fpr(pos_p, f);
      }
      sr.detection.median_p = detect::median_pvalue(pos_p);
      sr.detection.auroc = detect::auroc(pos_p, neg_p);

      // Attacks.
      std::vector<std::pair<scoring::Attack, std::array<double, 3>>> score_rows;
      for (std::size_t aidx = 0; aidx < manifest.attacks.size(); ++aidx) {
        const auto& spec = manifest.attacks[aidx];
        std::vector<double> att_p(n_seqs);
        par::parallel_for(
            n_seqs,
            [&](std::size_t i) {
              attacks::AttackSpec seq_spec = spec;
              seq_spec.seed =
                  derive_seed(derive_seed(strat_seed, kSeedAttack + aidx) ^ spec.seed, i);
              const auto attacked = attacks::apply_attack(wm[i].tokens, seq_spec, vocab);
              att_p[i] =
                  detect::score_sequence(detector, attacked.tokens, sk).p_value;
            },
            options.mode);
        RobustnessCell cell;
        cell.attack = spec.name();
        cell.fraction = spec.fraction.value_or(0.0);
        for (double f : manifest.fpr_targets) {
          cell.tpr_at[fpr_label(f)] = detect::tpr_at_fpr(att_p, f);
        }
        cell.median_p = detect::median_pvalue(att_p);
        sr.robustness.push_back(cell);

        if (spec.kind == attacks::AttackKind::Substitution && spec.fraction) {
          const double rho = *spec.fraction;
          std::optional<scoring::Attack> tag;
          if (std::abs(rho - 0.30) < 1e-9) tag = scoring::Attack::Random30;
          if (std::abs(rho - 0.20) < 1e-9) tag = scoring::Attack::Random20;
          if (std::abs(rho - 0.10) < 1e-9) tag = scoring::Attack::Random10;
          if (tag) {
            const auto get = [&](double f) {
              const auto it = cell.tpr_at.find(fpr_label(f));
              return it == cell.tpr_at.end() ? 0.0 : it->second;
            };
            score_rows.push_back({*tag, {get(0.001), get(0.01), get(0.05)}});
          }
        }
      }

      // SPMG drift.
      const SpmgBundle bundle =
          run_spmg(base_lm, sc, sk, manifest, strat_seed, options.mode);
      sr.spmg = SpmgSummary{manifest.spmg.surrogate, bundle.report.delta_mt,
                            bundle.report.delta_mm,  bundle.report.detwmk,
                            bundle.report.threshold, bundle.report.reject};

      // Certificates (analytic-null detectors only).
      if (detector.score_kind != detect::ScoreKind::ItsScore) {
        const double tau =
            detect::detection_threshold(detector, gen_len, manifest.cert_alpha);
        const std::uint32_t r_max = keys::max_effect_region_any(sc.scheme, gen_len);
        std::vector<std::int64_t> radii(n_seqs);
        for (std::uint32_t i = 0; i < n_seqs; ++i) {
          radii[i] =
              cert::certified_radius(pos_stat[i], tau, r_max, detector.score_bound);
        }
        CertificateSummary cs;
        cs.tau = tau;
        cs.r_max = r_max;
        cs.score_bound = detector.score_bound;
        double acc = 0.0;
        std::size_t ge1 = 0;
        for (auto r : radii) {
          acc += static_cast<double>(r);
          if (r >= 1) ++ge1;
        }
        cs.mean_radius = acc / static_cast<double>(n_seqs);
        std::vector<std::int64_t> sorted = radii;
        std::sort(sorted.begin(), sorted.end());
        cs.median_radius = sorted[(sorted.size() - 1) / 2];
        cs.frac_radius_ge_1 = static_cast<double>(ge1) / static_cast<double>(n_seqs);
        sr.certificate = cs;
      }

      // Scores.
      {
        const auto met_nll = spmg::MetricSurrogate::clipped_mean_nll();
        const auto met_ppl = spmg::MetricSurrogate::clipped_perplexity();
        scoring::UnbiasednessInputs ui;
        ui.baseline_cfg1 = {corpus_mean(baseline, met_nll),
                            corpus_mean(baseline, met_ppl)};
        ui.method_cfg1 = {corpus_mean(wm, met_nll), corpus_mean(wm, met_ppl)};
        ui.method_cfg2_delta = bundle.quality_deltas_mt;
        ui.baseline_cfg2_delta = bundle.quality_deltas_mm;
        sr.score_unbiasedness = scoring::unbiasedness_score(ui);

        const auto tpr = [&](double f) {
          const auto it = sr.detection.tpr_at.find(fpr_label(f));
          return it == sr.detection.tpr_at.end() ? 0.0 : it->second;
        };
        sr.score_detectability = scoring::detectability_score(
            tpr(0.05), tpr(0.01), tpr(0.001), std::max(sr.detection.median_p, 1e-300),
            sr.detection.auroc);

        if (!score_rows.empty()) {
          sr.score_robustness = scoring::robustness_score_partial(score_rows);
        }
      }

      report.strategies.push_back(std::move(sr));
    }
    report.status = "complete";
  } catch (const BudgetError& e) {
    report.status = std::string("partial(budget): ") + e.what();
  } catch (const std::exception& e) {
    report.status = std::string("partial: ") + e.what();
  }
  return report;
}

std::vector<std::string> check_report(const Report& report) {
  std::vector<std::string> failures;
  if (report.status != "complete") {
    failures.push_back("status: " + report.status);
  }
  if (report.manifest_hash != report.manifest.hash()) {
    failures.push_back("manifest hash mismatch");
  }
  for (const auto& s : report.strategies) {
    for (const auto& [label, tpr] : s.detection.tpr_at) {
      if (!(tpr >= 0.0 && tpr <= 1.0)) {
        failures.push_back(s.name + ": tpr_at " + label + " out of range");
      }
    }
    if (!(s.detection.auroc >= 0.0 && s.detection.auroc <= 1.0)) {
      failures.push_back(s.name + ": auroc out of range");
    }
    if (!(s.detection.median_p > 0.0 && s.detection.median_p <= 1.0)) {
      failures.push_back(s.name + ": median_p out of range");
    }
    if (s.robustness.size() != report.manifest.attacks.size()) {
      failures.push_back(s.name + ": robustness rows do not match attack specs");
    }
    for (const auto& opt : {s.score_unbiasedness, s.score_detectability,
                            s.score_robustness}) {
      if (opt && !(*opt >= 0.0 && *opt <= 1.0)) {
        failures.push_back(s.name + ": score out of [0,1]");
      }
    }
    if (s.spmg && s.spmg->reject != (s.spmg->detwmk >= s.spmg->threshold)) {
      failures.push_back(s.name + ": spmg reject flag inconsistent");
    }
  }
  return failures;
}

}  // namespace wmbench::bench
