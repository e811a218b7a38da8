#include "wmbench/cert.hpp"

#include <algorithm>

#include "wmbench/attacks.hpp"
#include "wmbench/parallel.hpp"

namespace wmbench::cert {

std::int64_t certified_radius(double statistic, double tau, std::uint32_t r_max,
                              double score_bound) {
  if (r_max < 1) throw InputDomainError("certified_radius: r_max >= 1");
  if (!(score_bound > 0.0)) throw InputDomainError("certified_radius: score bound > 0");
  if (!(statistic > tau)) return -1;
  const double step = static_cast<double>(r_max) * score_bound;
  std::int64_t b = 0;
  while (statistic - tau > static_cast<double>(b + 1) * step) ++b;
  return b;
}

Certificate make_certificate(double statistic, double tau,
                             const keys::ContextScheme& scheme, double score_bound,
                             std::uint32_t token_count) {
  Certificate c;
  c.statistic = statistic;
  c.threshold = tau;
  c.r_max = keys::max_effect_region_any(scheme, token_count);
  c.score_bound = score_bound;
  c.radius = certified_radius(statistic, tau, c.r_max, score_bound);
  return c;
}

bool verify_certificate_exhaustive(const TokenSeq& tokens,
                                   const detect::Detector& detector,
                                   const keys::SecretKey& sk, double tau,
                                   std::uint32_t b) {
  const Vocab vocab(detector.vocab_size);
  const auto candidates = attacks::enumerate_edits_vec(tokens, b, vocab);
  std::vector<char> ok(candidates.size(), 1);
  par::parallel_for(candidates.size(), [&](std::size_t i) {
    const double s = candidates[i].empty()
                         ? 0.0
                         : detect::sequence_statistic(detector, candidates[i], sk);
    ok[i] = s >= tau ? 1 : 0;
  });
  return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
}

double max_one_edit_drop(const TokenSeq& tokens, const detect::Detector& detector,
                         const keys::SecretKey& sk) {
  const Vocab vocab(detector.vocab_size);
  const double base = detect::sequence_statistic(detector, tokens, sk);
  const auto candidates = attacks::enumerate_edits_vec(tokens, 1, vocab);
  std::vector<double> stats(candidates.size());
  par::parallel_for(candidates.size(), [&](std::size_t i) {
    stats[i] = candidates[i].empty()
                   ? 0.0
                   : detect::sequence_statistic(detector, candidates[i], sk);
  });
  double min_stat = base;
  for (double s : stats) min_stat = std::min(min_stat, s);
  return base - min_stat;
}

double expected_drop_green(double green_rate, std::uint32_t region) {
  if (!(green_rate >= 0.0 && green_rate <= 1.0)) {
    throw InputDomainError("expected_drop_green: rate in [0,1]");
  }
  if (region < 1) throw InputDomainError("expected_drop_green: region >= 1");
  return (2.0 * green_rate - 1.0) / 2.0 * static_cast<double>(region);
}

double expected_drop_bits(double bit_mean, std::uint32_t layers, std::uint32_t region) {
  if (!(bit_mean >= 0.0 && bit_mean <= static_cast<double>(layers))) {
    throw InputDomainError("expected_drop_bits: mean in [0, m]");
  }
  if (region < 1) throw InputDomainError("expected_drop_bits: region >= 1");
  return (bit_mean - static_cast<double>(layers) / 2.0) * static_cast<double>(region);
}

}  // namespace wmbench::cert
