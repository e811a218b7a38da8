#include "wmbench/lm.hpp"

#include <cmath>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "wmbench/prf.hpp"

namespace wmbench::lm {

namespace {

constexpr const char* kLmDomain = "wmbench.toylm.v1";

double stream_normal(PrfStream& s) {
  // Box-Muller, cosine branch only. 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - s.next_unit();
  const double u2 = s.next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Marsaglia-Tsang, driven entirely by the PRF stream.
double stream_gamma(PrfStream& s, double shape) {
  if (shape < 1.0) {
    const double u = 1.0 - s.next_unit();
    return stream_gamma(s, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = stream_normal(s);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - s.next_unit();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

struct ContextHash {
  std::size_t operator()(const TokenSeq& ctx) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (Token t : ctx) {
      h ^= t;
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

struct ToyLM::Cache {
  std::array<unsigned char, 32> prf_key{};
  mutable std::shared_mutex mutex;
  // unique_ptr values keep returned references stable across rehashes
  mutable std::unordered_map<TokenSeq, std::unique_ptr<TokenDistribution>, ContextHash>
      entries;
};

ToyLM::ToyLM(std::uint64_t seed, std::uint32_t context_order, double concentration,
             Vocab vocab)
    : seed_(seed),
      context_order_(context_order),
      concentration_(concentration),
      vocab_(vocab),
      cache_(std::make_shared<Cache>()) {
  if (!(concentration > 0.0)) {
    throw InputDomainError("ToyLM: concentration must be positive");
  }
  Bytes payload;
  put_u64_le(payload, seed_);
  cache_->prf_key = prf_derive_key(kLmDomain, payload);
}

const TokenDistribution& ToyLM::next_distribution(const TokenSeq& prefix) const {
  for (Token t : prefix) {
    if (!vocab_.contains(t)) {
      throw InputDomainError("next_distribution: prefix token out of vocab range");
    }
  }
  const std::size_t keep = std::min<std::size_t>(context_order_, prefix.size());
  TokenSeq context(prefix.end() - static_cast<std::ptrdiff_t>(keep), prefix.end());

  {
    std::shared_lock lock(cache_->mutex);
    auto it = cache_->entries.find(context);
    if (it != cache_->entries.end()) return *it->second;
  }

  // Build outside the lock; duplicated work on a race is harmless because
  // the construction is deterministic.
  Bytes msg;
  put_u32_le(msg, static_cast<std::uint32_t>(context.size()));
  for (Token t : context) put_u32_le(msg, t);
  PrfStream stream(cache_->prf_key, msg);

  const std::uint32_t v = vocab_.size;
  std::vector<double> raw(v);
  double sum = 0.0;
  for (std::uint32_t i = 0; i < v; ++i) {
    raw[i] = stream_gamma(stream, concentration_);
    sum += raw[i];
  }
  if (sum <= 0.0) {
    raw.assign(v, 1.0 / static_cast<double>(v));  // unreachable in practice
  } else {
    for (double& x : raw) x /= sum;
  }
  auto dist = std::make_unique<TokenDistribution>(std::move(raw));

  std::unique_lock lock(cache_->mutex);
  auto [it, inserted] = cache_->entries.try_emplace(std::move(context), std::move(dist));
  return *it->second;
}

double ToyLM::log_prob(const TokenSeq& prefix, Token token) const {
  if (!vocab_.contains(token)) {
    throw InputDomainError("log_prob: token out of vocab range");
  }
  const double p = next_distribution(prefix)[token];
  return std::log(p);
}

}  // namespace wmbench::lm
