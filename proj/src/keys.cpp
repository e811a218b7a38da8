#include "wmbench/keys.hpp"

#include <algorithm>

namespace wmbench::keys {

namespace {

constexpr const char* kKeyDomain = "wmbench.watermark.v1";

// Context encoding tags; part of the documented PRF layout.
constexpr unsigned char kTagGlobal = 0x00;
constexpr unsigned char kTagNGram = 0x01;
constexpr unsigned char kTagPosition = 0x02;
constexpr unsigned char kTagFixedList = 0x03;

}  // namespace

SecretKey SecretKey::from_bytes(Bytes b) {
  if (b.size() < 16) throw InputDomainError("SecretKey: need at least 16 bytes");
  SecretKey sk;
  sk.bytes = std::move(b);
  sk.prf_key = prf_derive_key(kKeyDomain, sk.bytes);
  return sk;
}

SecretKey SecretKey::from_seed(std::uint64_t seed) {
  Bytes payload;
  put_u64_le(payload, seed);
  auto key = prf_derive_key("wmbench.sk.v1", payload);
  return from_bytes(Bytes(key.begin(), key.end()));
}

ContextScheme ContextScheme::ngram(std::uint32_t n) {
  if (n < 1) throw InputDomainError("ContextScheme: ngram order must be >= 1");
  return {SchemeKind::NGram, n};
}

ContextScheme ContextScheme::fixed_list(std::uint32_t length) {
  if (length < 1) throw InputDomainError("ContextScheme: list length must be >= 1");
  return {SchemeKind::FixedList, length};
}

std::string ContextScheme::name() const {
  switch (kind) {
    case SchemeKind::Global:
      return "global";
    case SchemeKind::NGram:
      return "ngram" + std::to_string(param);
    case SchemeKind::Position:
      return "position";
    case SchemeKind::FixedList:
      return "fixed_list" + std::to_string(param);
  }
  return "unknown";
}

std::vector<Token> KeyDraw::permutation(std::uint32_t v) {
  std::vector<Token> perm(v);
  for (std::uint32_t i = 0; i < v; ++i) perm[i] = i;
  for (std::uint32_t i = v; i-- > 1;) {
    const auto j = static_cast<std::uint32_t>(uniform_below(i + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

PrfKeyDraw::PrfKeyDraw(const std::array<unsigned char, 32>& key, Bytes context)
    : stream_(key, std::move(context)) {}

ScriptedKeyDraw& ScriptedKeyDraw::push_uniform(double u) {
  uniforms_.push_back(u);
  return *this;
}

ScriptedKeyDraw& ScriptedKeyDraw::push_permutation(std::vector<Token> perm) {
  perms_.push_back(std::move(perm));
  return *this;
}

double ScriptedKeyDraw::uniform() {
  if (uniforms_.empty()) return 0.5;
  const double u = uniforms_.front();
  uniforms_.pop_front();
  return u;
}

std::uint64_t ScriptedKeyDraw::uniform_below(std::uint64_t n) {
  if (n <= 1) return 0;
  return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
}

std::vector<Token> ScriptedKeyDraw::permutation(std::uint32_t v) {
  if (!perms_.empty()) {
    auto p = perms_.front();
    perms_.pop_front();
    if (p.size() != v) throw ContractError("ScriptedKeyDraw: permutation size mismatch");
    return p;
  }
  std::vector<Token> identity(v);
  for (std::uint32_t i = 0; i < v; ++i) identity[i] = i;
  return identity;
}

PrfKeyDraw derive(const SecretKey& sk, const ContextScheme& scheme,
                  std::span<const Token> prefix, std::uint32_t position,
                  const Vocab& vocab) {
  Bytes context;
  switch (scheme.kind) {
    case SchemeKind::Global:
      context.push_back(kTagGlobal);
      break;
    case SchemeKind::NGram: {
      context.push_back(kTagNGram);
      put_u32_le(context, scheme.param);
      const std::uint32_t n = scheme.param;
      // Last n prefix tokens, left-padded with the sentinel id V.
      for (std::uint32_t slot = 0; slot < n; ++slot) {
        const std::int64_t idx =
            static_cast<std::int64_t>(prefix.size()) - static_cast<std::int64_t>(n) +
            static_cast<std::int64_t>(slot);
        const Token t = idx >= 0 ? prefix[static_cast<std::size_t>(idx)] : vocab.sentinel();
        put_u32_le(context, t);
      }
      break;
    }
    case SchemeKind::Position:
      context.push_back(kTagPosition);
      put_u64_le(context, position);
      break;
    case SchemeKind::FixedList:
      context.push_back(kTagFixedList);
      put_u32_le(context, scheme.param);
      put_u64_le(context, position % scheme.param);
      break;
  }
  return PrfKeyDraw(sk.prf_key, std::move(context));
}

std::uint32_t effect_region_length(const ContextScheme& scheme, EditKind kind,
                                   std::uint32_t i, std::uint32_t T) {
  if (i >= T) throw InputDomainError("effect_region_length: position out of range");
  switch (scheme.kind) {
    case SchemeKind::Global:
      return 1;  // the key ignores position and prefix
    case SchemeKind::NGram:
      return std::min(scheme.param + 1, T - i);
    case SchemeKind::Position:
    case SchemeKind::FixedList:
      if (kind == EditKind::Substitution) return 1;
      return T - i;  // key indices shift for every suffix token
  }
  return 1;
}

std::uint32_t max_effect_region(const ContextScheme& scheme, EditKind kind,
                                std::uint32_t T) {
  if (T == 0) throw InputDomainError("max_effect_region: empty sequence");
  std::uint32_t best = 1;
  for (std::uint32_t i = 0; i < T; ++i) {
    best = std::max(best, effect_region_length(scheme, kind, i, T));
  }
  return best;
}

std::uint32_t max_effect_region_any(const ContextScheme& scheme, std::uint32_t T) {
  std::uint32_t best = 1;
  for (EditKind kind :
       {EditKind::Substitution, EditKind::Insertion, EditKind::Deletion}) {
    best = std::max(best, max_effect_region(scheme, kind, T));
  }
  return best;
}

}  // namespace wmbench::keys
