#pragma once

/**
 * Watermark key derivation and token effect regions.
 *
 * A KeyDraw is the per-position watermark randomness: a deterministic
 * stream of uniform[0,1) variates and of uniform permutations over the
 * vocabulary, derived from (secret key, context scheme, context value).
 * The stream layout is fixed in prf.hpp; the context encodings are fixed
 * below so generation and detection reproduce identical draws.
 *
 * Context value per scheme (position is the 0-based index of the token
 * about to be generated, prefix is the observed sequence before it):
 *   NGram(n)     last n prefix tokens, left-padded with the sentinel V
 *   Position     the integer position
 *   FixedList(L) position mod L
 *   Global       constant empty context
 */

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wmbench/prf.hpp"
#include "wmbench/types.hpp"

namespace wmbench::keys {

struct SecretKey {
  Bytes bytes;
  /// Cached BLAKE2b-256 of (domain || bytes); the PRF key for streams.
  std::array<unsigned char, 32> prf_key{};

  static SecretKey from_bytes(Bytes b);
  /// Expands a 64-bit seed to a 32-byte key (BLAKE2b); manifest-friendly.
  static SecretKey from_seed(std::uint64_t seed);
};

enum class SchemeKind { Global, NGram, Position, FixedList };

struct ContextScheme {
  SchemeKind kind = SchemeKind::NGram;
  std::uint32_t param = 2;  // n for NGram, L for FixedList; unused otherwise

  static ContextScheme global() { return {SchemeKind::Global, 0}; }
  static ContextScheme ngram(std::uint32_t n);
  static ContextScheme position() { return {SchemeKind::Position, 0}; }
  static ContextScheme fixed_list(std::uint32_t length);

  std::string name() const;
};

/**
 * Deterministic generator of uniforms and keyed permutations. Value
 * object: independent draws may be created and consumed concurrently;
 * one draw instance is consumed sequentially by a single owner.
 */
class KeyDraw {
 public:
  virtual ~KeyDraw() = default;

  virtual double uniform() = 0;

  /// Uniform integer in [0, n); default derives from uniform word stream.
  virtual std::uint64_t uniform_below(std::uint64_t n) = 0;

  /// Keyed uniform permutation of [0, v) via Fisher-Yates on this stream.
  virtual std::vector<Token> permutation(std::uint32_t v);
};

class PrfKeyDraw final : public KeyDraw {
 public:
  PrfKeyDraw(const std::array<unsigned char, 32>& key, Bytes context);

  double uniform() override { return stream_.next_unit(); }
  std::uint64_t uniform_below(std::uint64_t n) override { return stream_.next_below(n); }

 private:
  PrfStream stream_;
};

/// Test double: scripted uniforms and permutations, then a fixed fallback.
class ScriptedKeyDraw final : public KeyDraw {
 public:
  ScriptedKeyDraw() = default;

  ScriptedKeyDraw& push_uniform(double u);
  ScriptedKeyDraw& push_permutation(std::vector<Token> perm);

  double uniform() override;
  std::uint64_t uniform_below(std::uint64_t n) override;
  std::vector<Token> permutation(std::uint32_t v) override;

 private:
  std::deque<double> uniforms_;
  std::deque<std::vector<Token>> perms_;
};

/// Per-position watermark randomness for the token about to be generated.
PrfKeyDraw derive(const SecretKey& sk, const ContextScheme& scheme,
                  std::span<const Token> prefix, std::uint32_t position,
                  const Vocab& vocab);

enum class EditKind { Substitution, Insertion, Deletion };

/**
 * Number of detector score positions a single edit at position i can
 * change, for a length-T sequence (0-based i, 0 <= i < T).
 */
std::uint32_t effect_region_length(const ContextScheme& scheme, EditKind kind,
                                   std::uint32_t i, std::uint32_t T);

/// max_i effect_region_length for one edit kind.
std::uint32_t max_effect_region(const ContextScheme& scheme, EditKind kind,
                                std::uint32_t T);

/// max over all edit kinds; the R_max a certificate must assume.
std::uint32_t max_effect_region_any(const ContextScheme& scheme, std::uint32_t T);

}  // namespace wmbench::keys
