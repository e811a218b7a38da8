#pragma once

/**
 * Keyed PRF stream in counter mode (BLAKE2b via libsodium).
 *
 * This is the single source of keyed randomness in the toolkit. The bit
 * layout is part of the external interface so that independent
 * implementations can reproduce every stream bit-for-bit:
 *
 *   prf_key    = BLAKE2b-256(domain_tag || payload)           (32 bytes)
 *   block_j    = BLAKE2b-512(key = prf_key,
 *                            msg = context_bytes || LE64(j))  (64 bytes)
 *   words      = block_j parsed as 8 little-endian uint64
 *   uniform    = (word >> 11) * 2^-53                         in [0, 1)
 *   below(n)   = rejection sampling on whole words, then word % n
 *   permutation over V: Fisher-Yates, a = [0..V-1];
 *                for i = V-1 down to 1: j = below(i+1); swap(a[i], a[j])
 *
 * Distinct context byte strings give computationally independent streams.
 */

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace wmbench {

using Bytes = std::vector<unsigned char>;

/// BLAKE2b-256 of (domain_tag || payload); the standard key-derivation step.
std::array<unsigned char, 32> prf_derive_key(const std::string& domain_tag,
                                             const Bytes& payload);

/// BLAKE2b-256 hex digest of arbitrary bytes (manifest/report hashing).
std::string blake2b_hex(const std::string& data);

void put_u32_le(Bytes& out, std::uint32_t v);
void put_u64_le(Bytes& out, std::uint64_t v);

/**
 * Counter-mode stream of uniform words for one (key, context) pair.
 * Cheap to construct; consumption is sequential by a single owner.
 */
class PrfStream {
 public:
  PrfStream(const std::array<unsigned char, 32>& key, Bytes context);

  std::uint64_t next_u64();

  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  std::uint64_t next_below(std::uint64_t n);

 private:
  void refill();

  std::array<unsigned char, 32> key_;
  Bytes context_;  // message prefix; counter appended per block
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 8> words_{};
  std::size_t used_ = 8;  // forces refill on first draw
};

}  // namespace wmbench
