#pragma once

/**
 * Deterministic Monte Carlo randomness (non-keyed).
 *
 * Watermark randomness always comes from the keyed PRF stream (prf.hpp).
 * Everything else that needs plain simulation noise (sampling policies,
 * attacks, null-table calibration) uses this wrapper around mt19937_64.
 * The engine output is fully specified by the standard; the uniform and
 * bounded-integer mappings below are pinned here so results do not depend
 * on implementation-defined <random> distributions:
 *
 *   unit()      = (next_u64() >> 11) * 2^-53          in [0, 1)
 *   below(n)    = rejection sampling on next_u64()    uniform in [0, n)
 */

#include <cstdint>
#include <random>

namespace wmbench {

/// splitmix64: used to derive independent child seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic child seed for work item `index` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (0xd1342543de82ef95ULL * (index + 1));
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), n >= 1. Unbiased via rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace wmbench
