#pragma once

/**
 * Data-parallel loop helpers.
 *
 * Every hot kernel in this toolkit is an independent map over work items
 * (sequences, trials, candidate edits). Kernels write into preallocated
 * per-item slots and reductions happen serially in index order afterwards,
 * so the serial and OpenMP paths produce byte-identical results for any
 * thread count. Tests in test_parallel.cpp assert that equivalence and
 * bench/parallel_bench.cpp compares the two paths.
 */

#include <cstddef>
#include <exception>
#include <mutex>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wmbench::par {

enum class Mode {
  Serial,    // plain loop, reference path
  OpenMp,    // OpenMP parallel for (falls back to serial if not compiled in)
  Auto,      // OpenMp when available
};

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

/// Runs body(i) for i in [0, n). Body must only touch its own slot state.
/// The first exception thrown inside the region is rethrown afterwards
/// (exceptions must not cross an OpenMP boundary).
template <class Body>
void parallel_for(std::size_t n, Body&& body, Mode mode = Mode::Auto) {
  if (mode == Mode::Serial || !openmp_enabled() || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      const std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
#else
  for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

/// Map i -> f(i) into a vector; deterministic regardless of mode/threads.
template <class T, class Fn>
std::vector<T> map_indexed(std::size_t n, Fn&& f, Mode mode = Mode::Auto) {
  std::vector<T> out(n);
  parallel_for(
      n, [&](std::size_t i) { out[i] = f(i); }, mode);
  return out;
}

}  // namespace wmbench::par
