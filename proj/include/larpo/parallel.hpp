#pragma once

#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace larpo {

// Worker count for data-parallel loops: LARPO_THREADS when set, otherwise
// hardware concurrency. Always >= 1. Read once per process.
inline std::size_t worker_count() {
  static const std::size_t count = [] {
    if (const char* env = std::getenv("LARPO_THREADS")) {
      const long v = std::atol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<std::size_t>(hw > 0 ? hw : 1);
  }();
  return count;
}

// Runs fn(i) for i in [0, n). Work is split into contiguous ranges across
// workers; fn must only write to per-index slots so results do not depend on
// the thread count. Reductions belong to the caller, in index order.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = worker_count();
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t used = workers < n ? workers : n;
  const std::size_t chunk = (n + used - 1) / used;
  std::vector<std::thread> threads;
  threads.reserve(used);
  for (std::size_t w = 0; w < used; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = (lo + chunk < n) ? lo + chunk : n;
    if (lo >= hi) break;
    threads.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace larpo
