#pragma once

#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace carleman {

// Worker budget: CARLEMAN_LAB_THREADS caps the pool, unset or empty falls back
// to the hardware count. The value is read once per process.
inline int thread_budget() {
  static const int cached = [] {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const char* env = std::getenv("CARLEMAN_LAB_THREADS");
    if (!env || !*env) return static_cast<int>(hw);
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
      throw std::runtime_error(std::string("CARLEMAN_LAB_THREADS: invalid value '") +
                               env + "'");
    return static_cast<int>(std::min<long>(v, hw));
  }();
  return cached;
}

// Runs fn(i) for i in [0, n) on contiguous index blocks, one per worker.
// Deterministic by construction as long as iterations write disjoint slots;
// reductions must combine per-index results serially afterwards.
template <typename Fn>
void parallel_for(std::size_t n, const Fn& fn) {
  const int workers = static_cast<int>(std::min<std::size_t>(thread_budget(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace carleman
