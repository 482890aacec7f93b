#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace vsal {

/// Worker cap from VSAL_THREADS (default: hardware concurrency, at least 1).
inline int worker_count() {
  if (const char* env = std::getenv("VSAL_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(chunk) for chunk in [0, chunks). Chunk boundaries are fixed by
/// the caller, so any per-chunk partial results combined in chunk order are
/// independent of the worker count.
template <typename Fn>
void parallel_chunks(int chunks, Fn&& fn) {
  const int workers = std::min(worker_count(), chunks);
  if (workers <= 1) {
    for (int c = 0; c < chunks; ++c) fn(c);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int c = w; c < chunks; c += workers) fn(c);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace vsal
