#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace artsplat {

// Static block partition of [0, n) over `threads` workers. Results must be
// combined in a thread-count-independent order by the caller; every worker
// sees a contiguous, deterministic index range.
template <class F>
void parallel_for(int n, int threads, F&& body) {
  if (n <= 0) return;
  threads = std::clamp(threads, 1, n);
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace artsplat
