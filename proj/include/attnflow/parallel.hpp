#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace attnflow {

inline int default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

/// Runs fn(begin, end) over fixed contiguous chunks of [0, n). The chunk
/// assignment depends only on n and the thread count, so reductions inside a
/// chunk stay bitwise reproducible for a fixed thread count.
template <class Fn>
void parallel_chunks(long n, int threads, Fn&& fn) {
  threads = static_cast<int>(std::max<long>(1, std::min<long>(threads, n)));
  if (threads == 1) {
    if (n > 0) fn(0L, n);
    return;
  }
  const long chunk = (n + threads - 1) / threads;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    const long lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace attnflow
