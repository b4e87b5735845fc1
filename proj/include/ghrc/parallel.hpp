#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace ghrc {

/// Worker cap used by the data-parallel loops (0 = hardware concurrency).
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs fn(i) for i in [0, n) split into contiguous blocks over the worker
/// threads. Iterations must write disjoint outputs; results are then
/// independent of the thread count.
template <class Fn>
void parallel_for(int n, Fn&& fn) {
  const unsigned workers = std::min<unsigned>(thread_count(), static_cast<unsigned>(std::max(n, 1)));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(static_cast<long long>(n) * w / workers);
    const int end = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([&fn, begin, end] {
      for (int i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace ghrc
