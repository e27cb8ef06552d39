#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace syzflow {

// Worker count, capped by SYZFLOW_THREADS when set.
int thread_count();

// Runs f(i) for i in [0, n).  Each index is visited exactly once; f must only
// write to per-index state.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace syzflow
