#pragma once

// Minimal bounded worker pool for independent index ranges.

#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace dsm {

template <typename F>
void parallel_for(long n, int threads, const F& body) {
  if (n <= 0) return;
  const int workers = std::max(1, std::min<long>(threads, n) > 0
                                      ? static_cast<int>(std::min<long>(threads, n))
                                      : 1);
  if (workers == 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace dsm
