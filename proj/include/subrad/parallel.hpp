#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace subrad {

/// Runs f(i) for i in [0, n) on up to `workers` threads. Each index runs
/// exactly once; the first exception thrown is rethrown on the caller.
template <class F>
void parallel_for(std::size_t n, int workers, F&& f) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(threads, n); ++w) pool.emplace_back(body);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

/// Pairwise sum of items[begin, end) in index order; the result does not
/// depend on how the items were produced.
template <class T>
T pairwise_sum(const std::vector<T>& items, std::size_t begin, std::size_t end) {
  if (end - begin == 1) return items[begin];
  const std::size_t mid = begin + (end - begin) / 2;
  return pairwise_sum(items, begin, mid) + pairwise_sum(items, mid, end);
}

}  // namespace subrad
