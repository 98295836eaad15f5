#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mklh {

/// Worker count used when the caller passes 0.
inline unsigned default_thread_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs body(begin, end) over contiguous chunks of [0, n) on up to `threads`
/// workers. Chunks are disjoint, so any body that writes only to its own
/// indices produces the same result for every thread count. The first
/// exception thrown by a worker is rethrown on the calling thread.
template <class Body>
void parallel_for_ranges(std::size_t n, unsigned threads, Body&& body) {
  if (n == 0) return;
  if (threads == 0) threads = default_thread_count();
  const std::size_t workers = std::min<std::size_t>(threads, n);
  if (workers <= 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Per-index variant of parallel_for_ranges.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  parallel_for_ranges(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) body(i);
  });
}

}  // namespace mklh
