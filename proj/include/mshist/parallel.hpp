#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace mshist {

/// Worker count for a request; 0 means one per hardware thread.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(y) for every row in [0, rows), splitting rows into contiguous bands, one per worker.
/// Each row is handled by exactly one worker, so per-row outputs need no synchronization.
template <typename RowFn>
void parallel_rows(int rows, int threads, RowFn&& fn) {
  const int workers = std::clamp(resolve_threads(threads), 1, std::max(rows, 1));
  if (workers == 1) {
    for (int y = 0; y < rows; ++y) fn(y);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      const int begin = static_cast<int>(static_cast<long long>(rows) * w / workers);
      const int end = static_cast<int>(static_cast<long long>(rows) * (w + 1) / workers);
      pool.emplace_back([&, w, begin, end] {
        try {
          for (int y = begin; y < end; ++y) fn(y);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace mshist
