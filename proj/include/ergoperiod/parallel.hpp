#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace ergoperiod {

/// Worker count actually used: 0 means "one per hardware thread".
inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Evaluates fn(task) for task in [0, n_tasks) on up to `workers` threads and
/// returns results in task order. Tasks must not share mutable state; any
/// exception from a task is rethrown on the caller after all threads join.
template <class Fn>
auto map_tasks(std::size_t n_tasks, unsigned workers, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using Result = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<Result> results(n_tasks);
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(resolve_workers(workers), n_tasks));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_tasks) return;
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n_tasks);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& thread : pool) thread.join();
  if (error) std::rethrow_exception(error);
  return results;
}

/// Fixed chunking of a sample range; chunk boundaries never depend on the
/// worker count.
inline constexpr std::size_t kSampleChunk = 2048;

inline std::size_t chunk_count(std::size_t n) { return (n + kSampleChunk - 1) / kSampleChunk; }

}  // namespace ergoperiod
