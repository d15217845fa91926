#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rmtmean {

/// Runs body(0..jobs-1) on up to `threads` workers pulling from a shared
/// counter. threads <= 0 picks the hardware concurrency. The first exception
/// thrown by any job is rethrown on the calling thread after all workers join.
/// Callers that need deterministic output must write job i's results into
/// slot i of a preallocated container; completion order is unspecified.
inline void parallel_for(int jobs, int threads, const std::function<void(int)>& body) {
  if (jobs <= 0) return;
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  if (threads > jobs) threads = jobs;
  if (threads == 1) {
    for (int i = 0; i < jobs; ++i) body(i);
    return;
  }

  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= jobs) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace rmtmean
