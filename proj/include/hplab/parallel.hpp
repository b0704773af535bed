#pragma once

// Replicate-level worker pool. Each index runs exactly once; results go into
// caller-owned slots addressed by index, so the output is the same for any
// thread count.

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hplab {

/// Thread count: HP_LAB_THREADS if set and positive, else `configured`, with
/// 0 meaning one per hardware thread.
inline unsigned resolve_threads(unsigned configured) {
  if (const char* env = std::getenv("HP_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  if (configured > 0) return configured;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Calls fn(i) for i in [0, count). If any call throws, the remaining work is
/// abandoned and the exception of the lowest failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::size_t first_bad = count;
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load(std::memory_order_relaxed)) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < first_bad) {
          first_bad = i;
          error = std::current_exception();
        }
        failed = true;
      }
    }
  };

  const unsigned n = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace hplab
