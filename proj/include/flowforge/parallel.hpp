#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace flowforge {

namespace detail {
inline thread_local bool in_parallel_region = false;
}

// Worker count: FLOWFORGE_THREADS caps it, 0 or unset means hardware concurrency.
inline std::size_t worker_count() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FLOWFORGE_THREADS")) {
    try {
      long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return hw;
}

// Runs body(begin, end) over contiguous chunks of [0, n). Nested calls run
// inline. If several chunks throw, the exception of the lowest chunk wins so
// failures are reported at the lowest failing index.
template <typename Body>
void parallel_chunks(std::size_t n, Body&& body) {
  if (n == 0) return;
  std::size_t workers = detail::in_parallel_region ? 1 : std::min(worker_count(), n);
  if (workers <= 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, w, begin, end] {
      detail::in_parallel_region = true;
      try {
        body(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace flowforge
