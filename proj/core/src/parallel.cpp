#include "fgpl/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace fgpl {

int worker_count() {
  if (const char* env = std::getenv("FGPL_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {

namespace {
thread_local bool g_in_pool = false;
}

void parallel_for_impl(std::size_t n,
                       const std::function<void(std::size_t, std::size_t)>& chunk_fn) {
  if (n == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
  if (workers <= 1 || g_in_pool) {
    chunk_fn(0, n);
    return;
  }

  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, w, begin, end] {
      g_in_pool = true;
      try {
        chunk_fn(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
      g_in_pool = false;
    });
  }
  for (auto& t : threads) t.join();
  // Rethrow the lowest-index error so failures match the serial schedule.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail
}  // namespace fgpl
