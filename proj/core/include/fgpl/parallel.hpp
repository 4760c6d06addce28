#pragma once

#include <cstddef>
#include <functional>

namespace fgpl {

/// Worker count for parallel loops: FGPL_THREADS when set (>=1), otherwise
/// std::thread::hardware_concurrency().
int worker_count();

namespace detail {
void parallel_for_impl(std::size_t n, const std::function<void(std::size_t, std::size_t)>& chunk_fn);
}

/// Runs fn(i) for i in [0, n) on up to worker_count() threads with static
/// chunking. Nested calls run inline on the calling thread, so results must be
/// written to index-addressed slots for schedule-independent output.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  detail::parallel_for_impl(n, [&fn](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
  });
}

}  // namespace fgpl
