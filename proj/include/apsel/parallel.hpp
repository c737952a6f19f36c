#pragma once

#include <cstddef>
#include <functional>

namespace apsel {

/// Worker cap: APSEL_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_limit();

/// Calls fn(i) for every i in [0, count). Indices are split into contiguous
/// blocks, one per worker. fn must only write to state owned by index i, so
/// results never depend on the worker count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace apsel
