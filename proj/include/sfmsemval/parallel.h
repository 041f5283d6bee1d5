#pragma once

#include <cstddef>
#include <functional>

namespace sfmsemval {

// Worker count: SFMSEMVAL_THREADS when set to a positive integer, otherwise
// the hardware concurrency (at least 1).
int NumThreads();

// Calls fn(i) for every i in [0, n), split into contiguous chunks across
// NumThreads() workers. fn must only write to per-index state. The first
// exception thrown by any worker is rethrown.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace sfmsemval
