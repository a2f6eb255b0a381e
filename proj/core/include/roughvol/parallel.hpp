#pragma once

#include <cstddef>
#include <functional>

namespace roughvol {

/// Worker count: hardware concurrency capped by ROUGHVOL_THREADS when set.
unsigned worker_count();

/// Splits [0, n) into contiguous blocks and runs fn(begin, end, worker) on
/// up to worker_count() threads. Block boundaries depend only on n and the
/// block size, never on the thread count, so per-block results can be
/// reduced in a fixed order.
void parallel_blocks(std::size_t n, std::size_t block,
                     const std::function<void(std::size_t, std::size_t, unsigned)>& fn);

}  // namespace roughvol
