#pragma once

#include <cstddef>
#include <functional>

namespace qmix {

// Worker cap: QMIX_THREADS if set, else hardware concurrency.
unsigned worker_count();

// Runs body(begin, end) over contiguous chunks of [0, n). Chunks are static,
// so each index is always computed by the same code path.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace qmix
