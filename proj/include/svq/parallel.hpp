#pragma once

#include <cstddef>
#include <functional>

namespace svq {

// Worker count resolution: SVQ_THREADS environment variable caps parallelism,
// 0 or unset means hardware concurrency.
unsigned worker_count();

// Runs fn(i) for i in [0, n). Work items must write to disjoint locations;
// results are then bit-identical for any thread count or schedule.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

} // namespace svq
