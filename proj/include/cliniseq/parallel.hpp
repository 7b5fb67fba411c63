#pragma once

#include <cstddef>
#include <functional>

namespace cliniseq {

// Worker cap from CLINISEQ_THREADS (positive integer), else hardware concurrency.
std::size_t worker_count();

// Runs body(i) for i in [0, n) across up to worker_count() threads in
// contiguous chunks. Callers write results into per-index slots so that any
// reduction happens afterwards in a fixed order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cliniseq
