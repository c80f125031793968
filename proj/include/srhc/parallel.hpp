#pragma once

#include <cstddef>
#include <functional>

namespace srhc {

// Number of worker threads; SRHC_THREADS overrides hardware_concurrency.
std::size_t worker_count();

// Runs body(i) for i in [0, n). Work is split into contiguous chunks; callers
// write results by index so output never depends on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace srhc
