#pragma once

#include <cstddef>
#include <functional>

namespace slowvar {

// Number of hardware threads, at least 1.
int default_workers();

// Runs body(i) for i in [0, n) on `workers` threads using contiguous chunks.
// Each index is handled exactly once, so results written per index do not
// depend on the worker count. The first exception thrown is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

}  // namespace slowvar
