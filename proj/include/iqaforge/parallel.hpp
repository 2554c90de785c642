#pragma once

#include <cstddef>
#include <functional>

namespace iqaforge {

// Worker count from IQA_FORGE_WORKERS, falling back to hardware concurrency.
std::size_t default_workers();

// Runs body(i) for every i in [0, count) on up to `workers` threads. Indices
// are handed out dynamically, so body must only write to slot i of any shared
// output. The first exception thrown (lowest index wins) is rethrown after all
// workers have joined.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace iqaforge
