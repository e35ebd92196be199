#pragma once

#include <cstddef>
#include <functional>

namespace discountlab {

/// Worker count: hardware concurrency, capped by DISCOUNTLAB_THREADS when set.
int worker_count();

/// Runs body(k) for k in [0, count) on up to worker_count() threads. Each
/// index is visited exactly once; the first exception thrown is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace discountlab
