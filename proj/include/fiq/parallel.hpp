#pragma once

#include <cstddef>
#include <functional>

namespace fiq {

// Worker count: FIQ_THREADS if set to a positive integer, else the hardware concurrency.
unsigned thread_count();

// Calls body(i) for i in [0, n) on up to thread_count() threads; the first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fiq
