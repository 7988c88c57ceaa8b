#pragma once

#include <cstddef>
#include <functional>

namespace cogscreen::util {

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0: hardware
/// concurrency). The first exception thrown by any call is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace cogscreen::util
