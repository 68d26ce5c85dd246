#pragma once

#include <cstddef>
#include <functional>

namespace osc {

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is computed
/// independently, so results stored by index do not depend on the thread count.
/// The first exception thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

/// Thread count used when a caller passes 0.
int default_threads() noexcept;

}  // namespace osc
