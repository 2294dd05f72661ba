#pragma once

#include <cstddef>
#include <functional>

namespace imbalkit {

/// Number of worker threads used by parallel_for. Defaults to the hardware
/// concurrency; IMBALKIT_THREADS overrides it.
std::size_t default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// processed exactly once; callers write results into per-index slots so the
/// outcome does not depend on scheduling. The first exception thrown by any
/// body is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t threads = 0);

}  // namespace imbalkit
