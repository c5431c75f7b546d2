#pragma once

#include <cstddef>
#include <functional>

namespace lrot {

/// Worker count used by ParallelFor. Defaults to 1.
void SetThreadCount(int threads);
int ThreadCount();

/// Calls fn(i) for i in [0, count), spread over ThreadCount() workers. Each
/// index runs exactly once; callers write results into per-index slots so the
/// outcome does not depend on scheduling. The first exception is rethrown.
void ParallelFor(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace lrot
