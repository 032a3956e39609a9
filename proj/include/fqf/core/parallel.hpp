#pragma once

#include <cstddef>
#include <functional>

namespace fqf {

// Worker count: FQF_THREADS if set, else hardware concurrency.
int worker_count();

// Runs fn(begin, end) over a static partition of [0, n).  Half-open ranges
// are disjoint, so bodies that write only inside their range are
// deterministic for any worker count.  Bodies must not reduce across ranges
// through shared state; reductions happen per-index or over fixed-order
// per-range partials collected by the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace fqf
