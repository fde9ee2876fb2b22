#pragma once

#include <cstddef>
#include <functional>

namespace sldp {

/// Worker count: SLDP_WORKERS if set, hardware concurrency otherwise.
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) across workers. Callers write results into
/// index-addressed slots, so the outcome does not depend on the worker count
/// or scheduling. The first exception thrown by any task is rethrown after
/// all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace sldp
