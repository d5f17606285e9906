#pragma once

#include <cstddef>
#include <functional>

namespace slelab {

/// Worker count resolution: explicit request (> 0) wins, then the
/// SLE_LAB_JOBS environment variable, then hardware concurrency.
int resolve_jobs(int requested = 0);

/**
 * Runs fn(i) for i in [0, n) using `jobs` threads.
 *
 * Work is handed out by an atomic counter. Callers write results into
 * preallocated slots indexed by i and reduce afterwards in index order, so
 * every statistic is independent of scheduling and of the jobs count.
 * The first exception thrown inside a worker is rethrown on the caller.
 */
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace slelab
