#pragma once

#include <functional>

namespace dyntta {

// Resolves a worker count: explicit request > DYNTTA_THREADS env var >
// hardware concurrency (capped at 8).
int resolve_threads(int requested);

// Runs fn(0..n-1) across workers. Workers take strided indices; callers must
// write results into per-index slots and merge in index order to keep
// results independent of the worker count.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace dyntta
