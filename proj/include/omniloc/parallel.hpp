#pragma once

#include <functional>

namespace omniloc {

/// Worker count from OMNILOC_THREADS, else 1.
int default_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers, each taking a
/// contiguous block. Callers write only to slots owned by index i.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace omniloc
