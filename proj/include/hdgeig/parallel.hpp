#pragma once

#include <functional>

namespace hdgeig {

/// Worker cap for element loops. Defaults to $HDG_EIG_THREADS or 1.
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n) on up to thread_count() workers. Each index
/// is visited exactly once; callers write results into per-index slots so the
/// outcome does not depend on scheduling.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace hdgeig
