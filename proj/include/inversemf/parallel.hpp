#pragma once

#include <cstddef>
#include <functional>

namespace imf {

// Worker count used by parallel loops. Resolution order: set_threads(),
// then the INVERSEMF_THREADS environment variable, then 1.
int thread_count();
void set_threads(int n);

// Runs fn(i) for i in [0, n). Each index is processed exactly once and
// callers write into slot i, so results never depend on scheduling.
// If tasks throw, the exception of the lowest index is rethrown after all
// workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace imf
