#pragma once

#include <cstddef>
#include <functional>

namespace fastonn {

// Worker count: FASTONN_THREADS if set and > 0, otherwise the hardware
// concurrency (at least 1).
std::size_t thread_count();

// Runs body(i) for i in [0, n) over up to thread_count() threads. Each index
// is visited exactly once; callers write per-index results and reduce in
// index order so results never depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fastonn
