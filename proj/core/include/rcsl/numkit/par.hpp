#pragma once

#include <cstddef>
#include <functional>

namespace rcsl::numkit {

// Worker-thread cap: RCSL_ALIGN_THREADS if set (minimum 1), otherwise the
// hardware concurrency. Read once and cached.
std::size_t worker_thread_cap();

// Runs fn(0..n-1) across at most worker_thread_cap() threads in contiguous
// chunks. Results must go into per-index slots; any cross-index reduction is
// the caller's to do afterwards, in index order, so that output bits never
// depend on the thread count. Falls back to a plain loop when one thread
// suffices. The first exception thrown by fn is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace rcsl::numkit
