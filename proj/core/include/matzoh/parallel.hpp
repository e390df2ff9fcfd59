#pragma once

#include <cstddef>
#include <functional>

namespace matzoh {

/// Number of worker threads used by parallel_for.  Defaults to the
/// hardware concurrency; the MATZOH_THREADS environment variable caps it
/// (a value of 1 forces fully serial execution).
std::size_t thread_count();

/// Runs fn(begin, end) over a partition of [0, n) into contiguous
/// chunks, one chunk per worker.  Chunk boundaries depend only on n and
/// the worker count, and workers write to disjoint ranges, so results
/// are bitwise independent of the execution schedule.  Falls back to a
/// single serial call when n is small or one thread is configured.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t min_grain = 4096);

}  // namespace matzoh
