#pragma once

#include <cstddef>
#include <functional>

namespace pvd {

/// Worker count used by parallel_for. Resolved once from PVD_THREADS
/// (clamped to hardware concurrency), defaulting to the hardware count.
int thread_count();

/// Splits [0, n) into per-worker chunks and runs fn(begin, end) on each.
///
/// Chunk boundaries depend only on n and the worker count, and every output
/// element is owned by exactly one chunk, so results do not depend on
/// scheduling order. Small ranges run inline on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace pvd
