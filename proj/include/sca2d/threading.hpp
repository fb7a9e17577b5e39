#pragma once

#include <cstddef>
#include <functional>

namespace sca2d {

/// Worker count resolved from the SCA2D_THREADS environment variable,
/// falling back to the hardware concurrency. Always at least 1.
int thread_count();

/// Runs fn(begin, end) over a static partition of [0, n) into contiguous
/// chunks, one per worker. Results must be written to disjoint locations;
/// the partition depends only on n and the worker count, never on timing,
/// so outputs are identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace sca2d
