#pragma once

#include <cstddef>
#include <functional>

namespace avaseg {

/// Worker cap: AVASEG_THREADS if set and positive, otherwise the hardware
/// concurrency (at least 1).
std::size_t worker_count();

/// Runs body(begin, end) over contiguous chunks of [0, n) on up to
/// worker_count() threads. Chunks are disjoint; body must only write to
/// state owned by its index range.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace avaseg
