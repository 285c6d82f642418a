#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace apsynth {

/// Worker count: `requested` if positive, else $APSYNTH_THREADS, else the
/// hardware concurrency (at least 1).
int resolve_threads(int requested = 0);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

/// Seed for an independent stream, mixed from a base seed and a stream index
/// (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace apsynth
