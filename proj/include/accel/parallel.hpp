#pragma once

#include <cstddef>
#include <functional>

namespace accel {

/// Runs fn(chunk_index, begin, count) for every fixed-size chunk of [0, total).
/// Chunk boundaries depend only on (total, chunk_size), so chunk-indexed work
/// is reproducible for any worker count; callers must write results to
/// disjoint chunk-indexed slots and reduce in chunk order.
void for_each_chunk(std::size_t total, std::size_t chunk_size, int workers,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace accel
