#pragma once

#include <cstdint>
#include <functional>

namespace asdnb {

// Worker count for parallel_for. Determinism contract: results are bitwise
// reproducible for a fixed thread count (static chunking, ordered reductions).
void set_num_threads(int n);
int num_threads();

// Splits [0, n) into num_threads() contiguous chunks and runs
// fn(begin, end, chunk_index) on each. Chunk c is always [c*q+..., ...] for a
// fixed thread count, so writers to disjoint ranges and per-chunk accumulators
// reduced in chunk order stay deterministic.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t, int)>& fn);

}  // namespace asdnb
