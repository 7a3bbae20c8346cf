#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace densyn {

/// Worker count from DENSYN_WORKERS, else hardware concurrency (at least 1).
unsigned worker_count();

/// Runs body(i) for i in [0, count). Iterations must write disjoint outputs.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// Independent per-item seed derived from (seed, index); splitmix64 mixing.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index);

/// Uniform double in [0, 1) from a 64-bit draw.
inline double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace densyn
