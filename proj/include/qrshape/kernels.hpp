#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "qrshape/densities.hpp"

namespace qrshape {

enum class Execution { Serial, Parallel };

using Rng = std::mt19937_64;

/// SplitMix64 hash of (seed, stream); independent seeds for parallel streams.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

/// Draws per Monte Carlo chunk. Chunk c always uses Rng(split_seed(seed, c)),
/// so serial and parallel runs produce identical streams.
inline constexpr long kChunkSize = 4096;
long chunk_count(long total);

/// body(i) for i in [0, n); OpenMP-parallel when exec is Parallel.
void parallel_for(long n, Execution exec, const std::function<void(long)>& body);

/// body(chunk, begin, end) over the fixed chunking of [0, total).
void for_each_chunk(long total, Execution exec,
                    const std::function<void(long chunk, long begin, long end)>& body);

/// Per-observation densities. Failures are reported per entry, never thrown
/// from a worker thread.
struct TermValue {
  double log_value = 0.0;
  SeriesResult series;
  bool ok = true;
};
std::vector<TermValue> density_terms(const ShapeDensity& density,
                                     std::span<const ShapeCoordinates> obs,
                                     std::span<const double> log_measures, Execution exec);

/// Serial, fixed-order sum so the result does not depend on thread count.
double ordered_sum(std::span<const TermValue> terms);

}  // namespace qrshape
