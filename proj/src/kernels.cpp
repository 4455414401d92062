#include "qrshape/kernels.hpp"

#include <exception>

#include "qrshape/error.hpp"

namespace qrshape {

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

long chunk_count(long total) { return total <= 0 ? 0 : (total + kChunkSize - 1) / kChunkSize; }

void parallel_for(long n, Execution exec, const std::function<void(long)>& body) {
  if (exec == Execution::Serial) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(qrshape_parallel_for_error)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

void for_each_chunk(long total, Execution exec,
                    const std::function<void(long, long, long)>& body) {
  parallel_for(chunk_count(total), exec, [&](long c) {
    const long begin = c * kChunkSize;
    body(c, begin, std::min(total, begin + kChunkSize));
  });
}

std::vector<TermValue> density_terms(const ShapeDensity& density,
                                     std::span<const ShapeCoordinates> obs,
                                     std::span<const double> log_measures, Execution exec) {
  std::vector<TermValue> out(obs.size());
  parallel_for(static_cast<long>(obs.size()), exec, [&](long i) {
    try {
      const DensityValue v = density.evaluate(obs[i], log_measures[i]);
      out[i] = {v.log_value, v.series, true};
    } catch (const NumericError&) {
      out[i].ok = false;
    }
  });
  return out;
}

double ordered_sum(std::span<const TermValue> terms) {
  double s = 0.0;
  for (const auto& t : terms) s += t.log_value;
  return s;
}

}  // namespace qrshape
