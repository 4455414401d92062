#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "qrshape/geometry.hpp"
#include "qrshape/inference.hpp"
#include "qrshape/simulate.hpp"

using namespace qrshape;

namespace {

Matrix pentagon_mean() {
  Matrix x(5, 2);
  for (int i = 0; i < 5; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / 5;
    x.row(i) << std::cos(phi), std::sin(phi);
  }
  return helmert_submatrix(5) * x;
}

const Sample& bench_sample() {
  static const Sample s = [] {
    const Dims d(5, 2);
    const auto spec = ModelSpec::gaussian(d, pentagon_mean(), 0.1);
    return Sample(sample_shapes(spec, 400, 11), d);
  }();
  return s;
}

void BM_LogLikelihood(benchmark::State& state, ModelKind kind, Execution exec) {
  const Sample& s = bench_sample();
  const Dims d(5, 2);
  const ModelSpec spec = kind == ModelKind::Gaussian ? ModelSpec::gaussian(d, pentagon_mean(), 0.1)
                                                     : ModelSpec::kotz(d, pentagon_mean(), 0.1, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(spec, s, {}, exec).value);
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.size()));
}

void BM_StiefelMoment(benchmark::State& state, Execution exec) {
  Matrix A(3, 2);
  A << 0.7, -0.2, 0.1, 0.9, -0.4, 0.3;
  const long draws = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(mc_stiefel_moment(A, 4, 3, draws, 5, exec).estimate);
  state.SetItemsProcessed(state.iterations() * draws);
}

}  // namespace

BENCHMARK_CAPTURE(BM_LogLikelihood, gaussian_serial, ModelKind::Gaussian, Execution::Serial);
BENCHMARK_CAPTURE(BM_LogLikelihood, gaussian_parallel, ModelKind::Gaussian, Execution::Parallel);
BENCHMARK_CAPTURE(BM_LogLikelihood, kotz2_serial, ModelKind::Kotz2, Execution::Serial);
BENCHMARK_CAPTURE(BM_LogLikelihood, kotz2_parallel, ModelKind::Kotz2, Execution::Parallel);
BENCHMARK_CAPTURE(BM_StiefelMoment, serial, Execution::Serial)->Arg(100000);
BENCHMARK_CAPTURE(BM_StiefelMoment, parallel, Execution::Parallel)->Arg(100000);

BENCHMARK_MAIN();
