#include <atomic>
#include <set>
#include <stdexcept>

#include "qrshape/error.hpp"
#include "qrshape/kernels.hpp"
#include "qrshape/simulate.hpp"
#include "support.hpp"

using namespace qrshape;
using namespace qrshape::test;

TEST_CASE("split seeds") {
  CHECK(split_seed(1, 0) == split_seed(1, 0));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t c = 0; c < 256; ++c) seen.insert(split_seed(s, c));
  CHECK(seen.size() == 4 * 256);
}

TEST_CASE("chunking") {
  CHECK(chunk_count(0) == 0);
  CHECK(chunk_count(1) == 1);
  CHECK(chunk_count(kChunkSize) == 1);
  CHECK(chunk_count(kChunkSize + 1) == 2);
  for (auto exec : {Execution::Serial, Execution::Parallel}) {
    const long total = 2 * kChunkSize + 5;
    std::vector<int> hits(total, 0);
    std::vector<long> ends(chunk_count(total), 0);
    for_each_chunk(total, exec, [&](long c, long b, long e) {
      CHECK(b == c * kChunkSize);
      ends[c] = e;
      for (long i = b; i < e; ++i) ++hits[i];
    });
    CHECK(ends.back() == total);
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
}

TEST_CASE("parallel_for visits every index and rethrows") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(1000, Execution::Parallel, [&](long i) { ++hits[i]; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](const auto& h) { return h.load() == 1; }));
  CHECK_THROWS_AS(parallel_for(50, Execution::Parallel,
                               [](long i) {
                                 if (i == 17) throw DomainError("boom");
                               }),
                  DomainError);
  CHECK_THROWS_AS(parallel_for(50, Execution::Serial,
                               [](long i) {
                                 if (i == 3) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("density terms and ordered sums") {
  const Dims d(4, 2);
  const auto spec = ModelSpec::gaussian(d, Matrix::Ones(3, 2), 0.02);
  const auto ws = sample_shapes(spec, 300, 5);
  std::vector<double> lm;
  for (const auto& w : ws) lm.push_back(ShapeDensity::log_measure(w, d));

  const ShapeDensity f(spec);
  const auto serial = density_terms(f, ws, lm, Execution::Serial);
  const auto parallel = density_terms(f, ws, lm, Execution::Parallel);
  REQUIRE(serial.size() == ws.size());
  double direct = 0.0;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    CHECK(serial[i].ok);
    CHECK(serial[i].log_value == parallel[i].log_value);
    direct += serial[i].log_value;
  }
  CHECK(ordered_sum(serial) == direct);
  CHECK(ordered_sum(parallel) == direct);
  CHECK(serial[7].log_value == doctest::Approx(f(ws[7]).log_value));

  // Truncation is reported, not thrown.
  auto hard = ModelSpec::gaussian(d, 50.0 * Matrix::Ones(3, 2), 0.01);
  const ShapeDensity g(hard, {1, 1e-12});
  std::vector<ShapeCoordinates> odd(ws.begin(), ws.begin() + 5);
  const auto terms = density_terms(g, odd, std::span<const double>(lm.data(), 5), Execution::Parallel);
  for (const auto& t : terms) {
    CHECK(t.ok);
    CHECK_FALSE(t.series.converged);
  }
}
