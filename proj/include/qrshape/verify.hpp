#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrshape/kernels.hpp"

namespace qrshape {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      ///< Measured discrepancy (error, |z|, ...).
  double tolerance = 0.0;  ///< Pass when value <= tolerance.
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;

  bool passed() const;
  /// Largest value among checks whose name starts with prefix.
  double worst(const std::string& prefix) const;
};

struct VerifyOptions {
  std::uint64_t seed = 20240611;
  long mc_draws = 1'000'000;  ///< Stiefel Monte Carlo draws per moment.
  int grid = 400;             ///< Cells per angle in the normalisation suite.
  int points = 1000;          ///< Random shapes in the invariance suite.
  Execution exec = Execution::Parallel;
};

/// Sum and homogeneity identities of zonal polynomials, fast series against
/// the reference evaluation.
SuiteReport verify_zonal(const VerifyOptions& opts = {});
/// Monte Carlo over V_{2,3} against the zonal closed form; odd moments vanish.
SuiteReport verify_stiefel(const VerifyOptions& opts = {});
/// N = 3, K = 2 densities integrated over the angle domain.
SuiteReport verify_normalization(const VerifyOptions& opts = {});
/// Central densities agree across generators; extraction invariances.
SuiteReport verify_invariance(const VerifyOptions& opts = {});

std::vector<std::string> suite_names();
/// Throws DomainError for an unknown name.
SuiteReport run_suite(const std::string& name, const VerifyOptions& opts = {});

}  // namespace qrshape
