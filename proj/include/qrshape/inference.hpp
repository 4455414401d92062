#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qrshape/densities.hpp"
#include "qrshape/kernels.hpp"

namespace qrshape {

/// i.i.d. shape observations sharing N, K and reflection mode.
struct Sample {
  std::vector<ShapeCoordinates> observations;
  Dims dims;
  ReflectionMode mode = ReflectionMode::IncludesReflection;

  Sample() = default;
  Sample(std::vector<ShapeCoordinates> obs, const Dims& dims);

  std::size_t size() const { return observations.size(); }
  void validate() const;
};

enum class ModelKind { Gaussian, Kotz2, Kotz3 };

std::string to_string(ModelKind kind);
/// "gaussian", "kotz2", "kotz3".
ModelKind parse_model_kind(const std::string& name);
GeneratorSpec generator_for(ModelKind kind, int M);

struct LogLikelihood {
  double value = 0.0;
  int nonconverged = 0;  ///< Observations whose series hit max_degree.
  int failed = 0;        ///< Observations with no usable series value.
  int max_degree_used = 0;

  bool ok() const { return nonconverged == 0 && failed == 0; }
};

/// sum_i log f(w_i). Failed observations contribute -inf.
LogLikelihood log_likelihood(const ModelSpec& spec, const Sample& sample,
                             const SeriesControl& ctrl = {},
                             Execution exec = Execution::Parallel);

struct FitOptions {
  std::uint64_t seed = 1;
  int restarts = 5;
  int max_evaluations = 6000;  ///< Per simplex run.
  double tolerance = 1e-6;     ///< Simplex size at convergence.
  SeriesControl ctrl;
  Execution exec = Execution::Parallel;
  std::optional<Matrix> start_mu;
  std::optional<double> start_sigma2;
};

inline constexpr double kSigma2LowerBound = 1e-8;

struct FitResult {
  ModelKind model = ModelKind::Gaussian;
  Matrix mu;
  double sigma2 = 0.0;
  double loglik = 0.0;
  int n_p = 0;
  int n = 0;
  double bic_star = 0.0;
  bool converged = false;
  int evaluations = 0;
  bool at_lower_bound = false;
  LogLikelihood diagnostics;
  /// Identifiable summaries: QR shape of mu (W of mu) and tr(mu'mu)/sigma^2.
  Matrix mean_shape;
  double noncentrality = 0.0;
};

/// Isotropic maximum likelihood over the (N-1)K entries of mu and log sigma^2.
FitResult fit_mle(ModelKind model, const Sample& sample, const FitOptions& opts = {});

double bic_star(double loglik, int n_p, int n);

enum class EvidenceGrade { Weak, Positive, Strong, VeryStrong };
std::string to_string(EvidenceGrade grade);
/// [0,2] Weak, (2,6] Positive, (6,10] Strong, above 10 VeryStrong.
EvidenceGrade evidence_grade(double bic_difference);

enum class NullVariance { PerGroup, Pooled };

struct LrTestResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  double loglik_null = 0.0;
  double loglik_alt = 0.0;
  Matrix mu_null;
  std::vector<double> sigma2_null;
  FitResult fit1;
  FitResult fit2;
  bool converged = false;
};

/// -2 log Lambda for H0: common mu (per-group or pooled sigma^2) against
/// separate mu's; chi-square with (N-1)K degrees of freedom.
LrTestResult lr_test_equal_mean_shape(const Sample& sample1, const Sample& sample2,
                                      ModelKind model, const FitOptions& opts = {},
                                      NullVariance null_variance = NullVariance::PerGroup);

/// QR shape (unit-norm W, reflection-including) of an (N-1) x K matrix.
Matrix canonical_shape(const Matrix& mu);

}  // namespace qrshape
