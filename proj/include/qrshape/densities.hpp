#pragma once

#include <optional>

#include "qrshape/generators.hpp"
#include "qrshape/geometry.hpp"
#include "qrshape/zonal.hpp"

namespace qrshape {

/// Row covariance Sigma of the Helmertised configuration, (N-1) x (N-1).
class Covariance {
 public:
  static Covariance isotropic(double sigma2);
  static Covariance full(Matrix sigma);

  bool is_isotropic() const { return !matrix_.has_value(); }
  double sigma2() const { return sigma2_; }
  /// Materialised matrix of the given order.
  Matrix matrix(int order) const;

 private:
  double sigma2_ = 1.0;
  std::optional<Matrix> matrix_;
};

/// Parameters of a noncentral elliptical shape model.
struct ModelSpec {
  Dims dims;
  Matrix mu;                    ///< (N-1) x K Helmertised mean L mu_X.
  Covariance sigma = Covariance::isotropic(1.0);
  std::optional<Matrix> theta;  ///< K x K column covariance; identity when absent.
  GeneratorSpec generator;
  ReflectionMode mode = ReflectionMode::IncludesReflection;
  std::optional<int> rank_override;  ///< Replaces the numerical rank of mu.

  static ModelSpec isotropic(const Dims& dims, Matrix mu, double sigma2, GeneratorSpec generator,
                             ReflectionMode mode = ReflectionMode::IncludesReflection);
  static ModelSpec gaussian(const Dims& dims, Matrix mu, double sigma2,
                            ReflectionMode mode = ReflectionMode::IncludesReflection);
  static ModelSpec kotz(const Dims& dims, Matrix mu, double sigma2, double tau, double R = 0.5,
                        ReflectionMode mode = ReflectionMode::IncludesReflection);

  bool isotropic_fast_path() const { return sigma.is_isotropic() && !theta.has_value(); }
  void validate() const;
  /// Noncentrality Omega = Sigma^{-1} mu Theta^{-1} mu'.
  Matrix omega() const;
};

struct DensityValue {
  double log_value = 0.0;
  SeriesResult series;  ///< Diagnostics of the zonal series (trivial for closed forms).
};

struct ReflectionVariant {
  double factor = 1.0;               ///< Multiplier of the reflection density.
  bool last_diagonal_unrestricted = false;
};

/// Relation between reflection-including and reflection-excluding densities.
/// Throws UnsupportedModelError for p = K in ExcludesReflection mode.
ReflectionVariant reflection_variant_factor(int N, int K, int p, ReflectionMode mode);

DensityValue size_and_shape_logdensity(const ModelSpec& spec, const SizeAndShape& T,
                                       const SeriesControl& ctrl = {});

/// General shape density: zonal series times radial integrals of h^{(2t)}.
DensityValue shape_logdensity(const ModelSpec& spec, const ShapeCoordinates& w,
                              const SeriesControl& ctrl = {});

/// Gaussian shape density written directly as a Gamma-weighted zonal series.
DensityValue gaussian_shape_logdensity(const ModelSpec& spec, const ShapeCoordinates& w,
                                       const SeriesControl& ctrl = {});

/// Kotz type I shape density; tau = 2 and tau = 3 use the simplified brace
/// forms when Sigma is isotropic, everything else the general path.
DensityValue kotz_shape_logdensity(const ModelSpec& spec, const ShapeCoordinates& w,
                                   const SeriesControl& ctrl = {});

/// Closed form for mu = 0, identical for every generator.
double central_shape_logdensity(const ModelSpec& spec, const ShapeCoordinates& w);

enum class DensityRoute {
  General,      ///< shape_logdensity
  Specialized,  ///< gaussian_ / kotz_shape_logdensity where available
};

/// Shape density with the model-dependent work done once, for repeated
/// evaluation over many observations.
class ShapeDensity {
 public:
  explicit ShapeDensity(const ModelSpec& spec, const SeriesControl& ctrl = {},
                        DensityRoute route = DensityRoute::Specialized);

  DensityValue operator()(const ShapeCoordinates& w) const;
  /// Same, with the parameter-free measure term log(J(u) prod w_ii^{K-i}) supplied.
  DensityValue evaluate(const ShapeCoordinates& w, double log_measure) const;

  const ModelSpec& spec() const { return spec_; }
  int mean_rank() const { return p_; }

  /// log J(u) + sum_i (K-i) log w_ii; depends only on the observation.
  static double log_measure(const ShapeCoordinates& w, const Dims& dims);

 private:
  enum class Kind { Central, General, Gaussian, Kotz2, Kotz3 };

  std::vector<double> zonal_argument(const Matrix& W) const;
  double trace_sigma_inv(const Matrix& W) const;

  ModelSpec spec_;
  SeriesControl ctrl_;
  Kind kind_ = Kind::General;
  int p_ = 0;
  double log_variant_ = 0.0;
  double log_det_sigma_ = 0.0;
  double b_ = 0.0;  // tr Omega
  Matrix sigma_inv_;
  Matrix theta_inv_;
  Matrix sigma_inv_mu_;  // Sigma^{-1} mu
  std::vector<double> lgamma_half_m_;  // log Gamma(M/2 + t)
};

}  // namespace qrshape
