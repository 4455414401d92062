#include "qrshape/densities.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qrshape/error.hpp"

namespace qrshape {

namespace {

const double kLogPi = std::log(std::numbers::pi);
const double kLog2 = std::log(2.0);

void require_pd(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(what) + " must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw DomainError(std::string(what) + " must be symmetric");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw DomainError(std::string(what) + " must be positive definite");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 1e-12 * es.eigenvalues().cwiseAbs().maxCoeff())
    throw DomainError(std::string(what) + " must be positive definite");
}

std::vector<double> symmetric_eigenvalues(const Matrix& S) {
  const auto n = S.rows();
  if (n == 1) return {S(0, 0)};
  if (n == 2) {
    const double tr = S(0, 0) + S(1, 1);
    const double half_diff = 0.5 * (S(0, 0) - S(1, 1));
    const double disc = std::sqrt(half_diff * half_diff + S(0, 1) * S(1, 0));
    return {0.5 * tr + disc, 0.5 * tr - disc};
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().data(), es.eigenvalues().data() + n};
}

// Positive semidefinite arguments: round-off negatives become zero.
std::vector<double> clamp_nonnegative(std::vector<double> x) {
  for (double& v : x) v = std::max(v, 0.0);
  return x;
}

double log_abs_det_pd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

SeriesTermWeight weight(std::function<LogReal(int)> f, double a) { return {std::move(f), a}; }

}  // namespace

Covariance Covariance::isotropic(double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("covariance: sigma^2 must be positive");
  Covariance c;
  c.sigma2_ = sigma2;
  return c;
}

Covariance Covariance::full(Matrix sigma) {
  require_pd(sigma, "Sigma");
  Covariance c;
  c.matrix_ = std::move(sigma);
  return c;
}

Matrix Covariance::matrix(int order) const {
  if (matrix_) return *matrix_;
  return sigma2_ * Matrix::Identity(order, order);
}

ModelSpec ModelSpec::isotropic(const Dims& dims, Matrix mu, double sigma2, GeneratorSpec generator,
                               ReflectionMode mode) {
  generator.dimension = dims.M();
  ModelSpec s{dims, std::move(mu), Covariance::isotropic(sigma2), std::nullopt, generator, mode, {}};
  s.validate();
  return s;
}

ModelSpec ModelSpec::gaussian(const Dims& dims, Matrix mu, double sigma2, ReflectionMode mode) {
  return isotropic(dims, std::move(mu), sigma2, GeneratorSpec::gaussian(dims.M()), mode);
}

ModelSpec ModelSpec::kotz(const Dims& dims, Matrix mu, double sigma2, double tau, double R,
                          ReflectionMode mode) {
  return isotropic(dims, std::move(mu), sigma2, GeneratorSpec::kotz(tau, R, dims.M()), mode);
}

void ModelSpec::validate() const {
  if (mu.rows() != dims.N - 1 || mu.cols() != dims.K)
    throw DimensionError("model: mu must be (N-1) x K");
  if (!mu.allFinite()) throw DomainError("model: mu has non-finite entries");
  if (!sigma.is_isotropic()) {
    const Matrix s = sigma.matrix(dims.N - 1);
    if (s.rows() != dims.N - 1) throw DimensionError("model: Sigma must be (N-1) x (N-1)");
  }
  if (theta) {
    if (theta->rows() != dims.K || theta->cols() != dims.K)
      throw DimensionError("model: Theta must be K x K");
    require_pd(*theta, "Theta");
  }
  generator.validate();
  if (generator.dimension != dims.M())
    throw DimensionError("model: generator must be normalised in M = (N-1)K coordinates");
}

Matrix ModelSpec::omega() const {
  const Matrix s = sigma.matrix(dims.N - 1);
  const Matrix sinv_mu = s.llt().solve(mu);
  if (!theta) return sinv_mu * mu.transpose();
  return sinv_mu * theta->llt().solve(mu.transpose());
}

ReflectionVariant reflection_variant_factor(int N, int K, int p, ReflectionMode mode) {
  const int n = std::min(N - 1, K);
  if (p < 0 || p > n) throw DomainError("reflection_variant_factor: rank of mu out of range");
  if (n < K || mode == ReflectionMode::IncludesReflection) return {1.0, false};
  if (p == K)
    throw UnsupportedModelError(
        "reflection-excluded density with rank(mu) = K does not follow the halving rule");
  return {0.5, true};
}

// ---------------------------------------------------------------------------

double ShapeDensity::log_measure(const ShapeCoordinates& w, const Dims& dims) {
  const int n = dims.n();
  if (w.W.rows() != dims.N - 1 || w.W.cols() != n)
    throw DimensionError("shape: W must be (N-1) x n");
  if (w.u.size() != dims.m()) throw DimensionError("shape: wrong number of angles");
  double acc = log_polar_jacobian(w.u);
  for (int i = 1; i <= n; ++i) {
    const double wii = w.W(i - 1, i - 1);
    const int power = dims.K - i;
    if (power == 0) {
      if (wii < 0.0 && w.mode == ReflectionMode::IncludesReflection)
        throw DomainError("shape: negative w_KK in reflection mode");
      continue;
    }
    if (wii < 0.0) throw DomainError("shape: negative diagonal entry w_ii");
    acc += power * std::log(wii);
  }
  return acc;
}

ShapeDensity::ShapeDensity(const ModelSpec& spec, const SeriesControl& ctrl, DensityRoute route)
    : spec_(spec), ctrl_(ctrl) {
  spec_.validate();
  const Dims& d = spec_.dims;
  p_ = spec_.rank_override ? *spec_.rank_override : numerical_rank(spec_.mu);
  log_variant_ = std::log(reflection_variant_factor(d.N, d.K, p_, spec_.mode).factor);

  if (spec_.sigma.is_isotropic()) {
    const double s2 = spec_.sigma.sigma2();
    log_det_sigma_ = (d.N - 1) * std::log(s2);
    sigma_inv_mu_ = spec_.mu / s2;
  } else {
    const Matrix s = spec_.sigma.matrix(d.N - 1);
    log_det_sigma_ = log_abs_det_pd(s);
    sigma_inv_ = s.llt().solve(Matrix::Identity(d.N - 1, d.N - 1));
    sigma_inv_mu_ = sigma_inv_ * spec_.mu;
  }
  if (spec_.theta) theta_inv_ = spec_.theta->llt().solve(Matrix::Identity(d.K, d.K));
  b_ = spec_.theta ? (sigma_inv_mu_ * theta_inv_ * spec_.mu.transpose()).trace()
                   : sigma_inv_mu_.cwiseProduct(spec_.mu).sum();

  const GeneratorSpec& g = spec_.generator;
  if (route == DensityRoute::General) {
    kind_ = Kind::General;
  } else if (p_ == 0) {
    kind_ = Kind::Central;
  } else if (g.is_gaussian()) {
    kind_ = Kind::Gaussian;
  } else if (spec_.sigma.is_isotropic() && g.tau == 2.0) {
    kind_ = Kind::Kotz2;
  } else if (spec_.sigma.is_isotropic() && g.tau == 3.0) {
    kind_ = Kind::Kotz3;
  } else {
    kind_ = Kind::General;
  }

  lgamma_half_m_.resize(ctrl_.max_degree + 3);
  for (std::size_t t = 0; t < lgamma_half_m_.size(); ++t)
    lgamma_half_m_[t] = std::lgamma(0.5 * d.M() + static_cast<double>(t));
}

double ShapeDensity::trace_sigma_inv(const Matrix& W) const {
  if (spec_.sigma.is_isotropic()) return W.squaredNorm() / spec_.sigma.sigma2();
  return (W.transpose() * sigma_inv_ * W).trace();
}

// Eigenvalues of Omega Sigma^{-1} W W' through the similar n x n matrix
// W' Sigma^{-1} mu Theta^{-1} mu' Sigma^{-1} W.
std::vector<double> ShapeDensity::zonal_argument(const Matrix& W) const {
  if (p_ == 0) return {};
  const Matrix B = sigma_inv_mu_.transpose() * W;  // K x n
  const Matrix S = spec_.theta ? Matrix(B.transpose() * theta_inv_ * B) : Matrix(B.transpose() * B);
  return clamp_nonnegative(symmetric_eigenvalues(S));
}

DensityValue ShapeDensity::operator()(const ShapeCoordinates& w) const {
  return evaluate(w, log_measure(w, spec_.dims));
}

DensityValue ShapeDensity::evaluate(const ShapeCoordinates& w, double log_measure) const {
  const Dims& d = spec_.dims;
  const int n = d.n(), K = d.K, M = d.M();
  const double half_m = 0.5 * M;
  const double log_gamma_n = log_multivariate_gamma(n, 0.5 * K);
  const double a = trace_sigma_inv(w.W);
  const double base = log_measure + log_variant_ - log_gamma_n - 0.5 * K * log_det_sigma_;
  const GeneratorSpec& g = spec_.generator;
  const double half_k = 0.5 * K;

  DensityValue out;
  switch (kind_) {
    case Kind::Central: {
      out.log_value = base + (n - 1) * kLog2 + 0.5 * (n * K - M) * kLogPi + std::lgamma(half_m) -
                      half_m * std::log(a);
      out.series.value = LogReal::from_log(0.0);
      out.series.converged = true;
      return out;
    }
    case Kind::General: {
      const auto x = zonal_argument(w.W);
      const double b = b_;
      out.series = weighted_zonal_series(
          x,
          weight([&](int t) {
            return log_radial_integral(g, M, t, a, b) * LogReal::from_log(-std::lgamma(t + 1.0));
          }, half_k),
          ctrl_);
      out.log_value = base + n * kLog2 + 0.5 * n * K * kLogPi + out.series.value.log_abs;
      break;
    }
    case Kind::Gaussian: {
      auto x = zonal_argument(w.W);
      for (double& v : x) v *= 0.5;
      const double la = std::log(a);
      out.series = weighted_zonal_series(
          x,
          weight([&](int t) {
            return LogReal::from_log(lgamma_half_m_[t] - std::lgamma(t + 1.0) - t * la);
          }, half_k),
          ctrl_);
      out.log_value = base - 0.5 * b_ - half_m * la - 0.5 * (M - n * K) * kLogPi +
                      (n - 1) * kLog2 + out.series.value.log_abs;
      break;
    }
    case Kind::Kotz2:
    case Kind::Kotz3: {
      // Isotropic Sigma: the radial integrals collapse to brace polynomials in
      // x = R tr(Omega) multiplying Gamma(M/2 + t).
      auto y = zonal_argument(w.W);
      for (double& v : y) v *= g.R / a;
      const double x = g.R * b_;
      const double s2a = spec_.sigma.sigma2() * a;
      const bool tau2 = kind_ == Kind::Kotz2;
      out.series = weighted_zonal_series(
          y,
          weight([&](int t) {
            const double h = half_m + t;
            const double brace = tau2 ? (x - 2.0 * t) + h
                                      : (x - 2.0 * t) * (x - 2.0 * t) - 2.0 * t +
                                            2.0 * (x - 2.0 * t) * h + h * (h + 1.0);
            return LogReal::from_value(brace) *
                   LogReal::from_log(lgamma_half_m_[t] - std::lgamma(t + 1.0));
          }, half_k),
          ctrl_);
      const double prefactor =
          tau2 ? n * kLog2 - std::log(static_cast<double>(M))
               : (n + 1) * kLog2 - std::log(static_cast<double>(M) * (M + 2));
      out.log_value = base + 0.5 * K * log_det_sigma_ + prefactor + 0.5 * (n * K - M) * kLogPi - x - half_m * std::log(s2a) +
                      out.series.value.log_abs;
      break;
    }
  }
  if (out.series.value.sign <= 0)
    throw NumericError("shape density: zonal series has non-positive sum (truncation too short?)");
  return out;
}

// ---------------------------------------------------------------------------

DensityValue size_and_shape_logdensity(const ModelSpec& spec, const SizeAndShape& T,
                                       const SeriesControl& ctrl) {
  spec.validate();
  const Dims& d = spec.dims;
  const int n = d.n(), K = d.K;
  if (T.T.rows() != d.N - 1 || T.T.cols() != n)
    throw DimensionError("size_and_shape: T must be (N-1) x n");
  const int p = spec.rank_override ? *spec.rank_override : numerical_rank(spec.mu);
  const double log_variant = std::log(reflection_variant_factor(d.N, K, p, spec.mode).factor);

  double log_diag = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double tii = T.T(i - 1, i - 1);
    if (K - i == 0) {
      if (tii < 0.0 && spec.mode == ReflectionMode::IncludesReflection)
        throw DomainError("size_and_shape: negative t_KK in reflection mode");
      continue;
    }
    if (tii < 0.0) throw DomainError("size_and_shape: negative diagonal entry t_ii");
    log_diag += (K - i) * std::log(tii);
  }

  const Matrix sigma = spec.sigma.matrix(d.N - 1);
  const auto llt = sigma.llt();
  const Matrix sinv_T = llt.solve(T.T);
  const Matrix sinv_mu = llt.solve(spec.mu);
  const Matrix omega_b = spec.theta ? Matrix(sinv_mu * spec.theta->llt().solve(spec.mu.transpose()))
                                    : Matrix(sinv_mu * spec.mu.transpose());
  const double A = T.T.cwiseProduct(sinv_T).sum() + omega_b.trace();

  std::vector<double> x;
  if (p > 0) {
    const Matrix B = sinv_mu.transpose() * T.T;  // K x n
    const Matrix S = spec.theta ? Matrix(B.transpose() * spec.theta->llt().solve(B))
                                : Matrix(B.transpose() * B);
    x = clamp_nonnegative(symmetric_eigenvalues(S));
  }
  const GeneratorSpec& g = spec.generator;
  DensityValue out;
  out.series = weighted_zonal_series(
      x,
      weight([&](int t) {
        return log_generator_derivative(g, 2 * t, A) * LogReal::from_log(-std::lgamma(t + 1.0));
      }, 0.5 * K),
      ctrl);
  if (out.series.value.sign <= 0)
    throw NumericError("size_and_shape density: zonal series has non-positive sum");
  out.log_value = n * kLog2 + 0.5 * n * K * kLogPi - log_multivariate_gamma(n, 0.5 * K) -
                  0.5 * K * log_abs_det_pd(sigma) + log_diag + log_variant +
                  out.series.value.log_abs;
  return out;
}

DensityValue shape_logdensity(const ModelSpec& spec, const ShapeCoordinates& w,
                              const SeriesControl& ctrl) {
  return ShapeDensity(spec, ctrl, DensityRoute::General)(w);
}

DensityValue gaussian_shape_logdensity(const ModelSpec& spec, const ShapeCoordinates& w,
                                       const SeriesControl& ctrl) {
  if (!spec.generator.is_gaussian())
    throw UnsupportedModelError("gaussian_shape_logdensity: generator is not Gaussian");
  return ShapeDensity(spec, ctrl, DensityRoute::Specialized)(w);
}

DensityValue kotz_shape_logdensity(const ModelSpec& spec, const ShapeCoordinates& w,
                                   const SeriesControl& ctrl) {
  const GeneratorSpec& g = spec.generator;
  if (g.tau < 1.0 || !g.integer_tau())
    throw UnsupportedModelError("kotz_shape_logdensity: tau must be an integer >= 1");
  return ShapeDensity(spec, ctrl, DensityRoute::Specialized)(w);
}

double central_shape_logdensity(const ModelSpec& spec, const ShapeCoordinates& w) {
  ModelSpec central = spec;
  central.mu.setZero();
  central.rank_override.reset();
  return ShapeDensity(central, {}, DensityRoute::Specialized)(w).log_value;
}

}  // namespace qrshape
