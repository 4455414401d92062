#include "qrshape/verify.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "qrshape/densities.hpp"
#include "qrshape/error.hpp"
#include "qrshape/simulate.hpp"
#include "qrshape/zonal.hpp"

namespace qrshape {

namespace {

CheckResult check(std::string name, double value, double tol, std::string detail = {}) {
  return {std::move(name), std::isfinite(value) && value <= tol, value, tol, std::move(detail)};
}

double rel_err(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

Matrix random_symmetric(Rng& rng, int k) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = u(rng);
  return a;
}

std::vector<double> eigenvalues(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().data(), es.eigenvalues().data() + a.rows()};
}

// Uniform point in the interior of the angle domain.
ShapeCoordinates random_shape(Rng& rng, const Dims& d, ReflectionMode mode) {
  const auto dom = angle_domain(d, mode);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  ShapeCoordinates w;
  w.u.resize(d.m());
  for (int k = 0; k < d.m(); ++k) w.u(k) = dom[k].lo + u(rng) * (dom[k].hi - dom[k].lo);
  w.r = 1.0;
  w.mode = mode;
  w.W = Matrix::Zero(d.N - 1, d.n());
  w.W = from_polar(w).T;
  return w;
}

// Midpoint rule over the angle domain of an N = 3, K = 2 model.
double integrate_triangle(const ModelSpec& spec, int grid, Execution exec) {
  const auto dom = angle_domain(spec.dims, spec.mode);
  const ShapeDensity f(spec);
  const double h0 = (dom[0].hi - dom[0].lo) / grid, h1 = (dom[1].hi - dom[1].lo) / grid;
  std::vector<double> rows(grid);
  parallel_for(grid, exec, [&](long i) {
    ShapeCoordinates w;
    w.u.resize(2);
    w.r = 1.0;
    w.mode = spec.mode;
    w.W = Matrix::Zero(2, 2);
    double s = 0.0;
    for (int j = 0; j < grid; ++j) {
      w.u << dom[0].lo + (i + 0.5) * h0, dom[1].lo + (j + 0.5) * h1;
      w.W = from_polar(w).T;
      s += std::exp(f(w).log_value);
    }
    rows[i] = s;
  });
  double total = 0.0;
  for (double r : rows) total += r;
  return total * h0 * h1;
}

}  // namespace

bool SuiteReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

double SuiteReport::worst(const std::string& prefix) const {
  double w = -std::numeric_limits<double>::infinity();
  for (const auto& c : checks)
    if (c.name.rfind(prefix, 0) == 0) w = std::max(w, std::isfinite(c.value) ? c.value : HUGE_VAL);
  return w;
}

SuiteReport verify_zonal(const VerifyOptions& opts) {
  SuiteReport rep{"zonal", {}};
  Rng rng(split_seed(opts.seed, 1));

  // Semidefinite A against (tr A)^t; indefinite A by backward error.
  double sum_err = 0.0, backward_err = 0.0, hom_err = 0.0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep_i = 0; rep_i < 10; ++rep_i) {
    const bool psd = rep_i < 5;
    Matrix A = random_symmetric(rng, 3);
    if (psd) A = A * A.transpose();
    const auto e = eigenvalues(A);
    const double scale = 0.5 + 1.5 * unit(rng);
    std::vector<double> scaled(e);
    for (double& v : scaled) v *= scale;
    for (int t = 0; t <= 12; ++t) {
      double s = 0.0, s_abs = 0.0;
      for (const auto& kappa : partitions_of(t)) {
        const double c = zonal_polynomial(kappa, e);
        s += c;
        s_abs += std::fabs(c);
        if (c != 0.0)
          hom_err = std::max(hom_err, rel_err(zonal_polynomial(kappa, scaled), std::pow(scale, t) * c));
      }
      const double target = std::pow(A.trace(), t);
      if (psd)
        sum_err = std::max(sum_err, rel_err(s, target));
      else
        backward_err = std::max(backward_err, std::fabs(s - target) / s_abs);
    }
  }
  rep.checks.push_back(check("sum identity", sum_err, 1e-9,
                             "sum_kappa C_kappa(A) = (tr A)^t, t <= 12, A >= 0"));
  rep.checks.push_back(check("sum identity backward error", backward_err, 1e-13,
                             "indefinite A, error relative to sum |C_kappa(A)|"));
  rep.checks.push_back(check("homogeneity", hom_err, 1e-10, "C_kappa(aA) = a^t C_kappa(A)"));

  // etr(A) = sum_t sum_kappa C_kappa(A) / t! through the fast series.
  double etr_err = 0.0;
  for (int k = 1; k <= 4; ++k) {
    const Matrix A = random_symmetric(rng, k);
    const SeriesTermWeight w{[](int t) { return LogReal::from_log(-std::lgamma(t + 1.0)); }, {}};
    const SeriesResult r = weighted_zonal_series(A, w, {200, 1e-15});
    etr_err = std::max(etr_err, std::fabs(r.value.log_abs - A.trace()) + (r.value.sign == 1 ? 0 : 1));
  }
  rep.checks.push_back(check("exponential trace", etr_err, 1e-10, "log etr(A) from the series"));

  // Fast factored series against independent per-partition evaluation.
  double path_err = 0.0;
  for (int k = 1; k <= 4; ++k) {
    const Matrix A = random_symmetric(rng, k) * 2.0;
    const auto e = eigenvalues(A);
    const double a = 0.5 * (k + 2);
    const SeriesTermWeight fast{[](int t) { return LogReal::from_log(-std::lgamma(t + 1.0)); }, a};
    const GeneralTermWeight ref = [a](int t, const Partition& kappa) {
      return LogReal::from_log(-std::lgamma(t + 1.0)) / log_gen_pochhammer(a, kappa);
    };
    const SeriesControl ctrl{40, 1e-14};
    const SeriesResult f = weighted_zonal_series(e, fast, ctrl);
    const SeriesResult g = weighted_zonal_series_reference(e, ref, ctrl);
    path_err = std::max(path_err, rel_err(f.value.value(), g.value.value()));
  }
  rep.checks.push_back(check("fast vs reference", path_err, 1e-10, "1F1-type series, 1 to 4 variables"));
  return rep;
}

SuiteReport verify_stiefel(const VerifyOptions& opts) {
  SuiteReport rep{"stiefel", {}};
  const int s = 2, m = 3;
  Rng rng(split_seed(opts.seed, 2));
  std::normal_distribution<double> z;
  Matrix A(m, s);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < s; ++j) A(i, j) = 0.7 * z(rng);

  const double vol = std::exp(log_stiefel_volume(s, m));
  const McEstimate m0 = mc_stiefel_moment(A, 0, m, opts.mc_draws, split_seed(opts.seed, 100), opts.exec);
  rep.checks.push_back(check("volume t=0", rel_err(m0.estimate, vol), 1e-12, "Vol(V_{2,3})"));

  for (int t = 1; t <= 3; ++t) {
    const McEstimate e = mc_stiefel_moment(A, 2 * t, m, opts.mc_draws, split_seed(opts.seed, 100 + t), opts.exec);
    const double closed = stiefel_moment_closed_form(A, t, m);
    std::ostringstream d;
    d << "MC " << e.estimate << " +- " << e.std_error << ", closed form " << closed;
    rep.checks.push_back(check("even power " + std::to_string(2 * t), std::fabs(e.estimate - closed) / e.std_error, 3.0, d.str()));
  }
  for (int p : {1, 3, 5}) {
    const McEstimate e = mc_stiefel_moment(A, p, m, opts.mc_draws, split_seed(opts.seed, 200 + p), opts.exec);
    std::ostringstream d;
    d << "MC " << e.estimate << " +- " << e.std_error;
    rep.checks.push_back(check("odd power " + std::to_string(p), std::fabs(e.estimate) / e.std_error, 3.0, d.str()));
  }
  return rep;
}

SuiteReport verify_normalization(const VerifyOptions& opts) {
  SuiteReport rep{"normalization", {}};
  const Dims d(3, 2);
  Matrix mu(2, 2);
  mu << 0.8, 0.1, -0.3, 0.6;
  Matrix mu1(2, 2);
  mu1 << 0.7, 0.0, -0.4, 0.0;
  const double s2 = 0.4;
  struct Case {
    std::string name;
    ModelSpec spec;
  };
  const auto excl = ReflectionMode::ExcludesReflection;
  const std::vector<Case> cases{
      {"gaussian central", ModelSpec::gaussian(d, Matrix::Zero(2, 2), s2)},
      {"gaussian noncentral", ModelSpec::gaussian(d, mu, s2)},
      {"kotz2 central", ModelSpec::kotz(d, Matrix::Zero(2, 2), s2, 2.0)},
      {"kotz2 noncentral", ModelSpec::kotz(d, mu, s2, 2.0)},
      {"kotz3 noncentral", ModelSpec::kotz(d, mu, s2, 3.0, 0.8)},
      {"gaussian noncentral rank-1 excluding reflection", ModelSpec::gaussian(d, mu1, s2, excl)},
  };
  for (const auto& c : cases) {
    const double v = integrate_triangle(c.spec, opts.grid, opts.exec);
    std::ostringstream det;
    det.precision(10);
    det << "integral " << v;
    rep.checks.push_back(check(c.name, std::fabs(v - 1.0), 1e-3, det.str()));
  }
  return rep;
}

SuiteReport verify_invariance(const VerifyOptions& opts) {
  SuiteReport rep{"invariance", {}};
  Rng rng(split_seed(opts.seed, 4));

  // Central densities do not depend on the generator.
  const Dims d(5, 3);
  Matrix sigma = random_symmetric(rng, 4);
  sigma = sigma * sigma.transpose() + Matrix::Identity(4, 4);
  const Matrix zero = Matrix::Zero(4, 3);
  std::vector<ModelSpec> models;
  for (const auto& g : {GeneratorSpec::gaussian(d.M()), GeneratorSpec::kotz(2.0, 0.5, d.M()),
                        GeneratorSpec::kotz(3.0, 1.3, d.M())}) {
    ModelSpec iso = ModelSpec::isotropic(d, zero, 0.7, g);
    models.push_back(iso);
    iso.sigma = Covariance::full(sigma);
    models.push_back(iso);
  }
  double central_err = 0.0;
  for (int i = 0; i < opts.points; ++i) {
    const ShapeCoordinates w = random_shape(rng, d, ReflectionMode::IncludesReflection);
    for (std::size_t k = 0; k < 2; ++k) {
      const double closed = central_shape_logdensity(models[k], w);
      for (std::size_t g = k; g < models.size(); g += 2)
        central_err = std::max(central_err, std::fabs(shape_logdensity(models[g], w).log_value - closed));
    }
  }
  rep.checks.push_back(check("central generator invariance", central_err, 1e-9,
                             "Gaussian, Kotz tau=2, Kotz tau=3 against the closed form"));

  // Theta-whitening: (mu, Sigma, Theta) against (mu Theta^{-1/2}, Sigma, I).
  Matrix theta = random_symmetric(rng, 3);
  theta = theta * theta.transpose() + 0.5 * Matrix::Identity(3, 3);
  Matrix mu(4, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) mu(i, j) = std::normal_distribution<double>(0.0, 0.6)(rng);
  ModelSpec with_theta = ModelSpec::gaussian(d, mu, 0.5);
  with_theta.theta = theta;
  const ModelSpec whitened = ModelSpec::gaussian(d, mu * pd_inv_sqrt(theta), 0.5);
  double theta_err = 0.0;
  for (int i = 0; i < 50; ++i) {
    const ShapeCoordinates w = random_shape(rng, d, ReflectionMode::IncludesReflection);
    theta_err = std::max(theta_err, std::fabs(shape_logdensity(with_theta, w).log_value -
                                              shape_logdensity(whitened, w).log_value));
  }
  rep.checks.push_back(check("theta whitening", theta_err, 1e-9));

  // Extraction is blind to translation, rotation and scale.
  double geo_err = 0.0;
  std::normal_distribution<double> z;
  for (int i = 0; i < 50; ++i) {
    Matrix X(6, 3);
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 3; ++c) X(r, c) = z(rng);
    Eigen::HouseholderQR<Matrix> qr(Matrix(Matrix::NullaryExpr(3, 3, [&] { return z(rng); })));
    Matrix R = qr.householderQ();
    if (R.determinant() < 0) R.col(0) *= -1.0;
    const Eigen::RowVectorXd shift = Eigen::RowVectorXd::NullaryExpr(3, [&] { return z(rng); });
    const Matrix moved = 2.5 * (X * R) + Matrix::Ones(6, 1) * shift;
    const ShapeCoordinates a = extract_shape(LandmarkConfiguration(X), Matrix::Identity(3, 3),
                                             ReflectionMode::IncludesReflection);
    const ShapeCoordinates b = extract_shape(LandmarkConfiguration(moved), Matrix::Identity(3, 3),
                                             ReflectionMode::IncludesReflection);
    geo_err = std::max({geo_err, (a.W - b.W).cwiseAbs().maxCoeff(), std::fabs(b.r / a.r - 2.5)});
  }
  rep.checks.push_back(check("similarity invariance", geo_err, 1e-10));
  return rep;
}

std::vector<std::string> suite_names() { return {"zonal", "stiefel", "normalization", "invariance"}; }

SuiteReport run_suite(const std::string& name, const VerifyOptions& opts) {
  if (name == "zonal") return verify_zonal(opts);
  if (name == "stiefel") return verify_stiefel(opts);
  if (name == "normalization") return verify_normalization(opts);
  if (name == "invariance") return verify_invariance(opts);
  throw DomainError("unknown suite '" + name + "'");
}

}  // namespace qrshape
