#include "qrshape/inference.hpp"

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qrshape/error.hpp"

namespace qrshape {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPenalty = 1e300;

using Objective = std::function<double(const Vector&)>;

struct OptRun {
  Vector x;
  double f = kInf;
  bool converged = false;
  int evaluations = 0;
};

double gsl_objective(const gsl_vector* v, void* params) {
  auto* ctx = static_cast<std::pair<const Objective*, int*>*>(params);
  ++*ctx->second;
  const Vector x = Eigen::Map<const Vector>(v->data, static_cast<Eigen::Index>(v->size));
  const double f = (*ctx->first)(x);
  return std::isfinite(f) ? f : kPenalty;
}

OptRun nelder_mead(const Objective& f, const Vector& x0, const Vector& step, int max_evals,
                   double tol) {
  gsl_set_error_handler_off();
  const std::size_t P = x0.size();
  int evals = 0;
  std::pair<const Objective*, int*> ctx{&f, &evals};
  gsl_multimin_function fn{&gsl_objective, P, &ctx};

  gsl_vector* x = gsl_vector_alloc(P);
  gsl_vector* ss = gsl_vector_alloc(P);
  for (std::size_t i = 0; i < P; ++i) {
    gsl_vector_set(x, i, x0(i));
    gsl_vector_set(ss, i, step(i));
  }
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, P);
  gsl_multimin_fminimizer_set(s, &fn, x, ss);

  OptRun run;
  int status = GSL_CONTINUE;
  while (status == GSL_CONTINUE && evals < max_evals) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), tol);
  }
  run.converged = status == GSL_SUCCESS;
  run.f = s->fval;
  run.x = Eigen::Map<const Vector>(s->x->data, static_cast<Eigen::Index>(P));
  run.evaluations = evals;
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(x);
  gsl_vector_free(ss);
  return run;
}

// Best of simplex runs from each start, then from random perturbations of the
// first start.
OptRun multi_start(const Objective& f, const std::vector<Vector>& starts, const Vector& step,
                   const FitOptions& opts) {
  std::vector<Vector> points = starts;
  Rng rng(split_seed(opts.seed, 0x5eed));
  std::normal_distribution<double> z;
  for (int r = 1; r < opts.restarts; ++r) {
    Vector x = starts.front();
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += 0.5 * step(i) * z(rng);
    points.push_back(x);
  }
  OptRun best;
  int total = 0;
  for (const auto& x0 : points) {
    OptRun run = nelder_mead(f, x0, step, opts.max_evaluations, opts.tolerance);
    total += run.evaluations;
    if (run.f < best.f || best.x.size() == 0) best = std::move(run);
  }
  best.evaluations = total;
  return best;
}

bool lex_less(const ShapeCoordinates& a, const ShapeCoordinates& b) {
  for (Eigen::Index i = 0; i < a.u.size(); ++i)
    if (a.u(i) != b.u(i)) return a.u(i) < b.u(i);
  return a.r < b.r;
}

Sample canonical_order(const Sample& s) {
  Sample out = s;
  std::stable_sort(out.observations.begin(), out.observations.end(), lex_less);
  return out;
}

// Parameter vector: vec(mu) column-major, then log sigma^2 per group.
Matrix unpack_mu(const Vector& x, const Dims& d) {
  return Eigen::Map<const Matrix>(x.data(), d.N - 1, d.K);
}

double unpack_sigma2(const Vector& x, Eigen::Index at) {
  return std::max(std::exp(x(at)), kSigma2LowerBound);
}

// Mean of the size-and-shape matrices (padded to K columns), and the residual
// variance rescaled by the generator's E r^2.
std::pair<Matrix, double> start_point(const Sample& s, const GeneratorSpec& g) {
  const Dims& d = s.dims;
  Matrix mean = Matrix::Zero(d.N - 1, d.K);
  for (const auto& w : s.observations) mean.leftCols(d.n()) += w.r * w.W;
  mean /= static_cast<double>(s.size());
  double resid = 0.0;
  for (const auto& w : s.observations) {
    Matrix t = Matrix::Zero(d.N - 1, d.K);
    t.leftCols(d.n()) = w.r * w.W;
    resid += (t - mean).squaredNorm();
  }
  resid /= static_cast<double>(s.size());
  const double er2 = (g.tau - 1.0 + 0.5 * d.M()) / g.R;
  return {mean, std::max(resid / er2, kSigma2LowerBound)};
}

bool all_identical(const Sample& s) {
  const auto& first = s.observations.front().W;
  for (const auto& w : s.observations)
    if ((w.W - first).cwiseAbs().maxCoeff() > 1e-12) return false;
  return true;
}

struct PreparedSample {
  Sample sample;
  std::vector<double> log_measures;
};

PreparedSample prepare(const Sample& s) {
  s.validate();
  PreparedSample p{canonical_order(s), {}};
  p.log_measures.reserve(p.sample.size());
  for (const auto& w : p.sample.observations)
    p.log_measures.push_back(ShapeDensity::log_measure(w, p.sample.dims));
  return p;
}

LogLikelihood evaluate(const ModelSpec& spec, const PreparedSample& p, const SeriesControl& ctrl,
                       Execution exec) {
  const ShapeDensity density(spec, ctrl);
  const auto terms = density_terms(density, p.sample.observations, p.log_measures, exec);
  LogLikelihood out;
  for (const auto& t : terms) {
    if (!t.ok) {
      ++out.failed;
      continue;
    }
    if (!t.series.converged) ++out.nonconverged;
    out.max_degree_used = std::max(out.max_degree_used, t.series.degrees_used);
  }
  out.value = out.failed > 0 ? -kInf : ordered_sum(terms);
  return out;
}

// Negative log-likelihood; truncated or failed series make the point infeasible.
double objective_value(const LogLikelihood& l) { return l.ok() ? -l.value : kInf; }

ModelSpec isotropic_spec(const Dims& d, const Matrix& mu, double sigma2, ModelKind kind,
                         ReflectionMode mode) {
  return ModelSpec::isotropic(d, mu, sigma2, generator_for(kind, d.M()), mode);
}

void check_fittable(const Sample& s) {
  if (s.mode == ReflectionMode::ExcludesReflection && s.dims.N - 1 >= s.dims.K)
    throw UnsupportedModelError(
        "fit: reflection-excluded likelihood is undefined for a full-rank mean (N-1 >= K)");
}

Vector pack(const Matrix& mu, std::initializer_list<double> sigma2s) {
  Vector x(mu.size() + static_cast<Eigen::Index>(sigma2s.size()));
  x.head(mu.size()) = Eigen::Map<const Vector>(mu.data(), mu.size());
  Eigen::Index i = mu.size();
  for (double s2 : sigma2s) x(i++) = std::log(std::max(s2, kSigma2LowerBound));
  return x;
}

// Inflates a starting sigma^2 until the likelihood series converge there.
double feasible_sigma2(const Objective& f, const Matrix& mu, double sigma2) {
  for (int i = 0; i < 40 && !std::isfinite(f(pack(mu, {sigma2}))); ++i) sigma2 *= 2.0;
  return sigma2;
}

Vector steps(const Dims& d, double sigma2, int n_sigma) {
  Vector st(d.M() + n_sigma);
  st.head(d.M()).setConstant(0.25 * std::sqrt(sigma2));
  st.tail(n_sigma).setConstant(0.3);
  return st;
}

FitResult finish(ModelKind model, const PreparedSample& p, const OptRun& run,
                 const FitOptions& opts) {
  const Dims& d = p.sample.dims;
  FitResult r;
  r.model = model;
  r.mu = unpack_mu(run.x, d);
  r.sigma2 = unpack_sigma2(run.x, d.M());
  r.diagnostics = evaluate(isotropic_spec(d, r.mu, r.sigma2, model, p.sample.mode), p, opts.ctrl,
                           opts.exec);
  r.loglik = r.diagnostics.value;
  r.n = static_cast<int>(p.sample.size());
  r.n_p = d.M() + 1;
  r.bic_star = bic_star(r.loglik, r.n_p, r.n);
  r.converged = run.converged && r.diagnostics.ok();
  r.evaluations = run.evaluations;
  r.at_lower_bound = r.sigma2 <= kSigma2LowerBound * (1.0 + 1e-6);
  r.noncentrality = r.mu.squaredNorm() / r.sigma2;
  try {
    r.mean_shape = canonical_shape(r.mu);
  } catch (const DegenerateConfigurationError&) {
    r.mean_shape.resize(0, 0);
  }
  return r;
}

FitResult fit_prepared(ModelKind model, const PreparedSample& p, const FitOptions& opts,
                       const std::vector<std::pair<Matrix, double>>& extra_starts = {}) {
  const Dims& d = p.sample.dims;
  const GeneratorSpec g = generator_for(model, d.M());
  auto [mu0, s20] = start_point(p.sample, g);
  if (opts.start_mu) mu0 = *opts.start_mu;
  if (opts.start_sigma2) s20 = *opts.start_sigma2;

  if (all_identical(p.sample)) {
    FitResult r;
    r.model = model;
    r.mu = mu0;
    r.sigma2 = kSigma2LowerBound;
    r.loglik = kInf;
    r.n = static_cast<int>(p.sample.size());
    r.n_p = d.M() + 1;
    r.bic_star = bic_star(r.loglik, r.n_p, r.n);
    r.at_lower_bound = true;
    r.noncentrality = mu0.squaredNorm() / r.sigma2;
    return r;
  }

  const Objective f = [&](const Vector& x) {
    try {
      const ModelSpec spec =
          isotropic_spec(d, unpack_mu(x, d), unpack_sigma2(x, d.M()), model, p.sample.mode);
      return objective_value(evaluate(spec, p, opts.ctrl, opts.exec));
    } catch (const NumericError&) {
      return kInf;
    }
  };
  s20 = feasible_sigma2(f, mu0, s20);
  std::vector<Vector> starts{pack(mu0, {s20})};
  for (const auto& [mu, s2] : extra_starts) starts.push_back(pack(mu, {s2}));
  const OptRun run = multi_start(f, starts, steps(d, s20, 1), opts);
  return finish(model, p, run, opts);
}

}  // namespace

Sample::Sample(std::vector<ShapeCoordinates> obs, const Dims& d)
    : observations(std::move(obs)), dims(d) {
  if (!observations.empty()) mode = observations.front().mode;
  validate();
}

void Sample::validate() const {
  if (observations.empty()) throw DimensionError("sample: no observations");
  for (const auto& w : observations) {
    if (w.W.rows() != dims.N - 1 || w.W.cols() != dims.n() || w.u.size() != dims.m())
      throw DimensionError("sample: observation dimensions do not match N, K");
    if (w.mode != mode) throw DimensionError("sample: mixed reflection modes");
  }
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Gaussian: return "gaussian";
    case ModelKind::Kotz2: return "kotz2";
    case ModelKind::Kotz3: return "kotz3";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "gaussian") return ModelKind::Gaussian;
  if (name == "kotz2") return ModelKind::Kotz2;
  if (name == "kotz3") return ModelKind::Kotz3;
  throw DomainError("unknown model '" + name + "' (expected gaussian, kotz2 or kotz3)");
}

GeneratorSpec generator_for(ModelKind kind, int M) {
  switch (kind) {
    case ModelKind::Gaussian: return GeneratorSpec::gaussian(M);
    case ModelKind::Kotz2: return GeneratorSpec::kotz(2.0, 0.5, M);
    case ModelKind::Kotz3: return GeneratorSpec::kotz(3.0, 0.5, M);
  }
  throw DomainError("unknown model");
}

LogLikelihood log_likelihood(const ModelSpec& spec, const Sample& sample,
                             const SeriesControl& ctrl, Execution exec) {
  sample.validate();
  if (!(spec.dims == sample.dims)) throw DimensionError("log_likelihood: dimensions differ");
  std::vector<double> lm;
  lm.reserve(sample.size());
  for (const auto& w : sample.observations) lm.push_back(ShapeDensity::log_measure(w, sample.dims));
  const PreparedSample p{sample, std::move(lm)};
  return evaluate(spec, p, ctrl, exec);
}

FitResult fit_mle(ModelKind model, const Sample& sample, const FitOptions& opts) {
  check_fittable(sample);
  return fit_prepared(model, prepare(sample), opts);
}

double bic_star(double loglik, int n_p, int n) {
  if (n < 1) throw DomainError("bic_star: sample size must be >= 1");
  return -2.0 * loglik + n_p * (std::log(n + 2.0) - std::log(24.0));
}

std::string to_string(EvidenceGrade grade) {
  switch (grade) {
    case EvidenceGrade::Weak: return "Weak";
    case EvidenceGrade::Positive: return "Positive";
    case EvidenceGrade::Strong: return "Strong";
    case EvidenceGrade::VeryStrong: return "Very strong";
  }
  return "?";
}

EvidenceGrade evidence_grade(double diff) {
  if (!(diff >= 0.0)) throw DomainError("evidence_grade: difference must be non-negative");
  if (diff <= 2.0) return EvidenceGrade::Weak;
  if (diff <= 6.0) return EvidenceGrade::Positive;
  if (diff <= 10.0) return EvidenceGrade::Strong;
  return EvidenceGrade::VeryStrong;
}

LrTestResult lr_test_equal_mean_shape(const Sample& sample1, const Sample& sample2,
                                      ModelKind model, const FitOptions& opts,
                                      NullVariance null_variance) {
  if (!(sample1.dims == sample2.dims) || sample1.mode != sample2.mode)
    throw DimensionError("lr_test: samples differ in N, K or reflection mode");
  check_fittable(sample1);
  const PreparedSample p1 = prepare(sample1), p2 = prepare(sample2);
  const Dims& d = sample1.dims;
  const GeneratorSpec g = generator_for(model, d.M());
  const bool per_group = null_variance == NullVariance::PerGroup;

  // Null: common mu, sigma^2 per group or pooled.
  Sample pooled = p1.sample;
  pooled.observations.insert(pooled.observations.end(), p2.sample.observations.begin(),
                             p2.sample.observations.end());
  auto [mu0, s20] = start_point(pooled, g);
  const double s21 = start_point(p1.sample, g).second, s22 = start_point(p2.sample, g).second;
  const int n_sigma = per_group ? 2 : 1;
  const Objective f0 = [&](const Vector& x) {
    try {
      const Matrix mu = unpack_mu(x, d);
      const double a = unpack_sigma2(x, d.M());
      const double b = per_group ? unpack_sigma2(x, d.M() + 1) : a;
      const double l1 = objective_value(
          evaluate(isotropic_spec(d, mu, a, model, sample1.mode), p1, opts.ctrl, opts.exec));
      const double l2 = objective_value(
          evaluate(isotropic_spec(d, mu, b, model, sample1.mode), p2, opts.ctrl, opts.exec));
      return l1 + l2;
    } catch (const NumericError&) {
      return kInf;
    }
  };
  double inflate = 1.0;
  const auto null_start = [&] {
    return per_group ? pack(mu0, {inflate * s21, inflate * s22}) : pack(mu0, {inflate * s20});
  };
  for (int i = 0; i < 40 && !std::isfinite(f0(null_start())); ++i) inflate *= 2.0;
  std::vector<Vector> starts{null_start()};
  const OptRun null_run = multi_start(f0, starts, steps(d, s20, n_sigma), opts);

  LrTestResult out;
  out.mu_null = unpack_mu(null_run.x, d);
  out.sigma2_null.push_back(unpack_sigma2(null_run.x, d.M()));
  if (per_group) out.sigma2_null.push_back(unpack_sigma2(null_run.x, d.M() + 1));
  const double s2a = out.sigma2_null.front(), s2b = out.sigma2_null.back();
  out.loglik_null = -null_run.f;

  // Alternative fits also start from the null optimum.
  FitOptions alt = opts;
  out.fit1 = fit_prepared(model, p1, alt, {{out.mu_null, s2a}});
  out.fit2 = fit_prepared(model, p2, alt, {{out.mu_null, s2b}});
  out.loglik_alt = out.fit1.loglik + out.fit2.loglik;
  out.statistic = -2.0 * (out.loglik_null - out.loglik_alt);
  out.df = d.M();
  out.p_value = gsl_cdf_chisq_Q(std::max(out.statistic, 0.0), out.df);
  out.converged = null_run.converged && out.fit1.converged && out.fit2.converged;
  return out;
}

Matrix canonical_shape(const Matrix& mu) {
  const SizeAndShape t = qr_size_and_shape(mu, ReflectionMode::IncludesReflection).size_and_shape;
  return t.T / t.T.norm();
}

}  // namespace qrshape
