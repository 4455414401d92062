#include "qrshape/generators.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "qrshape/error.hpp"

namespace qrshape {

namespace {

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Falling factorial (x)(x-1)...(x-m+1) as a signed log value.
LogReal falling(double x, int m) {
  LogReal v = LogReal::from_log(0.0);
  for (int i = 0; i < m; ++i) v *= LogReal::from_value(x - i);
  return v;
}

// Highest m with a non-zero falling(tau - 1, m), capped at k.
int derivative_terms(const GeneratorSpec& spec, int k) {
  if (spec.integer_tau()) return std::min(k, static_cast<int>(std::lround(spec.tau)) - 1);
  return k;
}

struct GslWorkspace {
  gsl_integration_workspace* ws;
  explicit GslWorkspace(std::size_t n) : ws(gsl_integration_workspace_alloc(n)) {}
  ~GslWorkspace() { gsl_integration_workspace_free(ws); }
  GslWorkspace(const GslWorkspace&) = delete;
  GslWorkspace& operator=(const GslWorkspace&) = delete;
};

struct RadialIntegrand {
  const GeneratorSpec* spec;
  int M;
  int t;
  double a;
  double b;
  bool absolute;
};

double radial_integrand(double r, void* p) {
  const auto* q = static_cast<const RadialIntegrand*>(p);
  if (r <= 0.0) return 0.0;
  const LogReal h = log_generator_derivative(*q->spec, 2 * q->t, r * r * q->a + q->b);
  const double v = (h * LogReal::from_log((q->M + 2 * q->t - 1) * std::log(r))).value();
  return q->absolute ? std::fabs(v) : v;
}

}  // namespace

// h^{(k)}(y) = c sum_m C(k,m) (tau-1)_m^{falling} y^{tau-1-m} (-R)^{k-m} e^{-R y}
LogReal log_generator_derivative(const GeneratorSpec& spec, int k, double y) {
  const double lc = log_generator_constant(spec);
  const double lr = std::log(spec.R);
  LogReal acc;
  for (int m = 0; m <= derivative_terms(spec, k); ++m) {
    const LogReal f = falling(spec.tau - 1.0, m);
    if (f.is_zero()) continue;
    const double power = spec.tau - 1.0 - m;
    LogReal term = f * LogReal::from_log(log_binomial(k, m) + (k - m) * lr,
                                         (k - m) % 2 == 0 ? 1 : -1);
    if (y == 0.0) {
      if (power < 0.0)
        throw NumericError("generator_derivative: singular at y = 0 (tau=" +
                           std::to_string(spec.tau) + ", k=" + std::to_string(k) + ")");
      if (power > 0.0) continue;
    } else {
      term *= LogReal::from_log(power * std::log(y));
    }
    acc += term;
  }
  return acc * LogReal::from_log(lc - spec.R * y);
}

bool GeneratorSpec::integer_tau() const { return tau == std::floor(tau); }

void GeneratorSpec::validate() const {
  if (!(R > 0.0)) throw DomainError("generator: R must be positive");
  if (!(tau >= 1.0)) throw DomainError("generator: tau must be >= 1");
  if (dimension < 1) throw DomainError("generator: dimension must be >= 1");
}

double log_generator_constant(const GeneratorSpec& spec) {
  spec.validate();
  const double half = 0.5 * spec.dimension;
  const double shape = spec.tau - 1.0 + half;
  return shape * std::log(spec.R) + std::lgamma(half) - half * std::log(std::numbers::pi) -
         std::lgamma(shape);
}

double generator_value(const GeneratorSpec& spec, double y) {
  if (y < 0.0) throw DomainError("generator_value: y must be non-negative");
  return generator_derivative(spec, 0, y);
}

double generator_derivative(const GeneratorSpec& spec, int k, double y) {
  if (k < 0) throw DomainError("generator_derivative: order must be non-negative");
  if (y < 0.0) throw DomainError("generator_derivative: y must be non-negative");
  return log_generator_derivative(spec, k, y).value();
}

LogReal log_radial_integral(const GeneratorSpec& spec, int M, int t, double a, double b) {
  spec.validate();
  if (!(a > 0.0) || b < 0.0 || t < 0 || M < 1)
    throw DomainError("radial_integral: need a > 0, b >= 0, t >= 0, M >= 1");
  if (!spec.integer_tau()) {
    const QuadratureResult q = radial_integral_quadrature(spec, M, t, a, b);
    return LogReal::from_value(q.value);
  }

  // Substituting y = r^2 a and expanding (y + b)^{tau-1-m} binomially:
  // 1/2 a^{-M/2-t} c e^{-Rb} sum_m C(2t,m) (tau-1)_m (-1)^m R^{2t-m}
  //   sum_l C(j,l) b^{j-l} Gamma(M/2+t+l) R^{-(M/2+t+l)},   j = tau-1-m.
  const int tau1 = static_cast<int>(std::lround(spec.tau)) - 1;
  const double lr = std::log(spec.R);
  const double lb = b > 0.0 ? std::log(b) : 0.0;
  const double half = 0.5 * M + t;
  LogReal sum;
  for (int m = 0; m <= std::min(2 * t, tau1); ++m) {
    const int j = tau1 - m;
    const LogReal outer = falling(spec.tau - 1.0, m) *
                          LogReal::from_log(log_binomial(2 * t, m) + (2 * t - m) * lr,
                                            m % 2 == 0 ? 1 : -1);
    LogReal inner;
    for (int l = 0; l <= j; ++l) {
      if (b == 0.0 && l < j) continue;
      inner += LogReal::from_log(log_binomial(j, l) + (j - l) * lb + std::lgamma(half + l) -
                                 (half + l) * lr);
    }
    sum += outer * inner;
  }
  return sum * LogReal::from_log(-std::log(2.0) - half * std::log(a) +
                                 log_generator_constant(spec) - spec.R * b);
}

double radial_integral(const GeneratorSpec& spec, int M, int t, double a, double b) {
  return log_radial_integral(spec, M, t, a, b).value();
}

QuadratureResult radial_integral_quadrature(const GeneratorSpec& spec, int M, int t, double a,
                                            double b) {
  spec.validate();
  if (!(a > 0.0) || b < 0.0 || t < 0 || M < 1)
    throw DomainError("radial_integral: need a > 0, b >= 0, t >= 0, M >= 1");
  static const bool handler_off = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)handler_off;

  constexpr std::size_t kLimit = 2000;
  GslWorkspace ws(kLimit);
  RadialIntegrand params{&spec, M, t, a, b, true};
  gsl_function f{&radial_integrand, &params};
  QuadratureResult out;
  double abs_err = 0.0;
  int status = gsl_integration_qagiu(&f, 0.0, 0.0, 1e-12, kLimit, ws.ws, &out.abs_integral, &abs_err);
  if (status != GSL_SUCCESS && !(abs_err <= 1e-10 * out.abs_integral))
    throw NumericError(std::string("radial_integral_quadrature: ") + gsl_strerror(status) +
                       " on |integrand|");

  params.absolute = false;
  status = gsl_integration_qagiu(&f, 0.0, 1e-14 * out.abs_integral, 1e-12, kLimit, ws.ws,
                                 &out.value, &out.abs_error);
  out.intervals = static_cast<int>(ws.ws->size);
  if (status != GSL_SUCCESS && !(out.abs_error <= 1e-10 * out.abs_integral))
    throw NumericError(std::string("radial_integral_quadrature: ") + gsl_strerror(status) +
                       " (value " + std::to_string(out.value) + ", error estimate " +
                       std::to_string(out.abs_error) + ", scale " +
                       std::to_string(out.abs_integral) + ")");
  return out;
}

double central_radial_constant(int M, const GeneratorSpec& spec) {
  spec.validate();
  if (M < 1) throw DomainError("central_radial_constant: M must be >= 1");
  return std::exp(std::lgamma(0.5 * M) - std::log(2.0) - 0.5 * M * std::log(std::numbers::pi));
}

}  // namespace qrshape
