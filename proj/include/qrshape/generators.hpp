#pragma once

#include "qrshape/log_real.hpp"

namespace qrshape {

/// Kotz type I density generator h(y) = c y^{tau-1} exp(-R y), normalised in
/// `dimension` real coordinates. The Gaussian is tau = 1, R = 1/2.
struct GeneratorSpec {
  double tau = 1.0;
  double R = 0.5;
  int dimension = 1;

  static GeneratorSpec gaussian(int dimension) { return {1.0, 0.5, dimension}; }
  static GeneratorSpec kotz(double tau, double R, int dimension) { return {tau, R, dimension}; }

  bool is_gaussian() const { return tau == 1.0 && R == 0.5; }
  bool integer_tau() const;
  void validate() const;
};

/// log c, the normalising constant of h in spec.dimension coordinates.
double log_generator_constant(const GeneratorSpec& spec);

double generator_value(const GeneratorSpec& spec, double y);

/// k-th derivative of h. At y = 0 only terms with a non-negative power of y
/// are admissible; otherwise NumericError.
double generator_derivative(const GeneratorSpec& spec, int k, double y);
LogReal log_generator_derivative(const GeneratorSpec& spec, int k, double y);

/// int_0^inf r^{M+2t-1} h^{(2t)}(r^2 a + b) dr.
///
/// Closed form for integer tau; quadrature otherwise.
double radial_integral(const GeneratorSpec& spec, int M, int t, double a, double b);
LogReal log_radial_integral(const GeneratorSpec& spec, int M, int t, double a, double b);

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  double abs_integral = 0.0;  ///< Integral of |integrand|; the scale of the error.
  int intervals = 0;
};

/// Adaptive Gauss-Kronrod on (0, inf) for the same integral; independent of
/// the closed forms.
QuadratureResult radial_integral_quadrature(const GeneratorSpec& spec, int M, int t, double a,
                                            double b);

/// int_0^inf r^{M-1} h(r^2) dr = Gamma(M/2) / (2 pi^{M/2}) for every
/// normalised generator in M coordinates.
double central_radial_constant(int M, const GeneratorSpec& spec);

}  // namespace qrshape
