#include <cmath>
#include <numbers>

#include "qrshape/error.hpp"
#include "qrshape/generators.hpp"
#include "support.hpp"

using namespace qrshape;
using namespace qrshape::test;

namespace {

// Fourth-order central difference of the (k-1)-th derivative.
double fd_derivative(const GeneratorSpec& g, int k, double y, double h) {
  const auto f = [&](double x) { return generator_derivative(g, k - 1, x); };
  return (-f(y + 2 * h) + 8 * f(y + h) - 8 * f(y - h) + f(y - 2 * h)) / (12 * h);
}

}  // namespace

TEST_CASE("Gaussian generator constant") {
  for (int d : {1, 2, 5, 12}) {
    const auto g = GeneratorSpec::gaussian(d);
    CHECK(log_generator_constant(g) == doctest::Approx(-0.5 * d * std::log(2 * std::numbers::pi)));
    CHECK(generator_value(g, 2.0) ==
          doctest::Approx(std::pow(2 * std::numbers::pi, -0.5 * d) * std::exp(-1.0)));
  }
}

TEST_CASE("generators integrate to one in their own dimension") {
  for (const auto& g : {GeneratorSpec::gaussian(4), GeneratorSpec::kotz(2, 0.5, 6),
                        GeneratorSpec::kotz(3, 0.8, 10), GeneratorSpec::kotz(2.5, 1.3, 3)}) {
    const double surface = 2 * std::pow(std::numbers::pi, 0.5 * g.dimension) / std::tgamma(0.5 * g.dimension);
    const double radial = radial_integral_quadrature(g, g.dimension, 0, 1.0, 0.0).value;
    CHECK(surface * radial == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rel_err(radial, central_radial_constant(g.dimension, g)) < 1e-10);
  }
}

TEST_CASE("Kotz second moment") {
  // E r^2 = (tau - 1 + D/2) / R for r^2 ~ Gamma(tau - 1 + D/2, R).
  const auto g = GeneratorSpec::kotz(3, 0.7, 6);
  const double surface = 2 * std::pow(std::numbers::pi, 3.0) / std::tgamma(3.0);
  const double m2 = surface * radial_integral_quadrature(g, 8, 0, 1.0, 0.0).value;
  CHECK(m2 == doctest::Approx((3 - 1 + 3.0) / 0.7).epsilon(1e-10));
}

TEST_CASE("derivatives agree with finite differences") {
  for (const auto& g : {GeneratorSpec::gaussian(3), GeneratorSpec::kotz(2, 0.5, 4),
                        GeneratorSpec::kotz(3, 0.5, 4), GeneratorSpec::kotz(2.5, 1.1, 2)}) {
    for (int k = 1; k <= 6; ++k) {
      for (double y : {0.5, 2.0, 7.5, 20.0}) {
        const double exact = generator_derivative(g, k, y);
        const double fd = fd_derivative(g, k, y, 1e-3 * std::max(1.0, y));
        CAPTURE(g.tau);
        CAPTURE(k);
        CAPTURE(y);
        CHECK(std::fabs(exact - fd) <= 1e-6 * std::max(1.0, std::fabs(exact)) + 1e-12);
      }
    }
  }
}

TEST_CASE("derivatives at the origin") {
  const auto gauss = GeneratorSpec::gaussian(2);
  CHECK(generator_derivative(gauss, 3, 0.0) == doctest::Approx(std::pow(-0.5, 3) / (2 * std::numbers::pi)));
  // Integer tau: every power of y is non-negative, so h^{(k)}(0) is finite.
  const auto k2 = GeneratorSpec::kotz(2, 0.5, 2);
  const double c = std::exp(log_generator_constant(k2));
  CHECK(generator_derivative(k2, 1, 0.0) == doctest::Approx(c));
  CHECK(generator_derivative(k2, 2, 0.0) == doctest::Approx(2 * c * -0.5));
  CHECK_THROWS_AS(generator_derivative(GeneratorSpec::kotz(1.5, 1.0, 2), 1, 0.0), NumericError);
  CHECK(generator_derivative(GeneratorSpec::kotz(1.5, 1.0, 2), 0, 0.0) == 0.0);
}

TEST_CASE("radial integrals: closed form against quadrature") {
  for (const auto& g : {GeneratorSpec::gaussian(8), GeneratorSpec::kotz(2, 0.5, 8),
                        GeneratorSpec::kotz(3, 0.5, 8), GeneratorSpec::kotz(3, 1.7, 8)}) {
    for (int M : {4, 10}) {
      for (int t = 0; t <= 10; ++t) {
        for (double b : {0.0, 0.8, 6.0}) {
          const double a = 1.3;
          const double closed = radial_integral(g, M, t, a, b);
          const QuadratureResult q = radial_integral_quadrature(g, M, t, a, b);
          CAPTURE(g.tau);
          CAPTURE(M);
          CAPTURE(t);
          CAPTURE(b);
          CHECK(std::fabs(closed - q.value) <= 1e-8 * q.abs_integral);
          if (g.is_gaussian()) CHECK(rel_err(closed, q.value) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("Kotz tau = 2 radial integral vanishes at M/2 - t + bR = 0") {
  const auto g = GeneratorSpec::kotz(2, 0.5, 8);
  const QuadratureResult q = radial_integral_quadrature(g, 4, 5, 1.3, 6.0);
  CHECK(std::fabs(radial_integral(g, 4, 5, 1.3, 6.0)) <= 1e-12 * q.abs_integral);
  CHECK(std::fabs(q.value) <= 1e-10 * q.abs_integral);
}

TEST_CASE("Gaussian radial integral in closed form") {
  const auto g = GeneratorSpec::gaussian(6);
  const double a = 0.9, b = 1.4;
  for (int M : {4, 10})
    for (int t = 0; t <= 10; ++t) {
      const double expect = std::exp(log_generator_constant(g) - 0.5 * b) * std::pow(0.5, 2 * t) * 0.5 *
                            std::tgamma(0.5 * M + t) * std::pow(2.0 / a, 0.5 * M + t);
      CHECK(rel_err(radial_integral(g, M, t, a, b), expect) < 1e-12);
    }
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(GeneratorSpec::kotz(0.5, 1.0, 2).validate(), DomainError);
  CHECK_THROWS_AS(GeneratorSpec::kotz(2, 0.0, 2).validate(), DomainError);
  CHECK_THROWS_AS(GeneratorSpec::kotz(2, 1.0, 0).validate(), DomainError);
  CHECK_THROWS_AS(generator_value(GeneratorSpec::gaussian(1), -1.0), DomainError);
  CHECK_THROWS_AS(radial_integral(GeneratorSpec::gaussian(1), 2, 0, 0.0, 1.0), DomainError);
  CHECK(GeneratorSpec::kotz(3, 0.5, 1).integer_tau());
  CHECK_FALSE(GeneratorSpec::kotz(2.5, 0.5, 1).integer_tau());
  CHECK(GeneratorSpec::gaussian(3).is_gaussian());
}
