#pragma once

#include <doctest.h>

#include <random>

#include "qrshape/geometry.hpp"

namespace qrshape::test {

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

inline double rel_err(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

inline Matrix random_matrix(std::mt19937_64& rng, int r, int c, double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  Matrix m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = z(rng);
  return m;
}

inline Matrix random_pd(std::mt19937_64& rng, int k) {
  const Matrix b = random_matrix(rng, k, k);
  return b * b.transpose() + 0.5 * Matrix::Identity(k, k);
}

inline Matrix random_rotation(std::mt19937_64& rng, int k) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, k, k));
  Matrix q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

/// Interior point of the angle domain, mapped to a unit-size shape.
inline ShapeCoordinates random_shape(std::mt19937_64& rng, const Dims& d, ReflectionMode mode) {
  const auto dom = angle_domain(d, mode);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  ShapeCoordinates w;
  w.u.resize(d.m());
  for (int k = 0; k < d.m(); ++k) w.u(k) = dom[k].lo + u(rng) * (dom[k].hi - dom[k].lo);
  w.r = 1.0;
  w.mode = mode;
  w.W = Matrix::Zero(d.N - 1, d.n());
  w.W = from_polar(w).T;
  return w;
}

}  // namespace qrshape::test
