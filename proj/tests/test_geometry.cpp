#include <numbers>

#include "qrshape/error.hpp"
#include "support.hpp"

using namespace qrshape;
using namespace qrshape::test;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("Helmert submatrix") {
  const Matrix L2 = helmert_submatrix(2);
  CHECK(L2(0, 0) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(L2(0, 1) == doctest::Approx(-1 / std::sqrt(2.0)));

  const Matrix L3 = helmert_submatrix(3);
  Matrix expect(2, 3);
  expect << 1, -1, 0, 1, 1, -2;
  expect.row(0) /= std::sqrt(2.0);
  expect.row(1) /= std::sqrt(6.0);
  CHECK(max_abs_diff(L3, expect) < 1e-15);

  for (int N : {2, 3, 6, 17}) {
    const Matrix L = helmert_submatrix(N);
    CHECK(L.rows() == N - 1);
    CHECK((L * Vector::Ones(N)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(max_abs_diff(L * L.transpose(), Matrix::Identity(N - 1, N - 1)) < 1e-13);
  }
  CHECK_THROWS_AS(helmert_submatrix(1), DimensionError);
}

TEST_CASE("dimension bookkeeping") {
  const Dims mouse(6, 2);
  CHECK(mouse.n() == 2);
  CHECK(mouse.M() == 10);
  CHECK(mouse.m() == 8);
  CHECK(mouse.pattern_size() == 9);
  const Dims wide(3, 4);
  CHECK(wide.n() == 2);
  CHECK(wide.m() == 2 * 3 - 3 - 1);
  CHECK_THROWS_AS(Dims(1, 2), DimensionError);
  CHECK_THROWS_AS(Dims(3, 0), DimensionError);
  Matrix bad = Matrix::Zero(3, 2);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(LandmarkConfiguration{bad}, DomainError);
}

TEST_CASE("positive definite square root") {
  CHECK(max_abs_diff(pd_sqrt(Matrix::Identity(3, 3)), Matrix::Identity(3, 3)) < 1e-15);
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 4, 9;
  Matrix e = Matrix::Zero(2, 2);
  e.diagonal() << 2, 3;
  CHECK(max_abs_diff(pd_sqrt(d), e) < 1e-14);

  std::mt19937_64 rng(11);
  const Matrix A = random_pd(rng, 4);
  const Matrix s = pd_sqrt(A);
  CHECK(max_abs_diff(s * s, A) < 1e-10 * A.norm());
  CHECK(max_abs_diff(s, s.transpose()) < 1e-12);
  CHECK(max_abs_diff(pd_inv_sqrt(A) * s, Matrix::Identity(4, 4)) < 1e-10);

  Matrix nonsym = A;
  nonsym(0, 1) += 0.5;
  CHECK_THROWS_AS(pd_sqrt(nonsym), DomainError);
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1;
  CHECK_THROWS_AS(pd_sqrt(indefinite), DomainError);
}

TEST_CASE("whitening and centring") {
  std::mt19937_64 rng(12);
  Matrix same(4, 3);
  same.rowwise() = Eigen::RowVector3d(1.5, -2, 0.25);
  CHECK(whiten_and_center(LandmarkConfiguration(same)).cwiseAbs().maxCoeff() < 1e-14);

  const Matrix X = random_matrix(rng, 5, 3);
  CHECK(max_abs_diff(whiten_and_center(LandmarkConfiguration(X)), helmert_submatrix(5) * X) < 1e-14);

  const Matrix theta = random_pd(rng, 3);
  const Eigen::RowVectorXd c = random_matrix(rng, 1, 3);
  const Matrix moved = X + Matrix::Ones(5, 1) * c;
  CHECK(max_abs_diff(whiten_and_center(LandmarkConfiguration(moved), theta),
                     whiten_and_center(LandmarkConfiguration(X), theta)) < 1e-12);
  CHECK_THROWS_AS(whiten_and_center(LandmarkConfiguration(X), Matrix::Identity(2, 2)), DimensionError);
}

TEST_CASE("QR size-and-shape") {
  SUBCASE("identity") {
    const auto r = qr_size_and_shape(Matrix::Identity(3, 3), ReflectionMode::IncludesReflection);
    CHECK(max_abs_diff(r.size_and_shape.T, Matrix::Identity(3, 3)) < 1e-15);
    CHECK(max_abs_diff(r.H, Matrix::Identity(3, 3)) < 1e-15);
  }
  SUBCASE("2 x 2 example") {
    Matrix Y(2, 2);
    Y << 3, 4, 0, 5;
    const auto r = qr_size_and_shape(Y, ReflectionMode::IncludesReflection);
    const Matrix& T = r.size_and_shape.T;
    CHECK(T(0, 0) == doctest::Approx(5.0));
    CHECK(T(0, 1) == 0.0);
    CHECK(T(1, 1) >= 0.0);
    CHECK(max_abs_diff(T * r.H, Y) < 1e-12);
    CHECK(max_abs_diff(r.H * r.H.transpose(), Matrix::Identity(2, 2)) < 1e-14);
  }
  SUBCASE("random shapes, both orientations") {
    std::mt19937_64 rng(13);
    for (auto [rows, K] : {std::pair{5, 2}, {2, 4}, {4, 4}, {7, 3}}) {
      const Matrix Y = random_matrix(rng, rows, K);
      for (auto mode : {ReflectionMode::IncludesReflection, ReflectionMode::ExcludesReflection}) {
        const auto r = qr_size_and_shape(Y, mode);
        const Matrix& T = r.size_and_shape.T;
        const int n = std::min(rows, K);
        CHECK(T.cols() == n);
        CHECK(max_abs_diff(T * r.H, Y) < 1e-10);
        CHECK(T.norm() == doctest::Approx(Y.norm()).epsilon(1e-13));
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) CHECK(T(i, j) == 0.0);
        for (int i = 0; i < std::min(n, K - 1); ++i) CHECK(T(i, i) > 0.0);
        if (mode == ReflectionMode::IncludesReflection) CHECK(T(n - 1, n - 1) > 0.0);
        if (mode == ReflectionMode::ExcludesReflection && n == K)
          CHECK(r.H.determinant() == doctest::Approx(1.0));
      }
    }
  }
  SUBCASE("rank deficiency") {
    Matrix Y(3, 2);
    Y << 1, 2, 2, 4, -1, -2;
    CHECK_THROWS_AS(qr_size_and_shape(Y, ReflectionMode::IncludesReflection),
                    DegenerateConfigurationError);
  }
}

TEST_CASE("polar coordinates") {
  SUBCASE("axis point") {
    Matrix T = Matrix::Zero(3, 2);
    T(0, 0) = 1.0;
    const ShapeCoordinates w = to_polar({T, ReflectionMode::IncludesReflection});
    CHECK(w.r == 1.0);
    CHECK(w.u.size() == 4);
    CHECK(w.u.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("mouse dimensions") {
    std::mt19937_64 rng(14);
    const auto w = extract_shape(LandmarkConfiguration(random_matrix(rng, 6, 2)),
                                 Matrix::Identity(2, 2), ReflectionMode::IncludesReflection);
    CHECK(w.u.size() == 8);
    CHECK(vech(w.W).size() == 9);
    CHECK(w.W.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("round trip") {
    std::mt19937_64 rng(15);
    for (auto [rows, K] : {std::pair{2, 2}, {5, 2}, {4, 3}, {2, 5}}) {
      for (auto mode : {ReflectionMode::IncludesReflection, ReflectionMode::ExcludesReflection}) {
        const auto qr = qr_size_and_shape(random_matrix(rng, rows, K), mode);
        const ShapeCoordinates w = to_polar(qr.size_and_shape);
        const SizeAndShape back = from_polar(w);
        CHECK(max_abs_diff(back.T, qr.size_and_shape.T) < 1e-10 * w.r);
        CHECK(max_abs_diff(w.W * w.r, qr.size_and_shape.T) < 1e-12 * w.r);
        const auto dom = angle_domain(Dims(rows + 1, K), mode);
        for (int k = 0; k < w.u.size(); ++k) {
          CHECK(w.u(k) >= dom[k].lo - 1e-15);
          CHECK(w.u(k) <= dom[k].hi + 1e-15);
        }
      }
    }
  }
  SUBCASE("zero size") {
    CHECK_THROWS_AS(to_polar({Matrix::Zero(2, 2), ReflectionMode::IncludesReflection}), DomainError);
  }
  SUBCASE("vech order") {
    Matrix T(3, 2);
    T << 1, 0, 2, 4, 3, 5;
    Vector v(5);
    v << 1, 2, 3, 4, 5;
    CHECK(max_abs_diff(vech(T), v) == 0.0);
    CHECK(max_abs_diff(unvech(v, 3, 2), T) == 0.0);
    CHECK(diagonal_positions(3, 2) == std::vector<int>{0, 3});
  }
}

TEST_CASE("angle domains") {
  // N = 3, K = 2: theta_1 controls w_11, the last angle the sign of w_22.
  const auto inc = angle_domain(Dims(3, 2), ReflectionMode::IncludesReflection);
  CHECK(inc[0].lo == 0.0);
  CHECK(inc[0].hi == doctest::Approx(pi / 2));
  CHECK(inc[1].lo == 0.0);
  CHECK(inc[1].hi == doctest::Approx(pi));
  const auto exc = angle_domain(Dims(3, 2), ReflectionMode::ExcludesReflection);
  CHECK(exc[1].lo == doctest::Approx(-pi));
  CHECK(exc[1].hi == doctest::Approx(pi));
}

TEST_CASE("polar Jacobian") {
  Vector one(1);
  one << 0.7;
  CHECK(polar_jacobian(one) == 1.0);
  Vector halves = Vector::Constant(5, pi / 2);
  CHECK(polar_jacobian(halves) == doctest::Approx(1.0));
  Vector u(3);
  u << pi / 4, pi / 3, pi / 6;
  CHECK(polar_jacobian(u) == doctest::Approx(0.5 * std::sqrt(3.0) / 2).epsilon(1e-12));
  CHECK(log_polar_jacobian(u) == doctest::Approx(std::log(0.5 * std::sqrt(3.0) / 2)));
  Vector bad(3);
  bad << -0.1, 1, 1;
  CHECK_THROWS_AS(polar_jacobian(bad), DomainError);
}

TEST_CASE("Jacobian matches the Gram determinant of u -> vech W") {
  std::mt19937_64 rng(16);
  for (const Dims d : {Dims(3, 2), Dims(4, 2), Dims(4, 3)}) {
    const ShapeCoordinates w0 = random_shape(rng, d, ReflectionMode::IncludesReflection);
    const int m = d.m();
    Matrix J(m + 1, m);
    const double h = 1e-6;
    for (int k = 0; k < m; ++k) {
      ShapeCoordinates a = w0, b = w0;
      a.u(k) += h;
      b.u(k) -= h;
      J.col(k) = (vech(from_polar(a).T) - vech(from_polar(b).T)) / (2 * h);
    }
    const double gram = std::sqrt((J.transpose() * J).determinant());
    CHECK(rel_err(gram, polar_jacobian(w0.u)) < 1e-6);
  }
}

TEST_CASE("similarity invariances") {
  std::mt19937_64 rng(17);
  const Matrix I2 = Matrix::Identity(2, 2);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix X = random_matrix(rng, 5, 2);
    const auto base = extract_shape(LandmarkConfiguration(X), I2, ReflectionMode::IncludesReflection);

    const Eigen::RowVectorXd c = random_matrix(rng, 1, 2);
    const auto shifted = extract_shape(LandmarkConfiguration(Matrix(X + Matrix::Ones(5, 1) * c)), I2,
                                       ReflectionMode::IncludesReflection);
    CHECK(max_abs_diff(shifted.u, base.u) < 1e-10);

    const Matrix R = random_rotation(rng, 2);
    const auto rotated = qr_size_and_shape(helmert_submatrix(5) * X * R, ReflectionMode::IncludesReflection);
    CHECK(max_abs_diff(rotated.size_and_shape.T, base.W * base.r) < 1e-8);

    const auto scaled = extract_shape(LandmarkConfiguration(Matrix(-3.0 * X)), I2,
                                      ReflectionMode::IncludesReflection);
    CHECK(max_abs_diff(scaled.W, base.W) < 1e-12);
    CHECK(scaled.r == doctest::Approx(3.0 * base.r));

    // Reflection: invisible with reflection included, flips t_KK otherwise.
    Matrix F = I2;
    F(1, 1) = -1;
    const Matrix Y = helmert_submatrix(5) * X;
    const auto e0 = qr_size_and_shape(Y, ReflectionMode::ExcludesReflection);
    const auto e1 = qr_size_and_shape(Y * F, ReflectionMode::ExcludesReflection);
    const auto er = qr_size_and_shape(Y * R, ReflectionMode::ExcludesReflection);
    CHECK(max_abs_diff(er.size_and_shape.T, e0.size_and_shape.T) < 1e-8);
    CHECK(e1.size_and_shape.T(1, 1) == doctest::Approx(-e0.size_and_shape.T(1, 1)));
    CHECK(e1.size_and_shape.T(0, 0) == doctest::Approx(e0.size_and_shape.T(0, 0)));
    const auto i1 = qr_size_and_shape(Y * F, ReflectionMode::IncludesReflection);
    CHECK(max_abs_diff(i1.size_and_shape.T, base.W * base.r) < 1e-8);
  }
}

TEST_CASE("numerical rank") {
  Matrix a(3, 2);
  a << 1, 2, 2, 4, 3, 6;
  CHECK(numerical_rank(a) == 1);
  CHECK(numerical_rank(Matrix::Zero(3, 2)) == 0);
  CHECK(numerical_rank(Matrix::Identity(3, 2)) == 2);
}
