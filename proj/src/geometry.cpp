#include "qrshape/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qrshape/error.hpp"

namespace qrshape {

namespace {

constexpr double kRankTol = 1e-12;
constexpr double kSymTol = 1e-10;
constexpr double kAngleSlack = 1e-12;

Eigen::SelfAdjointEigenSolver<Matrix> checked_eigen(const Matrix& theta) {
  if (theta.rows() != theta.cols() || theta.rows() == 0)
    throw DimensionError("pd_sqrt: matrix must be square and non-empty");
  if (!theta.allFinite()) throw DomainError("pd_sqrt: non-finite entries");
  const double scale = std::max(1.0, theta.cwiseAbs().maxCoeff());
  if ((theta - theta.transpose()).cwiseAbs().maxCoeff() > kSymTol * scale)
    throw DomainError("pd_sqrt: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(theta);
  if (es.info() != Eigen::Success) throw NumericError("pd_sqrt: eigensolver failed");
  const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
  if (es.eigenvalues().minCoeff() <= kRankTol * lmax)
    throw DomainError("pd_sqrt: matrix is not positive definite");
  return es;
}

}  // namespace

Dims::Dims(int landmarks, int dimensions) : N(landmarks), K(dimensions) {
  if (N < 2 || K < 1)
    throw DimensionError("need N >= 2 landmarks and K >= 1 dimensions, got N=" +
                         std::to_string(N) + ", K=" + std::to_string(K));
}

LandmarkConfiguration::LandmarkConfiguration(Matrix data)
    : data_(std::move(data)), dims_(static_cast<int>(data_.rows()), static_cast<int>(data_.cols())) {
  if (!data_.allFinite()) throw DomainError("landmark configuration has non-finite entries");
}

Matrix helmert_submatrix(int N) {
  if (N < 2) throw DimensionError("helmert_submatrix: N must be >= 2");
  Matrix L = Matrix::Zero(N - 1, N);
  for (int i = 1; i < N; ++i) {
    const double c = 1.0 / std::sqrt(static_cast<double>(i) * (i + 1));
    L.row(i - 1).head(i).setConstant(c);
    L(i - 1, i) = -i * c;
  }
  return L;
}

Matrix pd_sqrt(const Matrix& theta) {
  const auto es = checked_eigen(theta);
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

Matrix pd_inv_sqrt(const Matrix& theta) {
  const auto es = checked_eigen(theta);
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

Matrix whiten_and_center(const LandmarkConfiguration& X, const Matrix& theta) {
  const Dims& d = X.dims();
  if (theta.rows() != d.K || theta.cols() != d.K)
    throw DimensionError("whiten_and_center: Theta must be K x K");
  return helmert_submatrix(d.N) * X.data() * pd_inv_sqrt(theta);
}

Matrix whiten_and_center(const LandmarkConfiguration& X) {
  return helmert_submatrix(X.dims().N) * X.data();
}

QrResult qr_size_and_shape(const Matrix& Y, ReflectionMode mode) {
  const int rows = static_cast<int>(Y.rows());
  const int K = static_cast<int>(Y.cols());
  if (rows < 1 || K < 1) throw DimensionError("qr_size_and_shape: empty matrix");
  const int n = std::min(rows, K);

  // LQ factorisation of Y through the QR factorisation of Y'.
  Eigen::HouseholderQR<Matrix> qr(Y.transpose());
  Matrix Q = qr.householderQ() * Matrix::Identity(K, n);
  Matrix R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();

  const double tol = kRankTol * Y.norm();
  for (int i = 0; i < n; ++i) {
    if (std::fabs(R(i, i)) <= tol)
      throw DegenerateConfigurationError("qr_size_and_shape: configuration is rank deficient (pivot " +
                                         std::to_string(i + 1) + ")");
    if (R(i, i) < 0) {
      R.row(i) *= -1.0;
      Q.col(i) *= -1.0;
    }
  }

  QrResult out;
  out.size_and_shape.T = R.transpose();
  out.size_and_shape.mode = mode;
  out.H = Q.transpose();

  // Only a square H can carry a reflection; fold it into the sign of t_KK.
  if (mode == ReflectionMode::ExcludesReflection && n == K && out.H.determinant() < 0) {
    out.H.row(K - 1) *= -1.0;
    out.size_and_shape.T.col(K - 1) *= -1.0;
  }
  return out;
}

Vector vech(const Matrix& T) {
  const int rows = static_cast<int>(T.rows());
  const int cols = static_cast<int>(T.cols());
  Vector v(cols * rows - cols * (cols - 1) / 2);
  int k = 0;
  for (int j = 0; j < cols; ++j)
    for (int i = j; i < rows; ++i) v(k++) = T(i, j);
  return v;
}

Matrix unvech(const Vector& v, int rows, int cols) {
  if (v.size() != cols * rows - cols * (cols - 1) / 2)
    throw DimensionError("unvech: vector length does not match the triangular pattern");
  Matrix T = Matrix::Zero(rows, cols);
  int k = 0;
  for (int j = 0; j < cols; ++j)
    for (int i = j; i < rows; ++i) T(i, j) = v(k++);
  return T;
}

std::vector<int> diagonal_positions(int rows, int cols) {
  std::vector<int> pos;
  int k = 0;
  for (int j = 0; j < cols; ++j) {
    pos.push_back(k);
    k += rows - j;
  }
  return pos;
}

ShapeCoordinates to_polar(const SizeAndShape& T) {
  const Vector x = vech(T.T);
  const double r = x.norm();
  if (!(r > 0.0)) throw DomainError("to_polar: zero size");
  const int m = static_cast<int>(x.size()) - 1;

  ShapeCoordinates w;
  w.W = T.T / r;
  w.r = r;
  w.mode = T.mode;
  w.u.resize(m);
  if (m == 0) return w;

  Vector tail(m + 1);
  double acc = 0.0;
  for (int k = m; k >= 0; --k) {
    acc += x(k) * x(k);
    tail(k) = std::sqrt(acc);
  }
  for (int k = 0; k < m - 1; ++k) w.u(k) = std::atan2(tail(k + 1), x(k));
  w.u(m - 1) = std::atan2(x(m), x(m - 1));
  return w;
}

SizeAndShape from_polar(const ShapeCoordinates& w) {
  const int rows = static_cast<int>(w.W.rows());
  const int cols = static_cast<int>(w.W.cols());
  const int m = static_cast<int>(w.u.size());
  if (m + 1 != cols * rows - cols * (cols - 1) / 2)
    throw DimensionError("from_polar: angle count does not match the shape pattern");
  if (!(w.r > 0.0)) throw DomainError("from_polar: size must be positive");
  Vector x(m + 1);
  double s = w.r;
  for (int k = 0; k < m; ++k) {
    x(k) = s * std::cos(w.u(k));
    s *= std::sin(w.u(k));
  }
  x(m) = s;
  return {unvech(x, rows, cols), w.mode};
}

std::vector<AngleInterval> angle_domain(const Dims& dims, ReflectionMode mode) {
  constexpr double pi = std::numbers::pi;
  const int m = dims.m();
  const int n = dims.n();
  std::vector<AngleInterval> dom(m, AngleInterval{0.0, pi});
  if (m == 0) return dom;
  dom[m - 1] = {-pi, pi};

  const auto diag = diagonal_positions(dims.N - 1, n);
  int constrained = std::min(n, dims.K - 1);
  if (mode == ReflectionMode::IncludesReflection && n == dims.K) constrained = n;
  for (int i = 0; i < constrained; ++i) {
    const int pos = diag[i];
    if (pos < m - 1)
      dom[pos] = {0.0, pi / 2};
    else if (pos == m - 1)
      dom[m - 1] = {-pi / 2, pi / 2};
    else
      dom[m - 1] = {0.0, pi};
  }
  return dom;
}

double log_polar_jacobian(const Vector& u) {
  constexpr double pi = std::numbers::pi;
  const int m = static_cast<int>(u.size());
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const double lo = i + 1 < m ? 0.0 : -pi;
    if (!(u(i) >= lo - kAngleSlack && u(i) <= pi + kAngleSlack))
      throw DomainError("polar_jacobian: angle " + std::to_string(i + 1) + " outside its domain");
    const int power = m - 1 - i;
    if (power > 0) acc += power * std::log(std::sin(u(i)));
  }
  return acc;
}

double polar_jacobian(const Vector& u) { return std::exp(log_polar_jacobian(u)); }

ShapeCoordinates extract_shape(const LandmarkConfiguration& X, const Matrix& theta,
                               ReflectionMode mode) {
  return to_polar(qr_size_and_shape(whiten_and_center(X, theta), mode).size_and_shape);
}

int numerical_rank(const Matrix& A, double rel_tol) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++rank;
  return rank;
}

}  // namespace qrshape
