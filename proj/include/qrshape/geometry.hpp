#pragma once

#include <Eigen/Dense>
#include <vector>

namespace qrshape {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ReflectionMode { IncludesReflection, ExcludesReflection };

/// Dimension bookkeeping shared by every shape object.
///
/// N landmarks in K dimensions; n = min(N-1, K) columns of the triangular
/// factor, M = (N-1)K free coordinates after centring, m polar angles.
struct Dims {
  int N = 0;
  int K = 0;

  Dims() = default;
  Dims(int landmarks, int dimensions);

  int n() const { return std::min(N - 1, K); }
  int M() const { return (N - 1) * K; }
  /// Number of non-zero entries in the lower-triangular pattern of T.
  int pattern_size() const { return n() * N - n() * (n() + 1) / 2; }
  int m() const { return pattern_size() - 1; }

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Raw N x K landmark matrix (landmarks in rows).
class LandmarkConfiguration {
 public:
  explicit LandmarkConfiguration(Matrix data);

  const Matrix& data() const { return data_; }
  const Dims& dims() const { return dims_; }

 private:
  Matrix data_;
  Dims dims_;
};

/// Lower-triangular QR size-and-shape factor T, (N-1) x n.
struct SizeAndShape {
  Matrix T;
  ReflectionMode mode = ReflectionMode::IncludesReflection;
};

/// Unit-norm shape W = T / r together with its polar angles.
struct ShapeCoordinates {
  Matrix W;
  Vector u;
  double r = 0.0;
  ReflectionMode mode = ReflectionMode::IncludesReflection;
};

/// Closed interval an angle may take; see angle_domain().
struct AngleInterval {
  double lo;
  double hi;
};

/// Rows 1..N-1 of the Helmert matrix, in the standard ascending order.
Matrix helmert_submatrix(int N);

/// Symmetric positive-definite square root.
Matrix pd_sqrt(const Matrix& theta);
/// Inverse of pd_sqrt(theta).
Matrix pd_inv_sqrt(const Matrix& theta);

/// Y = L X Theta^{-1/2}.
Matrix whiten_and_center(const LandmarkConfiguration& X, const Matrix& theta);
Matrix whiten_and_center(const LandmarkConfiguration& X);

struct QrResult {
  SizeAndShape size_and_shape;
  Matrix H;  ///< n x K, orthonormal rows.
};

/// Y = T H with T lower triangular and the sign convention of `mode`.
/// Throws DegenerateConfigurationError when a pivot is below
/// 1e-12 * ||Y||_F.
QrResult qr_size_and_shape(const Matrix& Y, ReflectionMode mode);

/// Non-zero entries of a lower-triangular (rows x cols) matrix, column by column.
Vector vech(const Matrix& T);
Matrix unvech(const Vector& v, int rows, int cols);
/// Positions (0-based) of the diagonal entries t_ii within vech().
std::vector<int> diagonal_positions(int rows, int cols);

ShapeCoordinates to_polar(const SizeAndShape& T);
SizeAndShape from_polar(const ShapeCoordinates& w);

/// Admissible interval for every angle, given the pattern and reflection mode.
std::vector<AngleInterval> angle_domain(const Dims& dims, ReflectionMode mode);

/// prod_i sin^{m-i}(theta_i), the r-free part of the polar volume element.
double polar_jacobian(const Vector& u);
double log_polar_jacobian(const Vector& u);

/// Full pipeline X -> Y -> (T, H) -> polar shape.
ShapeCoordinates extract_shape(const LandmarkConfiguration& X, const Matrix& theta,
                               ReflectionMode mode);

/// Numerical rank with singular values below rel_tol * max treated as zero.
int numerical_rank(const Matrix& A, double rel_tol = 1e-12);

}  // namespace qrshape
