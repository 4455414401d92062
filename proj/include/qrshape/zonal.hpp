#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qrshape/geometry.hpp"
#include "qrshape/log_real.hpp"

namespace qrshape {

/// Integer partition (t1 >= t2 >= ... > 0).
struct Partition {
  std::vector<int> parts;

  int weight() const;
  int length() const { return static_cast<int>(parts.size()); }
  /// Conjugate partition.
  Partition conjugate() const;

  friend bool operator==(const Partition&, const Partition&) = default;
  friend auto operator<=>(const Partition&, const Partition&) = default;
};

/// All partitions of t in reverse-lexicographic order: (t), (t-1,1), ...
std::vector<Partition> partitions_of(int t);
/// Partitions of t with at most max_length parts, same order.
std::vector<Partition> partitions_of(int t, int max_length);

/// Generalised Pochhammer symbol (a)_kappa = prod_j (a - (j-1)/2)_{t_j}.
double gen_pochhammer(double a, const Partition& kappa);
LogReal log_gen_pochhammer(double a, const Partition& kappa);

/// Multivariate gamma Gamma_s(a) = pi^{s(s-1)/4} prod_j Gamma(a - (j-1)/2).
double multivariate_gamma(int s, double a);
/// log |Gamma_s(a)|.
double log_multivariate_gamma(int s, double a);

/// Zonal polynomial C_kappa evaluated at the eigenvalues of its argument,
/// normalised so that the sum over partitions of t equals (tr)^t.
///
/// Reference evaluation through the Jack (alpha = 2) branching rule over
/// horizontal strips, one variable at a time.
double zonal_polynomial(const Partition& kappa, std::span<const double> eigs);

struct SeriesControl {
  int max_degree = 400;
  double rel_tol = 1e-10;
};

struct SeriesResult {
  LogReal value;
  int degrees_used = 0;          ///< Highest degree included.
  double last_term_ratio = 0.0;  ///< |last degree contribution| / |sum|.
  bool converged = false;
};

/// Series weight of the factored form degree_factor(t) / (a)_kappa.
///
/// Every noncentral density here has this shape; the Pochhammer divisor is
/// optional (absent means 1).
struct SeriesTermWeight {
  std::function<LogReal(int)> degree_factor;
  std::optional<double> pochhammer_a;
};

/// sum_t sum_{kappa |- t} weight(t, kappa) C_kappa(A), truncated when two
/// consecutive degrees fall below rel_tol * |partial sum|.
SeriesResult weighted_zonal_series(std::span<const double> eigs, const SeriesTermWeight& weight,
                                   const SeriesControl& ctrl = {});
SeriesResult weighted_zonal_series(const Matrix& A, const SeriesTermWeight& weight,
                                   const SeriesControl& ctrl = {});

/// Slow reference with an arbitrary (t, kappa) weight, evaluating each
/// C_kappa independently through zonal_polynomial().
using GeneralTermWeight = std::function<LogReal(int, const Partition&)>;
SeriesResult weighted_zonal_series_reference(std::span<const double> eigs,
                                             const GeneralTermWeight& weight,
                                             const SeriesControl& ctrl = {});

/// Eigenvalues of a symmetric matrix, with |lambda| <= 1e-13 max|lambda| dropped.
std::vector<double> significant_eigenvalues(const Matrix& A);

}  // namespace qrshape
