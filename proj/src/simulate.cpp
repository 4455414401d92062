#include "qrshape/simulate.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "qrshape/error.hpp"
#include "qrshape/zonal.hpp"

namespace qrshape {

namespace {

Matrix standard_normal(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> z;
  Matrix g(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) g(i, j) = z(rng);
  return g;
}

// r U with U uniform on the sphere in rows*cols coordinates and
// r^2 ~ Gamma(tau - 1 + D/2, rate R).
Matrix radial_direction(Rng& rng, int rows, int cols, const GeneratorSpec& g) {
  Matrix u = standard_normal(rng, rows, cols);
  const double norm = u.norm();
  std::gamma_distribution<double> gamma(g.tau - 1.0 + 0.5 * rows * cols, 1.0 / g.R);
  return u * (std::sqrt(gamma(rng)) / norm);
}

Matrix psd_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

template <class T>
std::vector<T> chunked_draws(long count, std::uint64_t seed, Execution exec,
                             const std::function<T(Rng&)>& draw) {
  if (count < 0) throw DomainError("sample count must be non-negative");
  std::vector<T> out(count);
  for_each_chunk(count, exec, [&](long c, long begin, long end) {
    Rng rng(split_seed(seed, c));
    for (long i = begin; i < end; ++i) out[i] = draw(rng);
  });
  return out;
}

struct GlTable {
  gsl_integration_glfixed_table* t;
  explicit GlTable(int n) : t(gsl_integration_glfixed_table_alloc(n)) {}
  ~GlTable() { gsl_integration_glfixed_table_free(t); }
  GlTable(const GlTable&) = delete;
  GlTable& operator=(const GlTable&) = delete;
};

}  // namespace

LandmarkModel LandmarkModel::isotropic(const Matrix& mu_X, double sigma2, GeneratorSpec generator) {
  const auto N = mu_X.rows(), K = mu_X.cols();
  generator.dimension = static_cast<int>(N * K);
  return {mu_X, sigma2 * Matrix::Identity(N, N), Matrix::Identity(K, K), generator};
}

std::vector<LandmarkConfiguration> sample_elliptical(const LandmarkModel& model, long count,
                                                     std::uint64_t seed, Execution exec) {
  const int N = static_cast<int>(model.mu_X.rows()), K = static_cast<int>(model.mu_X.cols());
  if (model.sigma_X.rows() != N || model.sigma_X.cols() != N)
    throw DimensionError("sample_elliptical: Sigma_X must be N x N");
  if (model.theta.rows() != K || model.theta.cols() != K)
    throw DimensionError("sample_elliptical: Theta must be K x K");
  model.generator.validate();
  const Matrix s_half = psd_sqrt(model.sigma_X);
  const Matrix t_half = pd_sqrt(model.theta);
  auto raw = chunked_draws<Matrix>(count, seed, exec, [&](Rng& rng) {
    return Matrix(model.mu_X + s_half * radial_direction(rng, N, K, model.generator) * t_half);
  });
  std::vector<LandmarkConfiguration> out;
  out.reserve(raw.size());
  for (auto& x : raw) out.emplace_back(std::move(x));
  return out;
}

std::vector<LandmarkConfiguration> sample_model_landmarks(const ModelSpec& spec, long count,
                                                          std::uint64_t seed, Execution exec) {
  spec.validate();
  const Dims& d = spec.dims;
  const Matrix L = helmert_submatrix(d.N);
  const Matrix chol = spec.sigma.matrix(d.N - 1).llt().matrixL();
  const Matrix t_half = spec.theta ? pd_sqrt(*spec.theta) : Matrix::Identity(d.K, d.K);
  const Matrix t_inv_half = spec.theta ? pd_inv_sqrt(*spec.theta) : Matrix::Identity(d.K, d.K);
  const Matrix mean = spec.mu * t_inv_half;
  auto raw = chunked_draws<Matrix>(count, seed, exec, [&](Rng& rng) {
    const Matrix y = mean + chol * radial_direction(rng, d.N - 1, d.K, spec.generator);
    return Matrix(L.transpose() * y * t_half);
  });
  std::vector<LandmarkConfiguration> out;
  out.reserve(raw.size());
  for (auto& x : raw) out.emplace_back(std::move(x));
  return out;
}

std::vector<ShapeCoordinates> sample_shapes(const ModelSpec& spec, long count, std::uint64_t seed,
                                            Execution exec) {
  const auto xs = sample_model_landmarks(spec, count, seed, exec);
  const Matrix theta = spec.theta ? *spec.theta : Matrix::Identity(spec.dims.K, spec.dims.K);
  std::vector<ShapeCoordinates> out(xs.size());
  parallel_for(static_cast<long>(xs.size()), exec,
               [&](long i) { out[i] = extract_shape(xs[i], theta, spec.mode); });
  return out;
}

std::vector<Matrix> sample_stiefel_uniform(int s, int m, long count, std::uint64_t seed,
                                           Execution exec) {
  if (s < 1 || s > m) throw DimensionError("sample_stiefel_uniform: need 1 <= s <= m");
  return chunked_draws<Matrix>(count, seed, exec, [&](Rng& rng) {
    const Matrix g = standard_normal(rng, m, s);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(m, s);
    const Matrix r = qr.matrixQR().topRows(s).triangularView<Eigen::Upper>();
    for (int j = 0; j < s; ++j)
      if (r(j, j) < 0.0) q.col(j) *= -1.0;
    return Matrix(q.transpose());
  });
}

double log_stiefel_volume(int s, int m) {
  if (s < 1 || s > m) throw DimensionError("stiefel volume: need 1 <= s <= m");
  return s * std::log(2.0) + 0.5 * s * m * std::log(std::numbers::pi) -
         log_multivariate_gamma(s, 0.5 * m);
}

McEstimate mc_stiefel_moment(const Matrix& A, int power, int m, long count, std::uint64_t seed,
                             Execution exec) {
  const int s = static_cast<int>(A.cols());
  if (A.rows() != m) throw DimensionError("mc_stiefel_moment: A must be m x s");
  if (power < 0) throw DomainError("mc_stiefel_moment: power must be non-negative");
  if (count < 2) throw DomainError("mc_stiefel_moment: need at least two draws");
  if (s < 1 || s > m) throw DimensionError("mc_stiefel_moment: need 1 <= s <= m");

  struct Sums {
    double sum = 0.0, sumsq = 0.0;
  };
  std::vector<Sums> parts(chunk_count(count));
  for_each_chunk(count, exec, [&](long c, long begin, long end) {
    Rng rng(split_seed(seed, c));
    Sums acc;
    for (long i = begin; i < end; ++i) {
      const Matrix g = standard_normal(rng, m, s);
      Eigen::HouseholderQR<Matrix> qr(g);
      Matrix q = qr.householderQ() * Matrix::Identity(m, s);
      for (int j = 0; j < s; ++j)
        if (qr.matrixQR()(j, j) < 0.0) q.col(j) *= -1.0;
      // tr(A H) with H = q'.
      const double v = std::pow(A.cwiseProduct(q).sum(), power);
      acc.sum += v;
      acc.sumsq += v * v;
    }
    parts[c] = acc;
  });
  Sums total;
  for (const auto& p : parts) {
    total.sum += p.sum;
    total.sumsq += p.sumsq;
  }
  const double n = static_cast<double>(count);
  const double mean = total.sum / n;
  const double var = std::max(0.0, (total.sumsq - n * mean * mean) / (n - 1.0));
  const double vol = std::exp(log_stiefel_volume(s, m));
  return {vol * mean, vol * std::sqrt(var / n), count};
}

double stiefel_moment_closed_form(const Matrix& A, int t, int m) {
  const int s = static_cast<int>(A.cols());
  if (A.rows() != m) throw DimensionError("stiefel_moment_closed_form: A must be m x s");
  if (t < 0) throw DomainError("stiefel_moment_closed_form: t must be non-negative");
  const auto eigs = significant_eigenvalues(A.transpose() * A);
  double half_t = 1.0;  // (1/2)_t
  for (int i = 0; i < t; ++i) half_t *= 0.5 + i;
  double sum = 0.0;
  for (const auto& kappa : partitions_of(t, s))
    sum += zonal_polynomial(kappa, eigs) / gen_pochhammer(0.5 * m, kappa);
  return std::exp(log_stiefel_volume(s, m)) * half_t * sum;
}

DensityCheck mc_density_check(const ModelSpec& spec, int cells_per_angle, long count,
                              std::uint64_t seed, Execution exec, int nodes_per_cell) {
  if (cells_per_angle < 1 || nodes_per_cell < 1 || count < 1)
    throw DomainError("mc_density_check: grid, node and sample counts must be positive");
  const Dims& d = spec.dims;
  const int m = d.m();
  if (m < 1 || m > 4) throw DimensionError("mc_density_check: supports 1 to 4 angles");
  const auto dom = angle_domain(d, spec.mode);
  const int G = cells_per_angle;
  long n_cells = 1;
  for (int k = 0; k < m; ++k) n_cells *= G;

  auto cell_index = [&](long flat) {
    std::vector<int> idx(m);
    for (int k = m - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(flat % G);
      flat /= G;
    }
    return idx;
  };

  const ShapeDensity density(spec);
  GlTable gl(nodes_per_cell);
  long n_nodes = 1;
  for (int k = 0; k < m; ++k) n_nodes *= nodes_per_cell;

  DensityCheck out;
  out.count = count;
  out.cells.resize(n_cells);
  parallel_for(n_cells, exec, [&](long c) {
    const auto idx = cell_index(c);
    double mass = 0.0;
    for (long node = 0; node < n_nodes; ++node) {
      long rest = node;
      ShapeCoordinates w;
      w.u.resize(m);
      w.r = 1.0;
      w.mode = spec.mode;
      w.W = Matrix::Zero(d.N - 1, d.n());
      double weight = 1.0;
      for (int k = m - 1; k >= 0; --k) {
        const int q = static_cast<int>(rest % nodes_per_cell);
        rest /= nodes_per_cell;
        const double h = (dom[k].hi - dom[k].lo) / G;
        const double lo = dom[k].lo + idx[k] * h;
        double x = 0.0, wt = 0.0;
        gsl_integration_glfixed_point(lo, lo + h, q, &x, &wt, gl.t);
        w.u(k) = x;
        weight *= wt;
      }
      w.W = from_polar(w).T;
      mass += weight * std::exp(density(w).log_value);
    }
    out.cells[c].index = idx;
    out.cells[c].probability = mass;
  });

  const auto shapes = sample_shapes(spec, count, seed, exec);
  for (const auto& w : shapes) {
    long flat = 0;
    for (int k = 0; k < m; ++k) {
      const double h = (dom[k].hi - dom[k].lo) / G;
      const int i = std::clamp(static_cast<int>(std::floor((w.u(k) - dom[k].lo) / h)), 0, G - 1);
      flat = flat * G + i;
    }
    ++out.cells[flat].observed;
  }

  const double n = static_cast<double>(count);
  for (auto& cell : out.cells) {
    out.analytic_mass += cell.probability;
    const double p = std::clamp(cell.probability, 0.0, 1.0);
    const double expected = n * p;
    const double sd = std::sqrt(n * p * (1.0 - p));
    cell.z = sd > 0.0 ? (cell.observed - expected) / sd : 0.0;
    if (expected >= 5.0) out.max_abs_z = std::max(out.max_abs_z, std::fabs(cell.z));
  }
  return out;
}

}  // namespace qrshape
