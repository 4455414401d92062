#pragma once

#include <cstdint>
#include <vector>

#include "qrshape/densities.hpp"
#include "qrshape/kernels.hpp"

namespace qrshape {

/// Matrix elliptical law of the raw landmarks, E_{NxK}(mu_X, Sigma_X, Theta, h)
/// with h normalised in N*K coordinates.
struct LandmarkModel {
  Matrix mu_X;     ///< N x K
  Matrix sigma_X;  ///< N x N, positive semidefinite
  Matrix theta;    ///< K x K, positive definite
  GeneratorSpec generator;

  static LandmarkModel isotropic(const Matrix& mu_X, double sigma2, GeneratorSpec generator);
};

/// X = mu_X + r Sigma_X^{1/2} U Theta^{1/2}, U uniform on the unit sphere in
/// N*K coordinates, r^2 ~ Gamma(tau - 1 + NK/2, rate R).
std::vector<LandmarkConfiguration> sample_elliptical(const LandmarkModel& model, long count,
                                                     std::uint64_t seed,
                                                     Execution exec = Execution::Parallel);

/// Landmarks whose Helmertised, whitened coordinates follow the model exactly:
/// Y = mu Theta^{-1/2} + r C U with C C' = Sigma, U uniform in M coordinates
/// and r^2 ~ Gamma(tau - 1 + M/2, rate R); X = L' Y Theta^{1/2}.
std::vector<LandmarkConfiguration> sample_model_landmarks(const ModelSpec& spec, long count,
                                                          std::uint64_t seed,
                                                          Execution exec = Execution::Parallel);

/// extract_shape() applied to sample_model_landmarks().
std::vector<ShapeCoordinates> sample_shapes(const ModelSpec& spec, long count, std::uint64_t seed,
                                            Execution exec = Execution::Parallel);

/// Uniform (Haar) draws from V_{s,m}, s x m with orthonormal rows.
std::vector<Matrix> sample_stiefel_uniform(int s, int m, long count, std::uint64_t seed,
                                           Execution exec = Execution::Parallel);

/// log Vol(V_{s,m}) = log(2^s pi^{sm/2} / Gamma_s(m/2)).
double log_stiefel_volume(int s, int m);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  long count = 0;
};

/// Vol(V_{s,m}) E[(tr A H)^power] for uniform H in V_{s,m}; A is m x s.
McEstimate mc_stiefel_moment(const Matrix& A, int power, int m, long count, std::uint64_t seed,
                             Execution exec = Execution::Parallel);

/// Zonal closed form of the integral of (tr A H)^{2t} over V_{s,m}.
double stiefel_moment_closed_form(const Matrix& A, int t, int m);

struct DensityCell {
  std::vector<int> index;  ///< Cell position along every angle.
  double probability = 0.0;
  long observed = 0;
  double z = 0.0;
};

struct DensityCheck {
  std::vector<DensityCell> cells;
  double max_abs_z = 0.0;      ///< Over cells with expected count >= 5.
  double analytic_mass = 0.0;  ///< Sum of cell probabilities, ideally 1.
  long count = 0;
};

/// Bins simulated shapes on a tensor grid over the angle domain and compares
/// with Gauss-Legendre cell integrals of the analytic density.
DensityCheck mc_density_check(const ModelSpec& spec, int cells_per_angle, long count,
                              std::uint64_t seed, Execution exec = Execution::Parallel,
                              int nodes_per_cell = 6);

}  // namespace qrshape
