#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "relclock/common.hpp"
#include "relclock/correlators.hpp"
#include "relclock/gkls.hpp"
#include "relclock/kernels.hpp"

namespace relclock {

struct NoiseField {
  std::vector<double> grid;
  CMatrix samples;            // n_real x n_grid, row r is realization r
  CMatrix target_covariance;  // M_jk = C(t_j - t_k)
  std::size_t clipped_eigenvalues = 0;
  double most_negative_eigenvalue = 0.0;
  std::uint64_t seed = 0;
};

// Circular complex Gaussian samples with E[zeta_j zeta_k^*] = C(t_j - t_k),
// drawn as sqrt(M) xi. Realization r uses its own stream, so results do not
// depend on the thread count. Throws PositivityError when the target's
// minimum eigenvalue is below -1e-8 * max diagonal.
NoiseField sample_colored_noise(const EnvironmentSpec& env, const ClockKernel& kernel,
                                std::span<const double> grid, std::size_t n_real,
                                std::uint64_t seed, double cutoff = 0.0);

// (1/n_real) sum_r zeta_r zeta_r^dagger.
CMatrix sample_covariance(const NoiseField& field);

struct UnravelOptions {
  double dt = 1e-3;
  std::size_t n_traj = 1000;
  std::uint64_t seed = 0;
  std::size_t record_stride = 0;  // steps between recorded times; 0 picks <= 100 intervals
  bool keep_states = false;       // retain every trajectory at the recorded times
};

struct TrajectoryEnsemble {
  std::size_t n_traj = 0;
  std::uint64_t seed = 0;
  std::size_t dim = 0;
  std::vector<double> times;
  std::vector<CMatrix> mean_state;
  // Frobenius standard error of mean_state: sqrt(sum_entries var / n_traj).
  std::vector<double> stat_error;
  // states[k][r]: trajectory r at times[k]; empty unless keep_states.
  std::vector<std::vector<CVector>> states;
};

// Linear Ito unraveling
//   psi += (-i H_eff dt + sum_k sqrt(gamma_k) L_k dxi_k) psi,
//   H_eff = H - (i/2) sum_k gamma_k L_k^dag L_k, E[dxi dxi^*] = dt, E[dxi dxi] = 0,
// with Euler-Maruyama steps (drift applied as exp(-i H_eff dt)). The model's rate block must be diagonal, rho0
// pure, and dt ||H_eff|| <= 0.05 (StepSizeError otherwise).
TrajectoryEnsemble unravel_linear(const GKLSModel& m, const CMatrix& rho0, double t,
                                  const UnravelOptions& options);

struct EnsembleComparison {
  double max_deviation = 0.0;     // max_t ||mean_state - evolve(t)||_F
  double max_sigma_units = 0.0;   // same in units of stat_error
};

EnsembleComparison ensemble_compare(const TrajectoryEnsemble& e, const GKLSModel& m,
                                    const CMatrix& rho0);

// Independent complex increments for n_sites sites of a spatial slice:
// row = sample, column = site, E[dxi dxi^*] = dt, no cross-site correlation.
CMatrix hypersurface_white_increments(std::size_t n_sites, std::size_t n_samples, double dt,
                                      std::uint64_t seed);

// CSV: t, re_rho_ij, im_rho_ij (row-major), trace, stat_error
void write_ensemble_csv(std::ostream& out, const TrajectoryEnsemble& e);

// Binary dump of kept states. Header: "RCTR", uint32 version = 1, uint64
// n_times, n_traj, dim. Then one row per recorded time, each row n_traj * dim
// complex64 values (float32 re, float32 im), all little-endian.
void write_trajectory_dump(const std::filesystem::path& path, const TrajectoryEnsemble& e);

}  // namespace relclock
