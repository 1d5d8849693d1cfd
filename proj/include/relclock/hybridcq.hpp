#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "relclock/common.hpp"

namespace relclock {

// Classical-quantum kernels for n_lindblad Lindblad operators and
// n_classical classical directions.
struct CQKernels {
  CMatrix d0;  // n_lindblad x n_lindblad, Hermitian PSD
  CMatrix d1;  // n_classical x n_lindblad
  CMatrix d2;  // n_classical x n_classical, Hermitian PSD

  // Throws ConstructionError on shape, Hermiticity or PSD (1e-10) failures.
  void validate() const;
  std::size_t n_lindblad() const noexcept { return static_cast<std::size_t>(d0.rows()); }
  std::size_t n_classical() const noexcept { return static_cast<std::size_t>(d2.rows()); }
};

enum class TradeoffVerdict { satisfied, violated, range_violation };

struct TradeoffReport {
  TradeoffVerdict verdict = TradeoffVerdict::satisfied;
  double margin = 0.0;  // min eigenvalue of 2 d2 - d1 pinv(d0) d1^dagger
  bool range_ok = true;  // d1 (I - pinv(d0) d0) = 0
};

TradeoffReport tradeoff_check(const CQKernels& k);
const char* to_string(TradeoffVerdict v) noexcept;
// {"margin": .., "range_ok": .., "verdict": ".."}
std::string tradeoff_json(const TradeoffReport& r);

// One classical coordinate z. H(z) = h0 + z h1; Lindblad operators are
// z-independent. Generator:
//   dY/dt = -i[H(z), Y] + sum d0_mn (L_m Y L_n^dag - {L_n^dag L_m, Y}/2)
//           - d_z sum_m (d1_m^* L_m Y + d1_m Y L_m^dag) + d2 d_z^2 Y
struct CQModel {
  CMatrix h0;
  CMatrix h1;  // empty means zero
  std::vector<CMatrix> lindblad;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(h0.rows()); }
  CMatrix hamiltonian(double z) const;
  void validate(const CQKernels& k) const;
};

// Uniform cells on [z_min, z_max]; blocks[i] = Y(z_i) dz.
struct HybridState {
  double z_min = 0.0;
  double z_max = 0.0;
  std::vector<double> z_grid;  // cell centres
  std::vector<CMatrix> blocks;

  double cell_width() const noexcept;
  double total_trace() const;
  CMatrix quantum_marginal() const;
  std::vector<double> z_distribution() const;  // Tr(block) per cell
  double min_block_eigenvalue() const;
};

// rho0 times the weight of a Gaussian packet (width <= 0: all weight in the
// cell containing z0).
HybridState make_hybrid_state(double z_min, double z_max, std::size_t n_cells, const CMatrix& rho0,
                              double z0, double width = 0.0);

// Strang splitting: half quantum step, classical step, half quantum step.
// The classical step exponentiates nearest-neighbour jumps with operator
// amplitudes K_+- = a I +- B, a = sqrt(d2)/dz, B = sum_m d1_m^* L_m / (2 sqrt d2),
// which gives central-flux drift and d2 diffusion with zero flux at the
// walls. These jumps already produce the dissipator of
// d1^* d1^T / (2 d2), so the per-cell quantum step uses the rest of d0; that
// rest is PSD exactly when the trade-off holds, making every substep CP.
// With d2 = 0 the drift is a plain central flux. Requires one classical
// direction, dt <= 0.2 dz^2 / d2 and dt ||L_cell|| <= 0.1 (StepSizeError).
// `min_eigenvalue_seen`, when given, receives the lowest block eigenvalue
// over all steps.
HybridState cq_evolve_grid(const CQKernels& k, const CQModel& model, const HybridState& st,
                           double t, double dt, double* min_eigenvalue_seen = nullptr);

struct CQUnravelResult {
  CMatrix marginal_quantum;
  double stat_error = 0.0;
  std::vector<double> z_grid;
  std::vector<double> z_histogram;  // fraction of trajectories per cell
  std::vector<double> z_final;
};

// Continuous-measurement unraveling: the part of d0 along d1 is monitored by
// homodyne detection and the record drives z; the remaining d0 and the extra
// classical noise (2 d2 - d1 pinv(d0) d1^dag) act without measurement. z
// reflects at the walls. Throws PositivityError when the trade-off fails.
CQUnravelResult cq_unravel(const CQKernels& k, const CQModel& model, const CMatrix& rho0, double z0,
                           double z_min, double z_max, std::size_t n_cells, double t, double dt,
                           std::size_t n_traj, std::uint64_t seed);

// CSV: z, trace, re/im block entries (row-major).
void write_hybrid_csv(std::ostream& out, const HybridState& st);

}  // namespace relclock
