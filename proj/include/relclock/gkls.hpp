#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "relclock/common.hpp"
#include "relclock/rates.hpp"

namespace relclock {

// Bohr convention: a jump with label omega satisfies [H_S, L] = omega L, so
// the lowering operator of H_S = w0 sz/2 carries omega = -w0 and is weighted
// by the emission rate kappa(-w0).
struct JumpOperator {
  CMatrix op;
  double omega = 0.0;
  std::size_t alpha = 0;
};

struct GKLSModel {
  CMatrix hamiltonian;         // H_S + H_LS
  CMatrix system_hamiltonian;  // H_S used for the Bohr check; empty means `hamiltonian`
  std::vector<JumpOperator> jumps;
  KossakowskiBlock kossakowski;  // labels aligned with `jumps`

  std::size_t dim() const noexcept { return static_cast<std::size_t>(hamiltonian.rows()); }
  const CMatrix& bohr_reference() const noexcept {
    return system_hamiltonian.size() ? system_hamiltonian : hamiltonian;
  }
  // Throws ConstructionError on a non-Hermitian H, misaligned labels, non-PSD
  // rates, rates coupling distinct Bohr frequencies, or a jump that is not a
  // Bohr eigenoperator.
  void validate() const;
};

// Acts on column-stacked density matrices: vec(A rho B) = (B^T (x) A) vec(rho).
struct Superoperator {
  CMatrix matrix;
  std::size_t dim = 0;

  CMatrix apply(const CMatrix& rho) const;
};

CVector vectorize(const CMatrix& rho);
CMatrix unvectorize(const CVector& v, std::size_t dim);

// -i[H, .] + sum_ab kappa_ab (A_a . A_b^dag - 1/2 {A_b^dag A_a, .}) with no
// structural checks; used for deliberately invalid rate matrices.
Superoperator generator_from_rates(const CMatrix& hamiltonian, std::span<const CMatrix> ops,
                                   const CMatrix& kappa);

Superoperator build_generator(const GKLSModel& m);

struct ChoiVerdict {
  bool completely_positive = false;
  double min_choi_eigenvalue = 0.0;
};

// Choi matrix J = sum_ij |i><j| (x) Phi(|i><j|) of Phi = exp(dt L).
CMatrix choi_matrix(const Superoperator& s, double dt);
// Requires 0 <= dt and dt ||L|| <= 1; cp iff min eigenvalue >= -tol.
ChoiVerdict cp_choi_check(const Superoperator& s, double dt, double tol = 1e-10);

// Throws DomainError unless rho is Hermitian with unit trace to `tol`.
void validate_density(const CMatrix& rho, std::size_t dim, double tol = 1e-12);

CMatrix evolve(const GKLSModel& m, const CMatrix& rho0, double t);
CMatrix evolve(const Superoperator& s, const CMatrix& rho0, double t);

// Frobenius norm of L(rho).
double stationarity_check(const GKLSModel& m, const CMatrix& rho);

CMatrix gibbs_state(const CMatrix& h, double beta);

struct BohrComponent {
  double omega = 0.0;
  CMatrix op;
};

// Components A_omega = sum_{e - e' = omega} P_e A P_e' with [H, A_omega] =
// omega A_omega. Eigenvalues and frequency differences are binned with
// tolerance rel_tol * ||H||. Zero components are dropped.
std::vector<BohrComponent> bohr_decompose(const CMatrix& h, const CMatrix& a,
                                          double rel_tol = 1e-9);

// Model from system couplings A_alpha and a rate density: jumps are the Bohr
// components of every A_alpha, and the block at frequency omega is
// rate(omega) * cross_phases. `lamb_shift` is added to H_S when non-empty.
GKLSModel model_from_couplings(const CMatrix& h_s, std::span<const CMatrix> couplings,
                               const CMatrix& cross_phases,
                               const std::function<double(double)>& rate,
                               const CMatrix& lamb_shift = CMatrix());

// Structured text: dimension, Hamiltonians (row-major "re,im"), jumps, rates.
void write_model(std::ostream& out, const GKLSModel& m);
GKLSModel read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const GKLSModel& m);
GKLSModel load_model(const std::filesystem::path& path);

}  // namespace relclock
