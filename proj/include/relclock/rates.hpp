#pragma once

#include <span>
#include <vector>

#include "relclock/common.hpp"
#include "relclock/correlators.hpp"
#include "relclock/kernels.hpp"

namespace relclock {

// Arguments of a smeared rate density kappa(omega). Construction validates
// the environment and certifies the kernel as positive type on a grid that
// resolves its width; failure throws PositivityError.
class RateQuery {
 public:
  RateQuery(double omega, ClockKernel kernel, EnvironmentSpec env);

  double omega() const noexcept { return omega_; }
  const ClockKernel& kernel() const noexcept { return kernel_; }
  const EnvironmentSpec& env() const noexcept { return env_; }

  RateQuery with_omega(double omega) const;

 private:
  struct Trusted {};
  RateQuery(double omega, ClockKernel kernel, EnvironmentSpec env, Trusted);

  double omega_;
  ClockKernel kernel_;
  EnvironmentSpec env_;
};

struct KossakowskiLabel {
  std::size_t alpha = 0;
  double omega = 0.0;
};

// Hermitian block of rate densities kappa_{alpha beta}(omega) with its
// minimum eigenvalue.
struct KossakowskiBlock {
  std::vector<KossakowskiLabel> labels;
  CMatrix matrix;
  double psd_margin = 0.0;
};

struct LambShiftCoefficient {
  double raw_value = 0.0;         // cutoff dependent
  double cutoff = 0.0;
  double subtracted_value = 0.0;  // raw minus the fitted linear-in-cutoff growth
  double fitted_slope = 0.0;      // d raw / d cutoff over [cutoff/2, cutoff]
  double analytic_slope = 0.0;    // g^2 / (2 pi^2) from D(z) ~ 1/(2z)
};

// Vacuum TCL rate: int j(E) <hat w(omega + k.n)>_angles dE. At rapidity 0 this
// is int j(E) hat w(omega + E) dE. Throws DomainError for a thermal bath.
double kappa_tcl_vacuum(const RateQuery& q);

// g^2/(2 pi) sqrt(omega^2 - m_E^2) for omega < -m_E, exactly 0 otherwise.
double kappa_markov_vacuum(const EnvironmentSpec& env, double omega);

// Thermal TCL rate with the clock comoving with the bath:
// int j(E) [(1 + n_B) hat w(omega + E) + n_B hat w(omega - E)] dE.
// Reduces to kappa_tcl_vacuum at beta = inf. Nonzero rapidity with finite
// beta throws UnsupportedError.
double kappa_tcl_kms(const RateQuery& q);

// 2 pi j(|omega|) (1 + n_B) for omega <= -m_E, 2 pi j(|omega|) n_B for
// omega >= m_E, 0 inside the gap. Satisfies K(omega) = e^{-beta omega} K(-omega).
double kappa_markov_kms(const EnvironmentSpec& env, double omega);

// Dispatch on the bath: vacuum or KMS.
double kappa_tcl(const RateQuery& q);
double kappa_markov(const EnvironmentSpec& env, double omega);

// kappa_tcl - kappa_markov: the (w - 1) memory correction.
double delta_kappa_memory(const RateQuery& q);

// Lamb-shift coefficient 2 sqrt(2) sigma int_{m_E}^{cutoff} j(E) D(sigma E / sqrt 2) dE
// for a Gaussian kernel in vacuum. The magnitude is reported; the operator
// sign (-i times the odd transform) is a packaging convention.
LambShiftCoefficient lamb_shift_coefficient(const EnvironmentSpec& env, const ClockKernel& kernel,
                                            double cutoff);

// int sgn(s) exp(-s^2/(2 sigma^2)) exp(-i Omega s) ds by quadrature.
Complex odd_transform_quadrature(double sigma, double omega);
// -i 2 sqrt(2) sigma D(sigma Omega / sqrt 2).
Complex odd_transform_closed(double sigma, double omega);

// Block kappa_{(alpha,omega),(beta,omega')} = F_alpha F_beta^* kappa(omega)
// delta_{omega omega'}. `cross_phases` is the Gram matrix F F^dagger and must
// be Hermitian PSD; queries must share kernel and environment and have
// distinct omegas.
KossakowskiBlock assemble_kossakowski(std::span<const RateQuery> queries,
                                      const CMatrix& cross_phases);

}  // namespace relclock
