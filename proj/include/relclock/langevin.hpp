#pragma once

#include <iosfwd>
#include <span>

#include "relclock/common.hpp"
#include "relclock/correlators.hpp"
#include "relclock/kernels.hpp"

namespace relclock {

// Mode a_p with da/dtau = -(Gamma/2 + iE) a + F, [F(t), F^dag(t')] = Gamma delta(t - t')
// and input-noise occupation nbar.
struct ModeParams {
  double energy_E = 1.0;
  double gamma = 0.0;
  double nbar = 0.0;

  void validate() const;
};

struct ModeMoments {
  Complex mean_a{0.0, 0.0};
  double occupation_n = 0.0;     // <a^dag a>
  Complex anomalous_m{0.0, 0.0};  // <a a>
  double ccr = 1.0;               // <[a, a^dag]>

  bool physical(double tol = 1e-12) const;
};

ModeMoments mode_evolve_moments(const ModeParams& p, const ModeMoments& m0, double tau);

// |e^{-Gamma tau} + Gamma int_0^tau e^{-Gamma (tau - t)} dt - 1| with the
// integral done by quadrature.
double ccr_defect(const ModeParams& p, double tau);

struct FdrCheck {
  double symmetrized_occupation = 0.0;  // <{a, a^dag}>/2 after Gamma tau = 40
  double coth_prediction = 0.0;         // coth(beta E / 2) / 2
  double deviation = 0.0;
};

FdrCheck stationary_fdr_check(const ModeParams& p, double beta);

// Fourier transform of the symmetrized smeared noise correlator,
// (kappa_tcl(-Omega) + kappa_tcl(Omega)) / 2. Requires rapidity 0.
double smeared_noise_spectrum(const EnvironmentSpec& env, const ClockKernel& kernel, double omega);

// Markov-limit mode parameters at energy E: net damping
// Gamma = K(-E) - K(+E) and nbar = K(+E) / Gamma (detailed balance gives n_B).
ModeParams mode_params_from_kms(const EnvironmentSpec& env, double energy);

// CSV: tau, re_mean, im_mean, n, re_m, im_m, ccr_defect
void write_moment_csv(std::ostream& out, const ModeParams& p, const ModeMoments& m0,
                      std::span<const double> taus);

}  // namespace relclock
