#include "relclock/langevin.hpp"

#include <iomanip>
#include <ostream>

#include "relclock/errors.hpp"
#include "relclock/rates.hpp"
#include "relclock/specfun.hpp"

namespace relclock {

void ModeParams::validate() const {
  if (!std::isfinite(energy_E)) throw DomainError("mode: energy must be finite");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("mode: gamma must be >= 0");
  if (!(nbar >= 0.0) || !std::isfinite(nbar)) throw DomainError("mode: nbar must be >= 0");
}

bool ModeMoments::physical(double tol) const {
  return occupation_n >= -tol && std::abs(anomalous_m) <= occupation_n + 0.5 + tol;
}

ModeMoments mode_evolve_moments(const ModeParams& p, const ModeMoments& m0, double tau) {
  p.validate();
  if (!(tau >= 0.0)) throw DomainError("mode_evolve_moments: tau must be >= 0");
  if (tau == 0.0) return m0;
  const double decay = std::exp(-p.gamma * tau);
  ModeMoments m;
  m.mean_a = std::exp(Complex(-0.5 * p.gamma * tau, -p.energy_E * tau)) * m0.mean_a;
  m.occupation_n = p.nbar + (m0.occupation_n - p.nbar) * decay;
  m.anomalous_m = std::exp(Complex(-p.gamma * tau, -2.0 * p.energy_E * tau)) * m0.anomalous_m;
  // Free part e^{-Gamma tau} plus the noise commutator 1 - e^{-Gamma tau}.
  m.ccr = decay + (1.0 - decay);
  return m;
}

double ccr_defect(const ModeParams& p, double tau) {
  p.validate();
  if (!(tau >= 0.0)) throw DomainError("ccr_defect: tau must be >= 0");
  if (tau == 0.0 || p.gamma == 0.0) return 0.0;
  const double g = p.gamma;
  const auto noise = specfun::integrate_adaptive(
      [&](double t) { return std::exp(-g * (tau - t)); }, 0.0, tau,
      specfun::QuadratureOptions{1e-15, 1e-300, 2000});
  return std::abs(std::exp(-g * tau) + g * noise.value - 1.0);
}

FdrCheck stationary_fdr_check(const ModeParams& p, double beta) {
  p.validate();
  if (!(beta > 0.0)) throw DomainError("stationary_fdr_check: beta must be > 0");
  if (beta == kInf && p.nbar != 0.0) {
    throw DomainError("stationary_fdr_check: beta = inf requires nbar = 0");
  }
  if (p.gamma == 0.0) throw DomainError("stationary_fdr_check: gamma = 0 never relaxes");
  if (!(p.energy_E > 0.0)) throw DomainError("stationary_fdr_check: energy must be > 0");
  const ModeMoments relaxed = mode_evolve_moments(p, ModeMoments{}, 40.0 / p.gamma);
  FdrCheck out;
  out.symmetrized_occupation = relaxed.occupation_n + 0.5;
  out.coth_prediction = beta == kInf ? 0.5 : 0.5 / std::tanh(0.5 * beta * p.energy_E);
  out.deviation = std::abs(out.symmetrized_occupation - out.coth_prediction);
  return out;
}

double smeared_noise_spectrum(const EnvironmentSpec& env, const ClockKernel& kernel, double omega) {
  if (env.rapidity != 0.0) throw DomainError("smeared_noise_spectrum: rapidity must be 0");
  const RateQuery minus(-omega, kernel, env);
  const double a = kappa_tcl(minus);
  const double b = kappa_tcl(minus.with_omega(omega));
  return 0.5 * (a + b);
}

ModeParams mode_params_from_kms(const EnvironmentSpec& env, double energy) {
  env.validate();
  if (!(energy >= env.mass_E)) throw DomainError("mode_params_from_kms: energy below the gap");
  const double down = kappa_markov_kms(env, -energy);
  const double up = kappa_markov_kms(env, energy);
  ModeParams p;
  p.energy_E = energy;
  p.gamma = down - up;
  p.nbar = p.gamma > 0.0 ? up / p.gamma : 0.0;
  return p;
}

void write_moment_csv(std::ostream& out, const ModeParams& p, const ModeMoments& m0,
                      std::span<const double> taus) {
  out << "tau,re_mean,im_mean,n,re_m,im_m,ccr_defect\n";
  out << std::setprecision(17);
  for (double t : taus) {
    const ModeMoments m = mode_evolve_moments(p, m0, t);
    out << t << ',' << m.mean_a.real() << ',' << m.mean_a.imag() << ',' << m.occupation_n << ','
        << m.anomalous_m.real() << ',' << m.anomalous_m.imag() << ',' << ccr_defect(p, t) << '\n';
  }
}

}  // namespace relclock
