#pragma once

#include <complex>
#include <vector>

#include "relclock/common.hpp"
#include "relclock/kernels.hpp"

namespace relclock {

// Scalar bath: mass m_E, coupling g, inverse temperature beta (inf = vacuum)
// and the rapidity of the clock normal relative to the bath rest frame.
struct EnvironmentSpec {
  double mass_E = 1.0;
  double coupling_g = 1.0;
  double beta = kInf;
  double rapidity = 0.0;

  bool is_vacuum() const noexcept { return beta == kInf; }
  // Throws DomainError on invalid fields.
  void validate() const;
};

// Default energy cutoff for time-domain correlators, in units of m_E.
inline constexpr double kDefaultCutoffFactor = 40.0;

struct SpectralSlice {
  std::vector<double> energies;
  std::vector<double> j_values;
};

// j(E) = g^2 sqrt(E^2 - m_E^2) / (4 pi^2) for E >= m_E, else 0. This is the
// on-shell measure d^3k / ((2 pi)^3 2 E_k) reduced to energy.
double vacuum_spectral_density(const EnvironmentSpec& env, double energy);

SpectralSlice spectral_slice(const EnvironmentSpec& env, const std::vector<double>& energies);

struct RateWeights {
  double emission = 1.0;    // 1 + n_B(E)
  double absorption = 0.0;  // n_B(E)
};

RateWeights kms_rate_weights(const EnvironmentSpec& env, double energy);

// Smeared Wightman function along the clock direction,
// C(s) = w(s) int_{m_E}^{cutoff} j(E) [(1 + n_B) e^{-iEs} + n_B e^{iEs}] dE.
// The bare correlator is a distribution; a null kernel is rejected.
Complex wightman_timelike(const EnvironmentSpec& env, const ClockKernel* kernel, double s,
                          double cutoff);

inline Complex wightman_timelike(const EnvironmentSpec& env, const ClockKernel& kernel, double s) {
  return wightman_timelike(env, &kernel, s, kDefaultCutoffFactor * env.mass_E);
}

}  // namespace relclock
