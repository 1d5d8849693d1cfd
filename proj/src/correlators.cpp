#include "relclock/correlators.hpp"

#include <cmath>
#include <string>

#include "relclock/errors.hpp"
#include "relclock/specfun.hpp"

namespace relclock {

void EnvironmentSpec::validate() const {
  if (!(mass_E > 0.0) || !std::isfinite(mass_E)) throw DomainError("environment: mass_E must be > 0");
  if (!(coupling_g >= 0.0) || !std::isfinite(coupling_g)) {
    throw DomainError("environment: coupling_g must be >= 0");
  }
  if (std::isnan(beta) || beta <= 0.0) throw DomainError("environment: beta must be > 0 or inf");
  if (!std::isfinite(rapidity)) throw DomainError("environment: rapidity must be finite");
}

double vacuum_spectral_density(const EnvironmentSpec& env, double energy) {
  if (std::isnan(energy)) throw DomainError("spectral density: energy is NaN");
  if (energy <= env.mass_E) return 0.0;
  const double m = env.mass_E;
  const double k = std::sqrt((energy - m) * (energy + m));
  return env.coupling_g * env.coupling_g * k / (4.0 * kPi * kPi);
}

SpectralSlice spectral_slice(const EnvironmentSpec& env, const std::vector<double>& energies) {
  SpectralSlice slice;
  slice.energies = energies;
  slice.j_values.reserve(energies.size());
  for (double e : energies) {
    if (e < env.mass_E) throw DomainError("spectral slice: energies must be >= m_E");
    slice.j_values.push_back(vacuum_spectral_density(env, e));
  }
  return slice;
}

RateWeights kms_rate_weights(const EnvironmentSpec& env, double energy) {
  if (!(energy >= env.mass_E)) {
    throw DomainError("kms_rate_weights: energy below the mass gap");
  }
  if (env.is_vacuum()) return {1.0, 0.0};
  const double n = specfun::bose_occupation(energy, env.beta);
  return {1.0 + n, n};
}

Complex wightman_timelike(const EnvironmentSpec& env, const ClockKernel* kernel, double s,
                          double cutoff) {
  env.validate();
  if (kernel == nullptr) {
    throw UnsupportedError(
        "wightman_timelike: the unsmeared Wightman function is a distribution; supply a kernel");
  }
  if (kernel->kind() == KernelKind::tabulated) {
    throw UnsupportedError("wightman_timelike: smearing requires a gaussian or coherent kernel");
  }
  if (!(cutoff > env.mass_E)) throw DomainError("wightman_timelike: cutoff must exceed m_E");
  const double w = kernel->eval(s);
  if (env.coupling_g == 0.0) return {0.0, 0.0};

  const bool thermal = !env.is_vacuum();
  auto weights = [&](double e) -> RateWeights {
    return thermal ? kms_rate_weights(env, e) : RateWeights{};
  };
  // Real part: (1 + 2 n_B) cos(Es); imaginary part: -sin(Es).
  auto re = [&](double e) {
    const RateWeights rw = weights(e);
    return vacuum_spectral_density(env, e) * (rw.emission + rw.absorption) * std::cos(e * s);
  };
  auto im = [&](double e) {
    const RateWeights rw = weights(e);
    return -vacuum_spectral_density(env, e) * (rw.emission - rw.absorption) * std::sin(e * s);
  };
  const double scale = env.coupling_g * env.coupling_g * cutoff * cutoff;
  const specfun::QuadratureOptions opts{1e-12, 1e-14 * scale, 20000};
  const double vr = specfun::integrate_adaptive(re, env.mass_E, cutoff, opts).value;
  const double vi = s == 0.0 ? 0.0 : specfun::integrate_adaptive(im, env.mass_E, cutoff, opts).value;
  return w * Complex(vr, vi);
}

}  // namespace relclock
