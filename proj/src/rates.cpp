#include "relclock/rates.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "relclock/errors.hpp"
#include "relclock/specfun.hpp"

namespace relclock {

namespace {

// exp(-x^2/2) < 1e-18 for |x| > 9.1; the Gaussian spectral factor is dropped
// beyond this many widths.
constexpr double kGaussianReach = 9.5;
constexpr specfun::QuadratureOptions kRateQuadrature{1e-11, 1e-300, 4000};

double erf_difference(double lo, double hi) {
  if (lo >= 0.0) return std::erfc(lo) - std::erfc(hi);
  if (hi <= 0.0) return std::erfc(-hi) - std::erfc(-lo);
  return std::erf(hi) - std::erf(lo);
}

void require_smooth_kernel(const ClockKernel& k, const char* who) {
  if (k.kind() == KernelKind::tabulated) {
    throw UnsupportedError(std::string(who) +
                           ": tabulated kernels have algebraic spectral tails; use a gaussian or "
                           "coherent_readout kernel");
  }
}

// int j(E) w(E) hat w(omega + sign E) dE for a Gaussian kernel, clock along
// the bath frame. sign = +1: emission line centred at E = -omega; sign = -1:
// absorption line centred at E = omega. `weight` multiplies j(E).
template <typename Weight>
double gaussian_line(const EnvironmentSpec& env, double sigma, double omega, int sign,
                     Weight weight) {
  const double centre = sign > 0 ? -omega : omega;
  const double half = kGaussianReach / sigma;
  const double m = env.mass_E;
  const double lo = std::max(m, centre - half);
  const double hi = std::max(centre, m) + half;
  auto f = [&](double e) {
    return vacuum_spectral_density(env, e) * weight(e) *
           specfun::gaussian_ft(sigma, omega + sign * e);
  };
  return specfun::integrate_adaptive(f, lo, hi, kRateQuadrature).value;
}

// Vacuum Gaussian rate with the clock normal boosted by `rapidity`, from the
// angular average of hat w(omega + E cosh eta - |k| cos(theta) sinh eta). The
// angular integral is done in closed form (erf), the energy integral by
// quadrature.
double gaussian_boosted_vacuum(const EnvironmentSpec& env, double sigma, double omega,
                               double rapidity) {
  const double eta = std::abs(rapidity);
  const double ch = std::cosh(eta);
  const double sh = std::sinh(eta);
  const double m = env.mass_E;
  const double g2 = env.coupling_g * env.coupling_g;
  const double half = kGaussianReach / sigma;
  const double c = -omega;
  // Doppler window: omega + m cosh(y - eta) <= half and omega + m cosh(y + eta) >= -half.
  const double y_lo = std::max(0.0, std::acosh(std::max(1.0, (c - half) / m)) - eta);
  const double y_hi = std::acosh(std::max(1.0, (std::max(c, m) + half) / m)) + eta;
  const double s2 = sigma / std::sqrt(2.0);
  auto f = [&](double e) {
    const double k = std::sqrt(std::max(0.0, (e - m) * (e + m)));
    if (k == 0.0) return 0.0;
    const double a = omega + e * ch;
    const double spread = k * sh;
    // j(E)/k = g^2/(4 pi^2); angular average = pi/(2 k sh) * erf difference.
    return g2 / (8.0 * kPi * sh) * erf_difference(s2 * (a - spread), s2 * (a + spread));
  };
  return specfun::integrate_adaptive(f, m * std::cosh(y_lo), m * std::cosh(y_hi), kRateQuadrature)
      .value;
}

std::vector<double> default_probe_times(const ClockKernel& k) {
  double span = k.width();
  if (k.kind() == KernelKind::coherent_readout) span = std::min(span, 2.0 * kPi / k.omega_c());
  if (k.kind() == KernelKind::tabulated) span = 0.45 * k.support_radius();
  else span *= 4.0;
  std::vector<double> t;
  const int n = 25;
  for (int i = 0; i < n; ++i) t.push_back(-span + 2.0 * span * i / (n - 1));
  return t;
}

}  // namespace

RateQuery::RateQuery(double omega, ClockKernel kernel, EnvironmentSpec env)
    : omega_(omega), kernel_(std::move(kernel)), env_(env) {
  if (!std::isfinite(omega_)) throw DomainError("rate query: omega must be finite");
  env_.validate();
  const auto times = default_probe_times(kernel_);
  const GramVerdict v = positivity_gram_check(kernel_, times, 1e-10);
  if (!v.positive_type) {
    throw PositivityError("rate query: kernel " + kernel_.describe() + " is not of positive type",
                          v.min_eigenvalue);
  }
}

RateQuery::RateQuery(double omega, ClockKernel kernel, EnvironmentSpec env, Trusted)
    : omega_(omega), kernel_(std::move(kernel)), env_(env) {
  if (!std::isfinite(omega_)) throw DomainError("rate query: omega must be finite");
}

RateQuery RateQuery::with_omega(double omega) const { return RateQuery(omega, kernel_, env_, Trusted{}); }

double kappa_tcl_vacuum(const RateQuery& q) {
  const EnvironmentSpec& env = q.env();
  if (!env.is_vacuum()) throw DomainError("kappa_tcl_vacuum: thermal bath, use kappa_tcl_kms");
  require_smooth_kernel(q.kernel(), "kappa_tcl_vacuum");
  if (env.coupling_g == 0.0) return 0.0;
  const ClockKernel& k = q.kernel();
  if (k.kind() == KernelKind::coherent_readout) {
    // Atomic spectrum: sum_n weight_n j(Omega_n - omega). Boost invariant, so
    // the rapidity drops out exactly.
    CompensatedSum sum;
    for (const auto& atom : kernel_spectrum(k).atoms) {
      sum.add(atom.weight * vacuum_spectral_density(env, atom.frequency - q.omega()));
    }
    return sum.value();
  }
  if (env.rapidity != 0.0) {
    return std::max(0.0, gaussian_boosted_vacuum(env, k.sigma(), q.omega(), env.rapidity));
  }
  return gaussian_line(env, k.sigma(), q.omega(), +1, [](double) { return 1.0; });
}

double kappa_markov_vacuum(const EnvironmentSpec& env, double omega) {
  if (!env.is_vacuum()) throw DomainError("kappa_markov_vacuum: thermal bath, use kappa_markov_kms");
  const double m = env.mass_E;
  if (!(omega < -m)) return 0.0;
  return env.coupling_g * env.coupling_g / (2.0 * kPi) * std::sqrt((-omega - m) * (-omega + m));
}

double kappa_tcl_kms(const RateQuery& q) {
  const EnvironmentSpec& env = q.env();
  if (env.is_vacuum()) return kappa_tcl_vacuum(q);
  if (env.rapidity != 0.0) {
    throw UnsupportedError(
        "kappa_tcl_kms: clock normal must be aligned with the medium (rapidity 0) at finite beta");
  }
  require_smooth_kernel(q.kernel(), "kappa_tcl_kms");
  if (env.coupling_g == 0.0) return 0.0;
  const ClockKernel& k = q.kernel();
  auto n_b = [&](double e) { return specfun::bose_occupation(e, env.beta); };
  if (k.kind() == KernelKind::coherent_readout) {
    CompensatedSum sum;
    for (const auto& atom : kernel_spectrum(k).atoms) {
      const double emit = atom.frequency - q.omega();
      const double absorb = q.omega() - atom.frequency;
      if (emit > env.mass_E) sum.add(atom.weight * vacuum_spectral_density(env, emit) * (1.0 + n_b(emit)));
      if (absorb > env.mass_E) sum.add(atom.weight * vacuum_spectral_density(env, absorb) * n_b(absorb));
    }
    return sum.value();
  }
  const double sigma = k.sigma();
  const double emission =
      gaussian_line(env, sigma, q.omega(), +1, [&](double e) { return 1.0 + n_b(e); });
  const double absorption = gaussian_line(env, sigma, q.omega(), -1, n_b);
  return emission + absorption;
}

double kappa_markov_kms(const EnvironmentSpec& env, double omega) {
  env.validate();
  const double a = std::abs(omega);
  if (!(a >= env.mass_E)) return 0.0;
  const double base = 2.0 * kPi * vacuum_spectral_density(env, a);
  if (env.is_vacuum()) return omega < 0.0 ? base : 0.0;
  const double n = specfun::bose_occupation(a, env.beta);
  return omega < 0.0 ? base * (1.0 + n) : base * n;
}

double kappa_tcl(const RateQuery& q) {
  return q.env().is_vacuum() ? kappa_tcl_vacuum(q) : kappa_tcl_kms(q);
}

double kappa_markov(const EnvironmentSpec& env, double omega) {
  return env.is_vacuum() ? kappa_markov_vacuum(env, omega) : kappa_markov_kms(env, omega);
}

double delta_kappa_memory(const RateQuery& q) {
  if (q.env().coupling_g == 0.0) return 0.0;
  return kappa_tcl(q) - kappa_markov(q.env(), q.omega());
}

LambShiftCoefficient lamb_shift_coefficient(const EnvironmentSpec& env, const ClockKernel& kernel,
                                            double cutoff) {
  env.validate();
  if (kernel.kind() != KernelKind::gaussian) {
    throw UnsupportedError("lamb_shift_coefficient: requires a gaussian kernel");
  }
  if (!env.is_vacuum()) throw UnsupportedError("lamb_shift_coefficient: vacuum bath only");
  if (!(cutoff >= 10.0 * env.mass_E)) {
    throw DomainError("lamb_shift_coefficient: cutoff must be >= 10 m_E");
  }
  const double sigma = kernel.sigma();
  const double g2 = env.coupling_g * env.coupling_g;
  LambShiftCoefficient out;
  out.cutoff = cutoff;
  out.analytic_slope = g2 / (2.0 * kPi * kPi);
  if (g2 == 0.0) return out;

  auto integrand = [&](double e) {
    return 2.0 * std::sqrt(2.0) * sigma * vacuum_spectral_density(env, e) *
           specfun::dawson(sigma * e / std::sqrt(2.0));
  };
  const specfun::QuadratureOptions opts{1e-12, 1e-300, 4000};
  // raw(L) at L_i in [cutoff/2, cutoff], accumulated segment by segment.
  const int n_fit = 11;
  std::vector<double> xs(n_fit);
  std::vector<double> ys(n_fit);
  double acc = specfun::integrate_adaptive(integrand, env.mass_E, 0.5 * cutoff, opts).value;
  for (int i = 0; i < n_fit; ++i) {
    xs[i] = 0.5 * cutoff * (1.0 + static_cast<double>(i) / (n_fit - 1));
    if (i > 0) acc += specfun::integrate_adaptive(integrand, xs[i - 1], xs[i], opts).value;
    ys[i] = acc;
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n_fit;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n_fit;
  double sxy = 0.0;
  double sxx = 0.0;
  for (int i = 0; i < n_fit; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  out.raw_value = ys.back();
  out.fitted_slope = sxy / sxx;
  out.subtracted_value = out.raw_value - out.fitted_slope * cutoff;
  return out;
}

Complex odd_transform_quadrature(double sigma, double omega) {
  if (!(sigma > 0.0)) throw DomainError("odd transform: sigma must be > 0");
  // -2i int_0^inf exp(-s^2/(2 sigma^2)) sin(Omega s) ds
  const double reach = sigma * std::sqrt(2.0 * 45.0);
  auto f = [&](double s) { return std::exp(-0.5 * s * s / (sigma * sigma)) * std::sin(omega * s); };
  const auto r = specfun::integrate_adaptive(f, 0.0, reach,
                                             specfun::QuadratureOptions{1e-13, 1e-15 * sigma, 4000});
  return {0.0, -2.0 * r.value};
}

Complex odd_transform_closed(double sigma, double omega) {
  if (!(sigma > 0.0)) throw DomainError("odd transform: sigma must be > 0");
  return {0.0, -2.0 * std::sqrt(2.0) * sigma * specfun::dawson(sigma * omega / std::sqrt(2.0))};
}

KossakowskiBlock assemble_kossakowski(std::span<const RateQuery> queries,
                                      const CMatrix& cross_phases) {
  if (queries.empty()) throw ConstructionError("assemble_kossakowski: no queries");
  const auto nc = cross_phases.rows();
  if (nc == 0 || cross_phases.cols() != nc) {
    throw ConstructionError("assemble_kossakowski: cross_phases must be square and non-empty");
  }
  if (hermiticity_defect(cross_phases) > 1e-12 * std::max(1.0, cross_phases.cwiseAbs().maxCoeff())) {
    throw ConstructionError("assemble_kossakowski: cross_phases not Hermitian");
  }
  const double tr = cross_phases.trace().real();
  const double min_eig = min_hermitian_eigenvalue(cross_phases);
  if (min_eig < -1e-12 * std::max(1.0, std::abs(tr))) {
    std::ostringstream msg;
    msg << "assemble_kossakowski: cross_phases not PSD (min eigenvalue " << min_eig << ")";
    throw ConstructionError(msg.str());
  }
  const auto& env0 = queries.front().env();
  const std::string k0 = queries.front().kernel().describe();
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& e = queries[i].env();
    if (e.mass_E != env0.mass_E || e.coupling_g != env0.coupling_g || e.beta != env0.beta ||
        e.rapidity != env0.rapidity || queries[i].kernel().describe() != k0) {
      throw ConstructionError("assemble_kossakowski: queries must share kernel and environment");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (queries[j].omega() == queries[i].omega()) {
        throw ConstructionError("assemble_kossakowski: duplicate omega label");
      }
    }
  }
  const auto nq = static_cast<Eigen::Index>(queries.size());
  KossakowskiBlock block;
  block.matrix = CMatrix::Zero(nq * nc, nq * nc);
  for (Eigen::Index q = 0; q < nq; ++q) {
    const double rate = kappa_tcl(queries[static_cast<std::size_t>(q)]);
    for (Eigen::Index a = 0; a < nc; ++a) {
      block.labels.push_back({static_cast<std::size_t>(a), queries[static_cast<std::size_t>(q)].omega()});
    }
    block.matrix.block(q * nc, q * nc, nc, nc) = rate * cross_phases;
  }
  block.matrix = 0.5 * (block.matrix + block.matrix.adjoint()).eval();
  block.psd_margin = min_hermitian_eigenvalue(block.matrix);
  return block;
}

}  // namespace relclock
