#pragma once

#include <iosfwd>
#include <vector>

#include "relclock/correlators.hpp"
#include "relclock/gkls.hpp"
#include "relclock/kernels.hpp"

namespace relclock {

enum class RateMode { normal_independent, normal_sampled };

// A 1D chain of qubit sites sitting at relational times `heights` on a
// spatial lattice of spacing a. Each site is a qubit with H_S = omega0 sz / 2
// coupled through sigma_-/sigma_+.
struct SliceLattice {
  std::vector<double> heights;
  double spacing = 1.0;
  double omega0 = 3.0;
  RateMode rate_mode = RateMode::normal_independent;

  std::size_t n_sites() const noexcept { return heights.size(); }
  static constexpr std::size_t site_dim = 2;
  // Throws DomainError unless 1 <= n_sites <= 6, a > 0 and every neighbour
  // slope |dtau| < a.
  void validate() const;
};

// Discrete normal rapidity at each site: artanh of the symmetric height
// difference over 2a (one-sided at the ends, 0 for a single site).
std::vector<double> discrete_rapidities(const SliceLattice& l);

// Site generator  c (-i[H_S, .]) + kappa(-omega0 c) D[sigma_-] + kappa(omega0 c) D[sigma_+]
// with c = cosh(eta_site) for normal_sampled and c = 1 otherwise. `factors`
// lists the sites spanning the tensor space (site order = factor order) and
// must contain `site`. Rates are kappa_tcl of `env` and `kernel`.
Superoperator build_slice_generator(const SliceLattice& l, std::size_t site,
                                    const EnvironmentSpec& env, const ClockKernel& kernel,
                                    const std::vector<std::size_t>& factors);
// Generator on the full n_sites tensor space (dimension 4^n_sites).
Superoperator build_slice_generator(const SliceLattice& l, std::size_t site,
                                    const EnvironmentSpec& env, const ClockKernel& kernel);

struct CurlResidual {
  double value = 0.0;
  double commutator_part = 0.0;
  double shape_part_xy = 0.0;
  double shape_part_yx = 0.0;
};

// || [L_x, L_y] + Delta_xy - Delta_yx ||_2 with
// Delta_xy = (L_y(h_x + eps) - L_y(h_x - eps)) / (2 eps). All operands act as
// identity away from sites x and y, so norms are taken on that two-site
// factor; this equals the full-space spectral norm. eps <= 0 uses 1e-4 a.
CurlResidual functional_curl_residual(const SliceLattice& l, std::size_t x, std::size_t y,
                                      const EnvironmentSpec& env, const ClockKernel& kernel,
                                      double eps = 0.0);

enum class RateSource { geometric_normal, comoving_covariant };

// Modes on a grid uniform in rapidity y_j, p_j = m sinh y_j, each evolving as
// d alpha/dt = (-i E_p - Gamma(p)/2) alpha with Gamma(p) = kappa_markov(-E_p)
// of `bath` (which needs m_E < mass for a smooth rate).
struct MomentumGridModel {
  std::vector<double> rapidities;
  std::vector<double> momenta;
  double mass = 1.0;
  std::vector<double> rates;
  RateSource rate_source = RateSource::comoving_covariant;
  EnvironmentSpec bath;
  bool dissipative = true;

  double rate_at(double rapidity) const;
};

// n points on [-y_max, y_max], 2 <= n <= 64.
MomentumGridModel make_momentum_grid(std::size_t n, double y_max, double mass,
                                     const EnvironmentSpec& bath, RateSource source,
                                     bool dissipative = true);

struct BoostResidual {
  // Dissipative part of ||boost o L - L o boost|| / d_eta on the reference
  // state exp(-y^2/2), after subtracting the Gamma = 0 interpolation error.
  double residual = 0.0;
  double raw_residual = 0.0;          // before subtraction
  double hamiltonian_residual = 0.0;  // Gamma = 0 part alone
  // log2(residual on the half-size grid / residual on this grid).
  double refinement_order = 0.0;
  // Grid points whose pre-image y - d_eta falls off the grid (zero padded).
  std::size_t out_of_grid = 0;
};

// Boost = relabeling y -> y + d_eta with Whittaker (sinc) interpolation. For
// comoving_covariant rates the relabeled generator uses Gamma(y - d_eta); for
// geometric_normal the rates stay attached to the fixed normal.
BoostResidual boost_interchange_residual(const MomentumGridModel& m, double d_rapidity = 1e-3);

struct CurlSweepRow {
  double sigma = 0.0;
  double tilt_rapidity = 0.0;
  CurlResidual curl;
};
void write_curl_csv(std::ostream& out, const std::vector<CurlSweepRow>& rows);

struct BoostSweepRow {
  std::size_t grid_size = 0;
  RateSource rate_source = RateSource::comoving_covariant;
  BoostResidual result;
};
void write_boost_csv(std::ostream& out, const std::vector<BoostSweepRow>& rows);

const char* to_string(RateSource s) noexcept;

}  // namespace relclock
