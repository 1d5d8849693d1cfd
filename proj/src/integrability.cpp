#include "relclock/integrability.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "relclock/errors.hpp"
#include "relclock/rates.hpp"

namespace relclock {

namespace {

CMatrix sigma_minus() {
  CMatrix m = CMatrix::Zero(2, 2);
  m(1, 0) = 1.0;  // |g><e| in the (|e>, |g>) basis
  return m;
}

CMatrix sigma_z() {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

// op on `site`, identity on the other listed factors.
CMatrix embed(const CMatrix& op, std::size_t site, const std::vector<std::size_t>& factors) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (std::size_t f : factors) {
    out = kron(out, f == site ? op : CMatrix(CMatrix::Identity(2, 2)));
  }
  return out;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

void SliceLattice::validate() const {
  if (heights.empty() || heights.size() > 6) throw DomainError("SliceLattice: need 1..6 sites");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw DomainError("SliceLattice: spacing must be > 0");
  if (!std::isfinite(omega0)) throw DomainError("SliceLattice: omega0 must be finite");
  for (double h : heights) {
    if (!std::isfinite(h)) throw DomainError("SliceLattice: heights must be finite");
  }
  for (std::size_t i = 0; i + 1 < heights.size(); ++i) {
    if (!(std::abs(heights[i + 1] - heights[i]) < spacing)) {
      throw DomainError("SliceLattice: neighbouring heights differ by >= a (non-timelike normal)");
    }
  }
}

std::vector<double> discrete_rapidities(const SliceLattice& l) {
  l.validate();
  const auto& h = l.heights;
  const std::size_t n = h.size();
  std::vector<double> eta(n, 0.0);
  if (n == 1) return eta;
  for (std::size_t i = 0; i < n; ++i) {
    double slope;
    if (i == 0) {
      slope = (h[1] - h[0]) / l.spacing;
    } else if (i == n - 1) {
      slope = (h[n - 1] - h[n - 2]) / l.spacing;
    } else {
      slope = (h[i + 1] - h[i - 1]) / (2.0 * l.spacing);
    }
    eta[i] = std::atanh(slope);
  }
  return eta;
}

Superoperator build_slice_generator(const SliceLattice& l, std::size_t site,
                                    const EnvironmentSpec& env, const ClockKernel& kernel,
                                    const std::vector<std::size_t>& factors) {
  l.validate();
  if (site >= l.n_sites()) throw DomainError("build_slice_generator: site out of range");
  if (std::find(factors.begin(), factors.end(), site) == factors.end()) {
    throw DomainError("build_slice_generator: factors must include the site");
  }
  for (std::size_t f : factors) {
    if (f >= l.n_sites()) throw DomainError("build_slice_generator: factor out of range");
  }
  const double lapse =
      l.rate_mode == RateMode::normal_sampled ? std::cosh(discrete_rapidities(l)[site]) : 1.0;
  const double w = l.omega0 * lapse;
  const RateQuery q(-w, kernel, env);
  const double down = kappa_tcl(q);
  const double up = kappa_tcl(q.with_omega(w));

  const CMatrix h = embed(0.5 * w * sigma_z(), site, factors);
  const CMatrix sm = sigma_minus();
  const std::vector<CMatrix> ops{embed(sm, site, factors), embed(sm.adjoint(), site, factors)};
  CMatrix k = CMatrix::Zero(2, 2);
  k(0, 0) = down;
  k(1, 1) = up;
  return generator_from_rates(h, ops, k);
}

Superoperator build_slice_generator(const SliceLattice& l, std::size_t site,
                                    const EnvironmentSpec& env, const ClockKernel& kernel) {
  std::vector<std::size_t> all(l.n_sites());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return build_slice_generator(l, site, env, kernel, all);
}

CurlResidual functional_curl_residual(const SliceLattice& l, std::size_t x, std::size_t y,
                                      const EnvironmentSpec& env, const ClockKernel& kernel,
                                      double eps) {
  l.validate();
  if (x == y) throw DomainError("functional_curl_residual: x and y must differ");
  if (x >= l.n_sites() || y >= l.n_sites()) throw DomainError("functional_curl_residual: site out of range");
  if (eps <= 0.0) eps = 1e-4 * l.spacing;
  const std::vector<std::size_t> factors{std::min(x, y), std::max(x, y)};

  auto gen = [&](const SliceLattice& lat, std::size_t site) {
    return build_slice_generator(lat, site, env, kernel, factors).matrix;
  };
  // d L_target / d h_moved by central difference
  auto shape = [&](std::size_t moved, std::size_t target) -> CMatrix {
    SliceLattice plus = l, minus = l;
    plus.heights[moved] += eps;
    minus.heights[moved] -= eps;
    return (gen(plus, target) - gen(minus, target)) / (2.0 * eps);
  };

  const CMatrix lx = gen(l, x);
  const CMatrix ly = gen(l, y);
  const CMatrix c = commutator(lx, ly);
  const CMatrix dxy = shape(x, y);
  const CMatrix dyx = shape(y, x);
  CurlResidual r;
  r.commutator_part = spectral_norm(c);
  r.shape_part_xy = spectral_norm(dxy);
  r.shape_part_yx = spectral_norm(dyx);
  r.value = spectral_norm(c + dxy - dyx);
  return r;
}

double MomentumGridModel::rate_at(double rapidity) const {
  if (!dissipative) return 0.0;
  return kappa_markov(bath, -mass * std::cosh(rapidity));
}

MomentumGridModel make_momentum_grid(std::size_t n, double y_max, double mass,
                                     const EnvironmentSpec& bath, RateSource source,
                                     bool dissipative) {
  if (n < 2 || n > 64) throw DomainError("make_momentum_grid: grid size must be 2..64");
  if (!(y_max > 0.0) || !(mass > 0.0)) throw DomainError("make_momentum_grid: y_max and mass must be > 0");
  bath.validate();
  MomentumGridModel m;
  m.mass = mass;
  m.bath = bath;
  m.rate_source = source;
  m.dissipative = dissipative;
  for (std::size_t j = 0; j < n; ++j) {
    const double y = -y_max + 2.0 * y_max * static_cast<double>(j) / static_cast<double>(n - 1);
    m.rapidities.push_back(y);
    m.momenta.push_back(mass * std::sinh(y));
    m.rates.push_back(m.rate_at(y));
  }
  return m;
}

namespace {

struct RawBoost {
  double full = 0.0;
  double ham = 0.0;
  double diss = 0.0;
  std::size_t out_of_grid = 0;
};

RawBoost boost_norms(const MomentumGridModel& m, double d_eta) {
  const auto n = static_cast<Eigen::Index>(m.rapidities.size());
  const double lo = m.rapidities.front();
  const double hi = m.rapidities.back();
  const double h = (hi - lo) / static_cast<double>(n - 1);
  RawBoost out;
  // (B f)(y_i) = f(y_i - d_eta) by Whittaker interpolation; samples outside
  // the grid count as zero.
  Eigen::MatrixXd b(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double src = m.rapidities[static_cast<std::size_t>(i)] - d_eta;
    if (src < lo - 1e-12 * h || src > hi + 1e-12 * h) ++out.out_of_grid;
    for (Eigen::Index j = 0; j < n; ++j) {
      b(i, j) = sinc((src - m.rapidities[static_cast<std::size_t>(j)]) / h);
    }
  }
  CVector f(n), g_ham(n), g_full(n), ga_ham(n), ga_full(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = m.rapidities[static_cast<std::size_t>(i)];
    f(i) = std::exp(-0.5 * y * y);
    const double e = m.mass * std::cosh(y);
    const double e_moved = m.mass * std::cosh(y - d_eta);
    const double gamma = m.rates[static_cast<std::size_t>(i)];
    const double gamma_after =
        m.rate_source == RateSource::comoving_covariant ? m.rate_at(y - d_eta) : gamma;
    g_ham(i) = Complex(0.0, -e);
    ga_ham(i) = Complex(0.0, -e_moved);
    g_full(i) = Complex(-0.5 * gamma, -e);
    ga_full(i) = Complex(-0.5 * gamma_after, -e_moved);
  }
  const CVector bf = b.cast<Complex>() * f;
  auto residual = [&](const CVector& g, const CVector& ga) -> CVector {
    return b.cast<Complex>() * g.cwiseProduct(f) - ga.cwiseProduct(bf);
  };
  const CVector r_full = residual(g_full, ga_full);
  const CVector r_ham = residual(g_ham, ga_ham);
  const double scale = d_eta * f.norm();
  out.full = r_full.norm() / scale;
  out.ham = r_ham.norm() / scale;
  out.diss = (r_full - r_ham).norm() / scale;
  return out;
}

}  // namespace

BoostResidual boost_interchange_residual(const MomentumGridModel& m, double d_rapidity) {
  if (m.rapidities.size() < 2 || m.rapidities.size() > 64) {
    throw DomainError("boost_interchange_residual: grid size must be 2..64");
  }
  if (!(d_rapidity > 0.0)) throw DomainError("boost_interchange_residual: d_rapidity must be > 0");
  const RawBoost fine = boost_norms(m, d_rapidity);
  BoostResidual r;
  r.residual = fine.diss;
  r.raw_residual = fine.full;
  r.hamiltonian_residual = fine.ham;
  r.out_of_grid = fine.out_of_grid;
  const std::size_t half = m.rapidities.size() / 2;
  if (half >= 2 && fine.diss > 0.0) {
    const MomentumGridModel coarse = make_momentum_grid(half, m.rapidities.back(), m.mass, m.bath,
                                                        m.rate_source, m.dissipative);
    r.refinement_order = std::log2(boost_norms(coarse, d_rapidity).diss / fine.diss);
  }
  return r;
}

const char* to_string(RateSource s) noexcept {
  return s == RateSource::geometric_normal ? "geometric_normal" : "comoving_covariant";
}

void write_curl_csv(std::ostream& out, const std::vector<CurlSweepRow>& rows) {
  out << "sigma,tilt_rapidity,curl_residual,commutator_part,shape_part_xy,shape_part_yx\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.sigma << ',' << r.tilt_rapidity << ',' << r.curl.value << ',' << r.curl.commutator_part
        << ',' << r.curl.shape_part_xy << ',' << r.curl.shape_part_yx << '\n';
  }
}

void write_boost_csv(std::ostream& out, const std::vector<BoostSweepRow>& rows) {
  out << "grid_size,rate_source,residual,raw_residual,hamiltonian_residual,refinement_order\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.grid_size << ',' << to_string(r.rate_source) << ',' << r.result.residual << ','
        << r.result.raw_residual << ',' << r.result.hamiltonian_residual << ','
        << r.result.refinement_order << '\n';
  }
}

}  // namespace relclock
