// Independent reference computations for the unit and acceptance tests.
// Nothing here calls into the library under test.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline constexpr double pi = 3.14159265358979323846;

// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

inline double trapezoid(const std::function<double(double)>& f, double a, double b, long n) {
  const double h = (b - a) / static_cast<double>(n);
  double s = 0.5 * (f(a) + f(b));
  for (long i = 1; i < n; ++i) s += f(a + static_cast<double>(i) * h);
  return s * h;
}

// D(z) = int_0^z exp(t^2 - z^2) dt, Simpson on the bounded integrand.
inline double dawson(double z) {
  if (z == 0.0) return 0.0;
  const double a = std::abs(z);
  // u = a - t; the integrand exp(-u(2a - u)) is negligible beyond u = 40/a.
  const double top = std::min(a, 40.0 / a);
  const double v = simpson([a](double u) { return std::exp(-u * (2.0 * a - u)); }, 0.0, top, 200000);
  return z < 0 ? -v : v;
}

inline double j_vacuum(double g, double m, double e) {
  return e <= m ? 0.0 : g * g * std::sqrt(e * e - m * m) / (4.0 * pi * pi);
}

inline double what_gauss(double sigma, double w) {
  return std::sqrt(2.0 * pi) * sigma * std::exp(-0.5 * sigma * sigma * w * w);
}

// int_m^inf j(E) what(omega + E) dE with E = m cosh(y), Simpson in y.
inline double kappa_vacuum_gauss(double g, double m, double sigma, double omega) {
  const double ymax = std::acosh(std::max(1.0, (std::abs(omega) + 12.0 / sigma) / m) + 1.0);
  return simpson(
      [&](double y) {
        const double e = m * std::cosh(y);
        return j_vacuum(g, m, e) * what_gauss(sigma, omega + e) * m * std::sinh(y);
      },
      0.0, ymax, 400000);
}

// Same rate with the clock normal boosted by eta: 2D Simpson over (E, cos theta).
inline double kappa_vacuum_gauss_boosted(double g, double m, double sigma, double omega,
                                         double eta, int ny, int nc) {
  const double ymax = std::acosh((std::abs(omega) + 12.0 / sigma) / m + 1.0) + std::abs(eta);
  const double ch = std::cosh(eta);
  const double sh = std::sinh(eta);
  return simpson(
      [&](double y) {
        const double e = m * std::cosh(y);
        const double k = m * std::sinh(y);
        const double ang = 0.5 * simpson(
                                     [&](double c) {
                                       return what_gauss(sigma, omega + e * ch - k * c * sh);
                                     },
                                     -1.0, 1.0, nc);
        return j_vacuum(g, m, e) * ang * k;
      },
      0.0, ymax, ny);
}

inline double bose(double e, double beta) { return 1.0 / (std::exp(beta * e) - 1.0); }

inline double min_eig(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double min_eig(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// exp(A) by Taylor series after scaling, then repeated squaring.
inline Eigen::MatrixXcd expm_taylor(const Eigen::MatrixXcd& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  double scale = 1.0;
  while (norm * scale > 0.25) {
    scale *= 0.5;
    ++squarings;
  }
  const Eigen::MatrixXcd as = a * scale;
  Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(a.rows(), a.cols());
  Eigen::MatrixXcd sum = term;
  for (int k = 1; k < 30; ++k) {
    term = (term * as) / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = (sum * sum).eval();
  return sum;
}

// Classical RK4 for y' = f(y) on complex matrices.
template <typename F>
Eigen::MatrixXcd rk4(F f, Eigen::MatrixXcd y, double t, int steps) {
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const Eigen::MatrixXcd k1 = f(y);
    const Eigen::MatrixXcd k2 = f(y + 0.5 * h * k1);
    const Eigen::MatrixXcd k3 = f(y + 0.5 * h * k2);
    const Eigen::MatrixXcd k4 = f(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

inline double opnorm(const Eigen::MatrixXcd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues()(0);
}

// Two-qubit reference: site generators built from scratch with oracle rates.
struct TwoSiteOracle {
  double omega0, sigma, a;

  static Eigen::MatrixXcd lindblad(const Eigen::MatrixXcd& h, const std::vector<std::pair<double, Eigen::MatrixXcd>>& ls) {
    const auto d = h.rows();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
    auto kr = [](const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
      Eigen::MatrixXcd out(x.rows() * y.rows(), x.cols() * y.cols());
      for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j) out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
      return out;
    };
    const std::complex<double> i(0, 1);
    Eigen::MatrixXcd s = -i * (kr(id, h) - kr(h.transpose(), id));
    for (const auto& [r, l] : ls) {
      const Eigen::MatrixXcd ldl = l.adjoint() * l;
      s += r * (kr(l.conjugate(), l) - 0.5 * kr(id, ldl) - 0.5 * kr(ldl.transpose(), id));
    }
    return s;
  }

  Eigen::MatrixXcd site(double lapse, int slot) const {
    Eigen::MatrixXcd sm = Eigen::MatrixXcd::Zero(2, 2);
    sm(1, 0) = 1;
    Eigen::MatrixXcd sz = Eigen::MatrixXcd::Zero(2, 2);
    sz(0, 0) = 1;
    sz(1, 1) = -1;
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(2, 2);
    auto emb = [&](const Eigen::MatrixXcd& op) {
      Eigen::MatrixXcd out(4, 4);
      const Eigen::MatrixXcd& x = slot == 0 ? op : id;
      const Eigen::MatrixXcd& y = slot == 0 ? id : op;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.block(2 * i, 2 * j, 2, 2) = x(i, j) * y;
      return out;
    };
    const double w = omega0 * lapse;
    return lindblad(emb(0.5 * w * sz), {{kappa_vacuum_gauss(1, 1, sigma, -w), emb(sm)},
                                        {kappa_vacuum_gauss(1, 1, sigma, w), emb(sm.adjoint())}});
  }

  // Sites 1, 2 of a 4-site constant-slope slice. Moving h_1 changes the
  // central normal at site 2 through h_1 only, and vice versa.
  double curl(double eta, double eps) const {
    const double t = std::tanh(eta);
    auto lapse = [&](double slope) { return std::cosh(std::atanh(slope)); };
    const double c = lapse(t);
    const Eigen::MatrixXcd lx = site(c, 0), ly = site(c, 1);
    // eta_2 = atanh((h_3 - h_1) / 2a), eta_1 = atanh((h_2 - h_0) / 2a)
    const Eigen::MatrixXcd dxy = (site(lapse(t - eps / (2 * a)), 1) - site(lapse(t + eps / (2 * a)), 1)) / (2 * eps);
    const Eigen::MatrixXcd dyx = (site(lapse(t + eps / (2 * a)), 0) - site(lapse(t - eps / (2 * a)), 0)) / (2 * eps);
    return opnorm(lx * ly - ly * lx + dxy - dyx);
  }
};

}  // namespace oracle
