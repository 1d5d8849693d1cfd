#pragma once

#include <cstddef>
#include <functional>

namespace relclock::specfun {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;  // absolute, >= 0
  std::size_t evaluations = 0;
};

// Dawson function D(z) = exp(-z^2) * int_0^z exp(t^2) dt, relative error
// below 1e-12 on the whole real line.
double dawson(double z);

// Bose-Einstein occupation 1/(exp(beta E) - 1). beta = +inf is the vacuum.
double bose_occupation(double energy, double beta);

// Fourier transform of the Gaussian clock kernel exp(-s^2/(2 sigma^2)):
// sqrt(2 pi) sigma exp(-sigma^2 Omega^2 / 2).
double gaussian_ft(double sigma, double omega);

struct QuadratureOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-300;
  std::size_t max_subdivisions = 2000;
};

// Globally adaptive 21-point Gauss-Kronrod quadrature of f over [a, b].
// b may be +inf; the half line is mapped by x = a + t/(1-t), t in [0, 1).
// Stops when error_estimate <= max(rel_tol*|value|, abs_tol); throws
// AccuracyError carrying the best estimate after max_subdivisions.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    const QuadratureOptions& options = {});

inline QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a,
                                           double b, double tol) {
  return integrate_adaptive(f, a, b, QuadratureOptions{tol, 1e-300, 2000});
}

}  // namespace relclock::specfun
