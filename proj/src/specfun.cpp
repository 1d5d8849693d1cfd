#include "relclock/specfun.hpp"

#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "relclock/common.hpp"
#include "relclock/errors.hpp"

namespace relclock::specfun {

namespace {

// Beyond this |z| the asymptotic series is used; both branches agree there to
// better than 1e-14 (checked in the unit tests).
constexpr double kDawsonSwitch = 6.0;

double dawson_series(double z) {
  // All terms positive for z > 0, so no cancellation.
  const double z2 = z * z;
  double term = z;  // z^(2n+1) / n!
  double sum = term;
  for (int n = 1; n < 400; ++n) {
    term *= z2 / n;
    const double contrib = term / (2 * n + 1);
    sum += contrib;
    if (contrib < 1e-17 * sum) break;
  }
  return std::exp(-z2) * sum;
}

double dawson_asymptotic(double z) {
  const double x = 1.0 / (2.0 * z * z);
  double term = 1.0;
  double sum = 1.0;
  for (int n = 1; n < 200; ++n) {
    const double next = term * (2 * n - 1) * x;
    if (next >= term) break;  // smallest term reached
    term = next;
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum / (2.0 * z);
}

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

}  // namespace

double dawson(double z) {
  if (!std::isfinite(z)) throw DomainError("dawson: argument must be finite");
  const double az = std::abs(z);
  const double d = az <= kDawsonSwitch ? dawson_series(az) : dawson_asymptotic(az);
  return z < 0 ? -d : d;
}

double bose_occupation(double energy, double beta) {
  if (!(energy > 0.0) || !std::isfinite(energy)) {
    throw DomainError("bose_occupation: energy must be > 0");
  }
  if (std::isnan(beta) || beta <= 0.0) {
    throw DomainError("bose_occupation: beta must be > 0 or +inf");
  }
  if (std::isinf(beta)) return 0.0;
  return 1.0 / std::expm1(beta * energy);
}

double gaussian_ft(double sigma, double omega) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError("gaussian_ft: sigma must be > 0");
  }
  return std::sqrt(2.0 * kPi) * sigma * std::exp(-0.5 * sigma * sigma * omega * omega);
}

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    const QuadratureOptions& options) {
  if (!(options.rel_tol > 0.0)) throw DomainError("integrate_adaptive: tol must be > 0");
  if (std::isnan(a) || std::isnan(b) || std::isinf(a)) {
    throw DomainError("integrate_adaptive: lower limit must be finite");
  }
  if (b < a) {
    QuadratureResult r = integrate_adaptive(f, b, a, options);
    r.value = -r.value;
    return r;
  }

  std::size_t evaluations = 0;
  std::function<double(double)> g;
  double lo = a;
  double hi = b;
  if (std::isinf(b)) {
    // x = a + t/(1-t), dx = dt/(1-t)^2
    g = [&](double t) {
      ++evaluations;
      if (t >= 1.0) return 0.0;
      const double u = 1.0 - t;
      const double x = a + t / u;
      const double v = f(x) / (u * u);
      return std::isfinite(v) ? v : 0.0;
    };
    lo = 0.0;
    hi = 1.0;
  } else {
    g = [&](double x) {
      ++evaluations;
      return f(x);
    };
  }

  using Rule = boost::math::quadrature::gauss_kronrod<double, 21>;
  auto apply = [&](double x0, double x1) {
    double err = 0.0;
    const double v = Rule::integrate(g, x0, x1, 0, 0.0, &err);
    // Boost 1.74 reports |K - G| on the reference interval [-1, 1]; rescale.
    return Segment{x0, x1, v, std::abs(err) * 0.5 * (x1 - x0)};
  };

  std::priority_queue<Segment> queue;
  Segment first = apply(lo, hi);
  queue.push(first);
  CompensatedSum total_value;
  double total_value_fast = first.value;
  double total_error = first.error;
  std::size_t subdivisions = 0;

  auto converged = [&] {
    return total_error <= std::max(options.rel_tol * std::abs(total_value_fast), options.abs_tol);
  };

  while (!converged()) {
    if (subdivisions >= options.max_subdivisions) {
      std::ostringstream msg;
      msg << "integrate_adaptive: no convergence after " << subdivisions
          << " subdivisions (estimate " << total_value_fast << ", error " << total_error << ")";
      throw AccuracyError(msg.str(), total_value_fast, total_error);
    }
    const Segment worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval exhausted at machine precision; accept its contribution.
      queue.push(Segment{worst.a, worst.b, worst.value, 0.0});
      total_error -= worst.error;
      ++subdivisions;
      continue;
    }
    const Segment left = apply(worst.a, mid);
    const Segment right = apply(mid, worst.b);
    total_value_fast += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
    ++subdivisions;
  }

  // Re-sum the final partition to drop the drift of the running totals.
  double err_sum = 0.0;
  while (!queue.empty()) {
    total_value.add(queue.top().value);
    err_sum += queue.top().error;
    queue.pop();
  }
  return QuadratureResult{total_value.value(), std::max(err_sum, 0.0),
                          std::max<std::size_t>(evaluations, 1)};
}

}  // namespace relclock::specfun
