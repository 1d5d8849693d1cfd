#include "relclock/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

// Boost 1.74 pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "relclock/common.hpp"
#include "relclock/errors.hpp"
#include "relclock/specfun.hpp"

namespace relclock {

namespace {

constexpr double kPoissonTail = 1e-12;

std::vector<double> poisson_weights_for(double r2) {
  std::vector<double> weights;
  if (r2 == 0.0) return {1.0};
  double cumulative = 0.0;
  for (std::size_t n = 0;; ++n) {
    const double log_p = -r2 + n * std::log(r2) - std::lgamma(static_cast<double>(n) + 1.0);
    const double p = std::exp(log_p);
    weights.push_back(p);
    cumulative += p;
    // Past the mode the tail is bounded by p * q / (1 - q), q = r2/(n+1).
    const double ratio = r2 / (static_cast<double>(n) + 1.0);
    if (static_cast<double>(n) > r2 && ratio < 1.0) {
      const double tail_bound = p * ratio / (1.0 - ratio);
      if (tail_bound < kPoissonTail) break;
    }
    if (n > 100000) throw DomainError("coherent_readout: amplitude too large");
  }
  return weights;
}

}  // namespace

const char* to_string(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::gaussian:
      return "gaussian";
    case KernelKind::coherent_readout:
      return "coherent_readout";
    case KernelKind::tabulated:
      return "tabulated";
  }
  return "unknown";
}

ClockKernel ClockKernel::gaussian(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError("gaussian kernel: sigma must be > 0");
  }
  ClockKernel k;
  k.kind_ = KernelKind::gaussian;
  k.sigma_ = sigma;
  return k;
}

ClockKernel ClockKernel::coherent_readout(double amplitude, double omega_c) {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw DomainError("coherent_readout kernel: amplitude must be >= 0");
  }
  if (!(omega_c > 0.0) || !std::isfinite(omega_c)) {
    throw DomainError("coherent_readout kernel: omega_c must be > 0");
  }
  ClockKernel k;
  k.kind_ = KernelKind::coherent_readout;
  k.amplitude_ = amplitude;
  k.omega_c_ = omega_c;
  k.poisson_ = poisson_weights_for(amplitude * amplitude);
  return k;
}

ClockKernel ClockKernel::tabulated(std::vector<double> s, std::vector<double> w) {
  if (s.size() != w.size()) throw ConstructionError("tabulated kernel: column length mismatch");
  if (s.size() < 4) throw ConstructionError("tabulated kernel: need at least 4 samples");
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return s[i] < s[j]; });
  std::vector<double> xs;
  std::vector<double> ys;
  for (auto i : order) {
    if (!std::isfinite(s[i]) || !std::isfinite(w[i])) {
      throw ConstructionError("tabulated kernel: non-finite sample");
    }
    if (!xs.empty() && s[i] == xs.back()) throw ConstructionError("tabulated kernel: duplicate s");
    xs.push_back(s[i]);
    ys.push_back(w[i]);
  }
  // Even extension when only the half line is given.
  if (xs.front() >= 0.0) {
    std::vector<double> ex;
    std::vector<double> ey;
    for (std::size_t i = xs.size(); i-- > 0;) {
      if (xs[i] > 0.0) {
        ex.push_back(-xs[i]);
        ey.push_back(ys[i]);
      }
    }
    ex.insert(ex.end(), xs.begin(), xs.end());
    ey.insert(ey.end(), ys.begin(), ys.end());
    xs = std::move(ex);
    ys = std::move(ey);
  }
  const double support = std::min(-xs.front(), xs.back());
  std::vector<double> gaps(xs.size() - 1);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) gaps[i] = xs[i + 1] - xs[i];
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  const double spacing = gaps[gaps.size() / 2];
  if (!(support > 0.0)) throw ConstructionError("tabulated kernel: samples must straddle s = 0");

  using Pchip = boost::math::interpolators::pchip<std::vector<double>>;
  auto spline = std::make_shared<Pchip>(std::move(xs), std::move(ys));
  ClockKernel k;
  k.kind_ = KernelKind::tabulated;
  k.support_ = support;
  k.spacing_ = spacing;
  k.interpolant_ = std::make_shared<const std::function<double(double)>>(
      [spline](double x) { return (*spline)(x); });
  const double w0 = (*k.interpolant_)(0.0);
  if (!(w0 > 0.0)) throw ConstructionError("tabulated kernel: w(0) must be > 0");
  k.norm_ = 1.0 / w0;
  return k;
}

ClockKernel ClockKernel::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConstructionError("tabulated kernel: cannot open " + path.string());
  std::vector<double> s;
  std::vector<double> w;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ConstructionError("tabulated kernel: line " + std::to_string(line_no) +
                              " has no comma");
    }
    try {
      std::size_t used = 0;
      const std::string a = line.substr(0, comma);
      const std::string b = line.substr(comma + 1);
      const double sv = std::stod(a, &used);
      if (a.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(a);
      const double wv = std::stod(b, &used);
      if (b.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(b);
      s.push_back(sv);
      w.push_back(wv);
    } catch (const std::exception&) {
      if (line_no == 1 && s.empty()) continue;  // header
      throw ConstructionError("tabulated kernel: bad number on line " + std::to_string(line_no));
    }
  }
  return tabulated(std::move(s), std::move(w));
}

double ClockKernel::width() const noexcept {
  switch (kind_) {
    case KernelKind::gaussian:
      return sigma_;
    case KernelKind::coherent_readout:
      return amplitude_ > 0.0 ? 1.0 / (amplitude_ * omega_c_) : kInf;
    case KernelKind::tabulated:
      return support_;
  }
  return 0.0;
}

double ClockKernel::eval(double s) const {
  if (!std::isfinite(s)) throw DomainError("kernel: time must be finite");
  switch (kind_) {
    case KernelKind::gaussian:
      return std::exp(-0.5 * s * s / (sigma_ * sigma_));
    case KernelKind::coherent_readout: {
      CompensatedSum sum;
      for (std::size_t n = 0; n < poisson_.size(); ++n) {
        sum.add(poisson_[n] * std::cos(static_cast<double>(n) * omega_c_ * s));
      }
      return sum.value();
    }
    case KernelKind::tabulated: {
      if (std::abs(s) > support_) {
        throw RangeError("tabulated kernel: |s| = " + std::to_string(std::abs(s)) +
                         " outside sample range " + std::to_string(support_));
      }
      const auto& f = *interpolant_;
      return 0.5 * norm_ * (f(s) + f(-s));
    }
  }
  return 0.0;
}

std::string ClockKernel::describe() const {
  std::ostringstream out;
  out << to_string(kind_);
  switch (kind_) {
    case KernelKind::gaussian:
      out << "(sigma=" << sigma_ << ")";
      break;
    case KernelKind::coherent_readout:
      out << "(R=" << amplitude_ << ", omega_c=" << omega_c_ << ", N=" << series_truncation()
          << ")";
      break;
    case KernelKind::tabulated:
      out << "(support=" << support_ << ")";
      break;
  }
  return out.str();
}

double SpectralMeasure::total_atomic_mass() const {
  CompensatedSum sum;
  for (const auto& a : atoms) sum.add(a.weight);
  return sum.value();
}

SpectralMeasure kernel_spectrum(const ClockKernel& kernel) {
  SpectralMeasure m;
  switch (kernel.kind()) {
    case KernelKind::gaussian: {
      const double sigma = kernel.sigma();
      m.density = [sigma](double omega) { return specfun::gaussian_ft(sigma, omega); };
      // exp(-x^2/2) < 1e-18 beyond x = 9.1
      m.density_extent = 9.2 / sigma;
      break;
    }
    case KernelKind::coherent_readout: {
      const auto& p = kernel.poisson_weights();
      m.atoms.push_back({0.0, 2.0 * kPi * p[0]});
      for (std::size_t n = 1; n < p.size(); ++n) {
        const double f = static_cast<double>(n) * kernel.omega_c();
        m.atoms.push_back({f, kPi * p[n]});
        m.atoms.push_back({-f, kPi * p[n]});
      }
      break;
    }
    case KernelKind::tabulated: {
      // Discrete cosine transform of the kernel resampled on a uniform grid
      // at the data resolution; the kernel is zero outside its support.
      const double radius = kernel.support_radius();
      const auto n = static_cast<std::size_t>(
          std::max(64.0, std::ceil(radius / kernel.sample_spacing())));
      const double h = radius / static_cast<double>(n);
      auto samples = std::make_shared<std::vector<double>>(n + 1);
      for (std::size_t k = 0; k <= n; ++k) {
        (*samples)[k] = kernel.eval(std::min(radius, static_cast<double>(k) * h));
      }
      auto transform = [samples, h](double omega) {
        CompensatedSum sum;
        sum.add((*samples)[0]);
        for (std::size_t k = 1; k < samples->size(); ++k) {
          sum.add(2.0 * (*samples)[k] * std::cos(omega * static_cast<double>(k) * h));
        }
        return h * sum.value();
      };
      // Negative mass over [0, Nyquist], doubled for the even partner.
      const std::size_t n_omega = 8 * n;
      const double d_omega = kPi / h / static_cast<double>(n_omega);
      CompensatedSum negative;
      for (std::size_t i = 0; i <= n_omega; ++i) {
        const double v = transform(static_cast<double>(i) * d_omega);
        if (v < 0.0) negative.add((i == 0 ? 1.0 : 2.0) * v * d_omega);
      }
      if (negative.value() < -1e-8) {
        throw PositivityError("tabulated kernel: negative spectral mass " +
                                  std::to_string(negative.value()),
                              negative.value());
      }
      m.density = transform;
      m.density_extent = kPi / h;
      break;
    }
  }
  return m;
}

GramVerdict positivity_gram_check(const ClockKernel& kernel, std::span<const double> times,
                                  double tol) {
  if (times.size() < 2) throw DomainError("positivity_gram_check: need at least 2 times");
  const auto n = static_cast<Eigen::Index>(times.size());
  RMatrix gram(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = j; k < n; ++k) {
      const double v = kernel.eval(times[j] - times[k]);
      gram(j, k) = v;
      gram(k, j) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<RMatrix> solver(gram, Eigen::EigenvaluesOnly);
  const double lowest = solver.eigenvalues().minCoeff();
  return GramVerdict{lowest >= -tol, lowest};
}

}  // namespace relclock
