#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace relclock {

enum class KernelKind { gaussian, coherent_readout, tabulated };

const char* to_string(KernelKind kind) noexcept;

// Even, positive-type clock-resolution kernel w(s). Immutable after
// construction.
class ClockKernel {
 public:
  // w(s) = exp(-s^2 / (2 sigma^2)).
  static ClockKernel gaussian(double sigma);

  // Even part of a coherent-state readout overlap:
  // w(s) = exp(-R^2) sum_n (R^2)^n / n! cos(n omega_c s), truncated where the
  // dropped Poisson tail is below 1e-12.
  static ClockKernel coherent_readout(double amplitude, double omega_c);

  // Samples (s, w) interpolated by a shape-preserving cubic and symmetrized,
  // (w(s) + w(-s)) / 2. Samples on [0, S] only are extended evenly. Values
  // are normalized so that w(0) = 1.
  static ClockKernel tabulated(std::vector<double> s, std::vector<double> w);

  // Two-column CSV (s, w); comma separated; optional header line.
  static ClockKernel load_csv(const std::filesystem::path& path);

  KernelKind kind() const noexcept { return kind_; }
  double sigma() const noexcept { return sigma_; }
  double amplitude() const noexcept { return amplitude_; }
  double omega_c() const noexcept { return omega_c_; }
  std::size_t series_truncation() const noexcept { return poisson_.empty() ? 0 : poisson_.size() - 1; }
  // Poisson weights p_n = exp(-R^2) R^(2n) / n!, n = 0..N.
  const std::vector<double>& poisson_weights() const noexcept { return poisson_; }
  // Half-width of the tabulated support (|s| <= support_radius()).
  double support_radius() const noexcept { return support_; }
  // Median spacing of the tabulated samples; 0 for analytic kernels.
  double sample_spacing() const noexcept { return spacing_; }

  // Characteristic width: sigma, 1/(R omega_c), or the tabulated half-width.
  double width() const noexcept;

  double eval(double s) const;
  double operator()(double s) const { return eval(s); }

  std::string describe() const;

 private:
  ClockKernel() = default;

  KernelKind kind_ = KernelKind::gaussian;
  double sigma_ = 0.0;
  double amplitude_ = 0.0;
  double omega_c_ = 0.0;
  double support_ = 0.0;
  double spacing_ = 0.0;
  double norm_ = 1.0;
  std::vector<double> poisson_;
  std::shared_ptr<const std::function<double(double)>> interpolant_;
};

struct SpectralAtom {
  double frequency = 0.0;
  double weight = 0.0;
};

// Fourier representation hat w(Omega) = int ds w(s) exp(-i Omega s): a set of
// atoms plus an optional density.
struct SpectralMeasure {
  std::vector<SpectralAtom> atoms;
  std::function<double(double)> density;  // empty when purely atomic
  // Support half-width outside of which the density is negligible (< 1e-18
  // relative), or 0 when no density is present.
  double density_extent = 0.0;

  double total_atomic_mass() const;
};

SpectralMeasure kernel_spectrum(const ClockKernel& kernel);

struct GramVerdict {
  bool positive_type = false;
  double min_eigenvalue = 0.0;
};

// Gram matrix M_jk = w(t_j - t_k); positive_type iff min eigenvalue >= -tol.
GramVerdict positivity_gram_check(const ClockKernel& kernel, std::span<const double> times,
                                  double tol = 1e-10);

}  // namespace relclock
