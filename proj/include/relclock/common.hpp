#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace relclock {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline const char* version_string() noexcept { return "0.1.0"; }

// Smallest eigenvalue of the Hermitian part of m.
double min_hermitian_eigenvalue(const CMatrix& m);

// Largest singular value.
double spectral_norm(const CMatrix& m);

// Max |m - m^dagger| entry.
double hermiticity_defect(const CMatrix& m);

// Commutator ab - ba.
inline CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

// Kronecker product a (x) b.
CMatrix kron(const CMatrix& a, const CMatrix& b);

// Hermitian square root of a PSD matrix with eigenvalues clipped at zero.
// Returns the number of clipped eigenvalues through `clipped` and the most
// negative eigenvalue through `most_negative` when non-null.
CMatrix psd_sqrt(const CMatrix& m, std::size_t* clipped = nullptr,
                 double* most_negative = nullptr);

// Worker count from RELCLOCK_THREADS, defaulting to hardware concurrency.
std::size_t worker_count();

// Runs body(i) for i in [0, n) across worker_count() threads. Each index is
// handled exactly once; results must be written to per-index slots so the
// outcome does not depend on the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Independent 64-bit seed for stream `index` of a run seeded with `seed`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept;

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class CompensatedComplexSum {
 public:
  void add(Complex x) noexcept {
    re_.add(x.real());
    im_.add(x.imag());
  }
  Complex value() const noexcept { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum re_;
  CompensatedSum im_;
};

}  // namespace relclock
