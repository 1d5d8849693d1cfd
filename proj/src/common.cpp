#include "relclock/common.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

namespace relclock {

double min_hermitian_eigenvalue(const CMatrix& m) {
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

double hermiticity_defect(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CMatrix psd_sqrt(const CMatrix& m, std::size_t* clipped, double* most_negative) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(0.5 * (m + m.adjoint()));
  RVector evals = solver.eigenvalues();
  std::size_t n_clipped = 0;
  double lowest = evals.size() > 0 ? evals.minCoeff() : 0.0;
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    if (evals(i) < 0.0) {
      ++n_clipped;
      evals(i) = 0.0;
    }
  }
  if (clipped != nullptr) *clipped = n_clipped;
  if (most_negative != nullptr) *most_negative = std::min(lowest, 0.0);
  const CMatrix& v = solver.eigenvectors();
  return v * evals.cwiseSqrt().cast<Complex>().asDiagonal() * v.adjoint();
}

std::size_t worker_count() {
  std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RELCLOCK_THREADS")) {
    try {
      const long requested = std::stol(env);
      if (requested > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(requested));
    } catch (const std::exception&) {
      // Unparseable values fall back to the default.
    }
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> failures(workers);
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  // splitmix64 finalizer applied to a seed/index mix.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(seed ^ mix(index + 0x632be59bd9b4e019ULL));
}

}  // namespace relclock
