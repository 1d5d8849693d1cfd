#include "relclock/trajectories.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "relclock/errors.hpp"

namespace relclock {

namespace {

// Circular complex normal with E[|z|^2] = variance.
Complex complex_normal(std::mt19937_64& rng, double variance) {
  std::normal_distribution<double> n01;
  const double s = std::sqrt(0.5 * variance);
  const double re = n01(rng);
  const double im = n01(rng);
  return {s * re, s * im};
}

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

constexpr std::size_t kBlock = 64;

}  // namespace

NoiseField sample_colored_noise(const EnvironmentSpec& env, const ClockKernel& kernel,
                                std::span<const double> grid, std::size_t n_real,
                                std::uint64_t seed, double cutoff) {
  env.validate();
  if (grid.empty() || grid.size() > 256) throw DomainError("sample_colored_noise: grid size must be 1..256");
  if (n_real == 0) throw DomainError("sample_colored_noise: n_real must be >= 1");
  const double lambda = cutoff > 0.0 ? cutoff : kDefaultCutoffFactor * env.mass_E;
  const auto n = static_cast<Eigen::Index>(grid.size());

  NoiseField f;
  f.grid.assign(grid.begin(), grid.end());
  f.seed = seed;
  f.target_covariance = CMatrix::Zero(n, n);
  // C depends only on t_j - t_k; Hermiticity fills the lower triangle.
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = j; k < n; ++k) {
      const Complex c = wightman_timelike(env, &kernel, grid[static_cast<std::size_t>(j)] - grid[static_cast<std::size_t>(k)], lambda);
      f.target_covariance(j, k) = c;
      f.target_covariance(k, j) = std::conj(c);
    }
    f.target_covariance(j, j) = f.target_covariance(j, j).real();
  }
  const double max_diag = f.target_covariance.diagonal().real().maxCoeff();
  const CMatrix root = psd_sqrt(f.target_covariance, &f.clipped_eigenvalues, &f.most_negative_eigenvalue);
  if (f.most_negative_eigenvalue < -1e-8 * max_diag) {
    throw PositivityError("sample_colored_noise: target covariance not PSD", f.most_negative_eigenvalue);
  }

  f.samples = CMatrix::Zero(static_cast<Eigen::Index>(n_real), n);
  parallel_for(n_real, [&](std::size_t r) {
    std::mt19937_64 rng(stream_seed(seed, r));
    CVector xi(n);
    for (Eigen::Index j = 0; j < n; ++j) xi(j) = complex_normal(rng, 1.0);
    f.samples.row(static_cast<Eigen::Index>(r)) = (root * xi).transpose();
  });
  return f;
}

CMatrix sample_covariance(const NoiseField& field) {
  const auto n = field.samples.cols();
  const auto r = field.samples.rows();
  if (r == 0) return CMatrix::Zero(n, n);
  // rows are zeta_r^T; sum_r zeta_r zeta_r^dagger = S^T conj(S)
  return field.samples.transpose() * field.samples.conjugate() / static_cast<double>(r);
}

TrajectoryEnsemble unravel_linear(const GKLSModel& m, const CMatrix& rho0, double t,
                                  const UnravelOptions& options) {
  m.validate();
  const std::size_t d = m.dim();
  const auto di = static_cast<Eigen::Index>(d);
  validate_density(rho0, d, 1e-10);
  if (!(t >= 0.0)) throw DomainError("unravel_linear: t must be >= 0");
  if (!(options.dt > 0.0)) throw DomainError("unravel_linear: dt must be > 0");
  if (options.n_traj == 0) throw DomainError("unravel_linear: n_traj must be >= 1");
  const double purity = (rho0 * rho0).trace().real();
  if (std::abs(purity - 1.0) > 1e-10) throw DomainError("unravel_linear: rho0 must be pure");

  const CMatrix& k = m.kossakowski.matrix;
  const double kscale = std::max(1.0, k.size() ? k.cwiseAbs().maxCoeff() : 0.0);
  for (Eigen::Index a = 0; a < k.rows(); ++a) {
    for (Eigen::Index b = 0; b < k.cols(); ++b) {
      if (a != b && std::abs(k(a, b)) > 1e-12 * kscale) {
        throw ConstructionError("unravel_linear: rate block is not diagonal; rotate to eigen-jumps first");
      }
    }
  }
  std::vector<CMatrix> noise_ops;  // sqrt(gamma_k) L_k
  CMatrix h_eff = m.hamiltonian;
  for (std::size_t j = 0; j < m.jumps.size(); ++j) {
    const double gamma = k(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)).real();
    if (gamma == 0.0) continue;
    const CMatrix& l = m.jumps[j].op;
    h_eff -= Complex(0.0, 0.5 * gamma) * (l.adjoint() * l);
    noise_ops.push_back(std::sqrt(gamma) * l);
  }
  if (options.dt * spectral_norm(h_eff) > 0.05) {
    throw StepSizeError("unravel_linear: dt * ||H_eff|| must be <= 0.05");
  }

  const auto n_steps = static_cast<std::size_t>(std::llround(t / options.dt));
  if (std::abs(static_cast<double>(n_steps) * options.dt - t) > 1e-9 * std::max(1.0, t)) {
    throw DomainError("unravel_linear: t must be a multiple of dt");
  }
  std::size_t stride = options.record_stride;
  if (stride == 0) stride = std::max<std::size_t>(1, (n_steps + 99) / 100);
  std::vector<std::size_t> record_steps;
  for (std::size_t s = 0; s <= n_steps; s += stride) record_steps.push_back(s);
  if (record_steps.back() != n_steps) record_steps.push_back(n_steps);
  const std::size_t n_rec = record_steps.size();

  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho0);
  CVector psi0 = es.eigenvectors().col(di - 1);
  psi0 /= psi0.norm();

  // exp(-i H_eff dt) in place of 1 - i H_eff dt: same weak order, and
  // dissipation-free models stay exactly unitary.
  const CMatrix step_drift = (Complex(0.0, -options.dt) * h_eff).exp();

  TrajectoryEnsemble e;
  e.n_traj = options.n_traj;
  e.seed = options.seed;
  e.dim = d;
  for (auto s : record_steps) e.times.push_back(static_cast<double>(s) * options.dt);
  if (options.keep_states) e.states.assign(n_rec, std::vector<CVector>(options.n_traj));

  // Fixed-size trajectory blocks give a schedule-independent reduction.
  const std::size_t n_blocks = (options.n_traj + kBlock - 1) / kBlock;
  struct Partial {
    std::vector<CMatrix> sum;
    std::vector<double> sum_sq;  // sum of ||X||_F^2
  };
  std::vector<Partial> partials(n_blocks);
  parallel_for(n_blocks, [&](std::size_t b) {
    Partial& p = partials[b];
    p.sum.assign(n_rec, CMatrix::Zero(di, di));
    p.sum_sq.assign(n_rec, 0.0);
    const std::size_t first = b * kBlock;
    const std::size_t last = std::min(options.n_traj, first + kBlock);
    for (std::size_t r = first; r < last; ++r) {
      std::mt19937_64 rng(stream_seed(options.seed, r));
      CVector psi = psi0;
      std::size_t next = 0;
      for (std::size_t s = 0; s <= n_steps; ++s) {
        if (next < n_rec && record_steps[next] == s) {
          const CMatrix x = psi * psi.adjoint();
          p.sum[next] += x;
          p.sum_sq[next] += x.squaredNorm();
          if (options.keep_states) e.states[next][r] = psi;
          ++next;
        }
        if (s == n_steps) break;
        CVector dpsi = step_drift * psi;
        for (const auto& l : noise_ops) dpsi += complex_normal(rng, options.dt) * (l * psi);
        psi = dpsi;
      }
    }
  });

  const double n = static_cast<double>(options.n_traj);
  for (std::size_t k2 = 0; k2 < n_rec; ++k2) {
    CMatrix total = CMatrix::Zero(di, di);
    CompensatedSum sq;
    std::vector<CompensatedComplexSum> entries(d * d);
    for (const auto& p : partials) {
      for (Eigen::Index i = 0; i < di * di; ++i) entries[static_cast<std::size_t>(i)].add(p.sum[k2](i));
      sq.add(p.sum_sq[k2]);
    }
    for (Eigen::Index i = 0; i < di * di; ++i) total(i) = entries[static_cast<std::size_t>(i)].value();
    const CMatrix mean = total / n;
    e.mean_state.push_back(mean);
    // sum_entries var = E||X||^2 - ||E X||^2
    const double var = std::max(0.0, sq.value() / n - mean.squaredNorm());
    e.stat_error.push_back(options.n_traj > 1 ? std::sqrt(var / (n - 1.0)) : 0.0);
  }
  return e;
}

EnsembleComparison ensemble_compare(const TrajectoryEnsemble& e, const GKLSModel& m,
                                    const CMatrix& rho0) {
  const Superoperator s = build_generator(m);
  EnsembleComparison out;
  for (std::size_t k = 0; k < e.times.size(); ++k) {
    const CMatrix exact = evolve(s, rho0, e.times[k]);
    const double dev = (e.mean_state[k] - exact).norm();
    out.max_deviation = std::max(out.max_deviation, dev);
    if (e.stat_error[k] > 0.0) {
      out.max_sigma_units = std::max(out.max_sigma_units, dev / e.stat_error[k]);
    } else if (dev > 1e-8) {
      out.max_sigma_units = kInf;
    }
  }
  return out;
}

CMatrix hypersurface_white_increments(std::size_t n_sites, std::size_t n_samples, double dt,
                                      std::uint64_t seed) {
  if (!(dt > 0.0)) throw DomainError("hypersurface_white_increments: dt must be > 0");
  CMatrix out(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(n_sites));
  parallel_for(n_samples, [&](std::size_t r) {
    std::mt19937_64 rng(stream_seed(seed, r));
    for (std::size_t j = 0; j < n_sites; ++j) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = complex_normal(rng, dt);
    }
  });
  return out;
}

void write_ensemble_csv(std::ostream& out, const TrajectoryEnsemble& e) {
  out << "t";
  for (std::size_t i = 0; i < e.dim; ++i)
    for (std::size_t j = 0; j < e.dim; ++j) out << ",re_rho_" << i << j << ",im_rho_" << i << j;
  out << ",trace,stat_error\n";
  out << std::setprecision(17);
  const auto d = static_cast<Eigen::Index>(e.dim);
  for (std::size_t k = 0; k < e.times.size(); ++k) {
    out << e.times[k];
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        out << ',' << e.mean_state[k](i, j).real() << ',' << e.mean_state[k](i, j).imag();
    out << ',' << e.mean_state[k].trace().real() << ',' << e.stat_error[k] << '\n';
  }
}

void write_trajectory_dump(const std::filesystem::path& path, const TrajectoryEnsemble& e) {
  if (e.states.empty()) throw DomainError("write_trajectory_dump: ensemble kept no states");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write("RCTR", 4);
  put_le<std::uint32_t>(out, 1);
  put_le<std::uint64_t>(out, e.states.size());
  put_le<std::uint64_t>(out, e.n_traj);
  put_le<std::uint64_t>(out, e.dim);
  for (const auto& row : e.states) {
    for (const auto& psi : row) {
      for (Eigen::Index i = 0; i < psi.size(); ++i) {
        put_le<float>(out, static_cast<float>(psi(i).real()));
        put_le<float>(out, static_cast<float>(psi(i).imag()));
      }
    }
  }
}

}  // namespace relclock
