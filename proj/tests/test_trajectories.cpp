#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "relclock/errors.hpp"
#include "relclock/trajectories.hpp"

using namespace relclock;
using doctest::Approx;

namespace {

CMatrix sz() { CMatrix m = CMatrix::Zero(2, 2); m(0, 0) = 1; m(1, 1) = -1; return m; }
CMatrix sminus() { CMatrix m = CMatrix::Zero(2, 2); m(1, 0) = 1; return m; }
CMatrix excited() { CMatrix m = CMatrix::Zero(2, 2); m(0, 0) = 1; return m; }

GKLSModel qubit(double w0, double down, double up) {
  GKLSModel m;
  m.hamiltonian = 0.5 * w0 * sz();
  m.jumps = {{sminus(), -w0, 0}, {CMatrix(sminus().adjoint()), w0, 0}};
  m.kossakowski.labels = {{0, -w0}, {0, w0}};
  m.kossakowski.matrix = CMatrix::Zero(2, 2);
  m.kossakowski.matrix(0, 0) = down;
  m.kossakowski.matrix(1, 1) = up;
  return m;
}

CMatrix plus_state() {
  CMatrix r = CMatrix::Constant(2, 2, 0.5);
  return r;
}

std::vector<double> uniform_grid(int n, double h) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = i * h;
  return g;
}

struct ThreadsGuard {
  explicit ThreadsGuard(const char* v) { setenv("RELCLOCK_THREADS", v, 1); }
  ~ThreadsGuard() { unsetenv("RELCLOCK_THREADS"); }
};

}  // namespace

TEST_CASE("colored noise sample covariance converges to the correlator") {
  EnvironmentSpec env;
  const auto k = ClockKernel::gaussian(1.0);
  const auto grid = uniform_grid(32, 0.25);
  const NoiseField f = sample_colored_noise(env, k, grid, 20000, 7);
  CHECK(f.samples.rows() == 20000);
  CHECK(f.samples.cols() == 32);
  const CMatrix emp = sample_covariance(f);
  const double rel = (emp - f.target_covariance).norm() / f.target_covariance.norm();
  CHECK(rel <= 0.05);
  // target is Hermitian and PSD up to clipping noise
  CHECK((f.target_covariance - f.target_covariance.adjoint()).norm() == Approx(0.0));
  CHECK(oracle::min_eig(f.target_covariance) >= -1e-10 * f.target_covariance.norm());
  // entries follow the correlator at the grid offsets
  CHECK(std::abs(f.target_covariance(0, 5) - wightman_timelike(env, k, grid[0] - grid[5])) < 1e-14);
  // E[zeta zeta] vanishes for circular noise
  const CMatrix pseudo = f.samples.transpose() * f.samples / 20000.0;
  CHECK(pseudo.norm() / f.target_covariance.norm() <= 0.05);
}

TEST_CASE("colored noise at zero coupling is identically zero") {
  EnvironmentSpec env;
  env.coupling_g = 0.0;
  const auto grid = uniform_grid(8, 0.5);
  const NoiseField f = sample_colored_noise(env, ClockKernel::gaussian(1.0), grid, 100, 1);
  CHECK(f.samples.norm() == 0.0);
}

TEST_CASE("single grid point variance matches C(0)") {
  EnvironmentSpec env;
  const auto k = ClockKernel::gaussian(1.0);
  const std::vector<double> grid{0.0};
  const std::size_t n = 40000;
  const NoiseField f = sample_colored_noise(env, k, grid, n, 99);
  const double c0 = wightman_timelike(env, k, 0.0).real();
  const double var = f.samples.squaredNorm() / static_cast<double>(n);
  CHECK(std::abs(var - c0) <= 3.0 / std::sqrt(static_cast<double>(n)) * c0);
}

TEST_CASE("colored noise preconditions") {
  EnvironmentSpec env;
  const auto k = ClockKernel::gaussian(1.0);
  CHECK_THROWS_AS(sample_colored_noise(env, k, uniform_grid(257, 0.1), 10, 1), DomainError);
  CHECK_THROWS_AS(sample_colored_noise(env, k, std::vector<double>{}, 10, 1), DomainError);
  const auto tab = ClockKernel::tabulated({-2.0, -1.0, 0.0, 1.0, 2.0}, {0.0, 0.0, 1.0, 0.0, 0.0});
  CHECK_THROWS_AS(sample_colored_noise(env, tab, uniform_grid(4, 0.1), 10, 1), UnsupportedError);
}

TEST_CASE("colored noise is independent of the thread count") {
  EnvironmentSpec env;
  const auto k = ClockKernel::gaussian(1.0);
  const auto grid = uniform_grid(16, 0.3);
  CMatrix a, b;
  {
    ThreadsGuard g("1");
    a = sample_colored_noise(env, k, grid, 500, 5).samples;
  }
  {
    ThreadsGuard g("4");
    b = sample_colored_noise(env, k, grid, 500, 5).samples;
  }
  CHECK(a == b);
}

TEST_CASE("amplitude damping ensemble reproduces the GKLS population") {
  const GKLSModel m = qubit(1.0, 1.0, 0.0);
  UnravelOptions o;
  o.dt = 1e-3;
  o.n_traj = 10000;
  o.seed = 2024;
  o.record_stride = 50;
  const TrajectoryEnsemble e = unravel_linear(m, excited(), 1.0, o);
  REQUIRE(e.times.size() == 21);
  CHECK(e.times.back() == Approx(1.0));
  const double ree = e.mean_state.back()(0, 0).real();
  CHECK(std::abs(ree - std::exp(-1.0)) <= std::max(0.02, 5.0 * e.stat_error.back()));
  const EnsembleComparison c = ensemble_compare(e, m, excited());
  CHECK(c.max_sigma_units <= 5.0);
  for (std::size_t k = 0; k < e.times.size(); ++k) {
    CHECK(std::abs(e.mean_state[k].trace().real() - 1.0) <= 3.0 * e.stat_error[k] + 1e-12);
  }
}

TEST_CASE("coherent superposition decays with both rates") {
  const GKLSModel m = qubit(2.0, 0.7, 0.3);
  UnravelOptions o;
  o.dt = 1e-3;
  o.n_traj = 8000;
  o.seed = 3;
  o.record_stride = 100;
  const TrajectoryEnsemble e = unravel_linear(m, plus_state(), 1.0, o);
  const EnsembleComparison c = ensemble_compare(e, m, plus_state());
  CHECK(c.max_sigma_units <= 5.0);
}

TEST_CASE("dissipation-free ensembles are deterministic and exact") {
  const GKLSModel m = qubit(1.3, 0.0, 0.0);
  UnravelOptions o;
  o.dt = 1e-3;
  o.n_traj = 50;
  o.seed = 1;
  o.keep_states = true;
  const TrajectoryEnsemble e = unravel_linear(m, plus_state(), 2.0, o);
  for (const auto& row : e.states)
    for (const auto& psi : row) CHECK(psi == row.front());
  const EnsembleComparison c = ensemble_compare(e, m, plus_state());
  CHECK(c.max_deviation <= 1e-8);
}

TEST_CASE("ensembles are bit-identical across thread counts") {
  const GKLSModel m = qubit(1.0, 0.8, 0.2);
  UnravelOptions o;
  o.dt = 1e-3;
  o.n_traj = 300;
  o.seed = 77;
  TrajectoryEnsemble a, b;
  {
    ThreadsGuard g("1");
    a = unravel_linear(m, excited(), 0.5, o);
  }
  {
    ThreadsGuard g("8");
    b = unravel_linear(m, excited(), 0.5, o);
  }
  REQUIRE(a.mean_state.size() == b.mean_state.size());
  for (std::size_t k = 0; k < a.mean_state.size(); ++k) {
    CHECK(a.mean_state[k] == b.mean_state[k]);
    CHECK(a.stat_error[k] == b.stat_error[k]);
  }
}

TEST_CASE("deviation shrinks about twofold for four times the trajectories") {
  const GKLSModel m = qubit(1.0, 1.0, 0.0);
  auto mean_dev = [&](std::size_t n_traj) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      UnravelOptions o;
      o.dt = 1e-3;
      o.n_traj = n_traj;
      o.seed = 1000 + seed;
      o.record_stride = 100;
      const auto e = unravel_linear(m, excited(), 1.0, o);
      total += ensemble_compare(e, m, excited()).max_deviation;
    }
    return total / 8.0;
  };
  const double ratio = mean_dev(2000) / mean_dev(8000);
  CHECK(ratio >= 1.2);
  CHECK(ratio <= 2.8);
}

TEST_CASE("halving dt moves the mean by at most the statistical error") {
  const GKLSModel m = qubit(1.0, 1.0, 0.0);
  UnravelOptions o;
  o.n_traj = 10000;
  o.seed = 11;
  o.dt = 2e-3;
  o.record_stride = 500;
  const auto coarse = unravel_linear(m, excited(), 1.0, o);
  o.dt = 1e-3;
  o.record_stride = 1000;
  const auto fine = unravel_linear(m, excited(), 1.0, o);
  CHECK((coarse.mean_state.back() - fine.mean_state.back()).norm() <=
        std::hypot(coarse.stat_error.back(), fine.stat_error.back()));
}

TEST_CASE("unravel_linear preconditions") {
  const GKLSModel m = qubit(1.0, 1.0, 0.0);
  UnravelOptions o;
  o.n_traj = 4;
  o.dt = 0.1;
  CHECK_THROWS_AS(unravel_linear(m, excited(), 1.0, o), StepSizeError);
  o.dt = 1e-3;
  CHECK_THROWS_AS(unravel_linear(m, CMatrix::Identity(2, 2) * 0.5, 1.0, o), DomainError);
  GKLSModel offdiag;
  offdiag.hamiltonian = CMatrix::Zero(2, 2);
  offdiag.jumps = {{sz(), 0.0, 0}, {CMatrix(CMatrix::Identity(2, 2)), 0.0, 1}};
  offdiag.kossakowski.labels = {{0, 0.0}, {1, 0.0}};
  offdiag.kossakowski.matrix = CMatrix::Constant(2, 2, 0.5);
  CHECK_THROWS_AS(unravel_linear(offdiag, excited(), 0.1, o), ConstructionError);
}

TEST_CASE("single trajectory carries the estimator variance") {
  const GKLSModel m = qubit(1.0, 1.0, 0.0);
  UnravelOptions o;
  o.n_traj = 1;
  o.seed = 4;
  o.keep_states = true;
  const auto e = unravel_linear(m, excited(), 1.0, o);
  // the unnormalized norm drifts away from 1
  CHECK(std::abs(e.states.back()[0].squaredNorm() - 1.0) > 1e-3);
  CHECK(e.stat_error.back() == 0.0);
}

TEST_CASE("hypersurface increments are white across sites") {
  const std::size_t n = 20000;
  const double dt = 0.01;
  const CMatrix x = hypersurface_white_increments(6, n, dt, 8);
  const CMatrix cov = x.adjoint() * x / (static_cast<double>(n) * dt);
  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(cov(i, i).real() - 1.0) <= 4.0 / std::sqrt(static_cast<double>(n)) * 2.0);
    for (int j = 0; j < 6; ++j)
      if (i != j) CHECK(std::abs(cov(i, j)) <= 4.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("ensemble CSV and binary dump layouts") {
  const GKLSModel m = qubit(1.0, 1.0, 0.0);
  UnravelOptions o;
  o.n_traj = 3;
  o.seed = 4;
  o.record_stride = 250;
  o.keep_states = true;
  const auto e = unravel_linear(m, excited(), 0.5, o);
  std::ostringstream csv;
  write_ensemble_csv(csv, e);
  std::istringstream in(csv.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,re_rho_00,im_rho_00,re_rho_01,im_rho_01,re_rho_10,im_rho_10,re_rho_11,im_rho_11,trace,stat_error");

  const auto path = std::filesystem::temp_directory_path() / "relclock_dump_test.bin";
  write_trajectory_dump(path, e);
  std::ifstream bin(path, std::ios::binary);
  char magic[4];
  bin.read(magic, 4);
  CHECK(std::string(magic, 4) == "RCTR");
  std::uint32_t version = 0;
  std::uint64_t nt = 0, ntraj = 0, dim = 0;
  bin.read(reinterpret_cast<char*>(&version), 4);
  bin.read(reinterpret_cast<char*>(&nt), 8);
  bin.read(reinterpret_cast<char*>(&ntraj), 8);
  bin.read(reinterpret_cast<char*>(&dim), 8);
  CHECK(version == 1);
  CHECK(nt == e.times.size());
  CHECK(ntraj == 3);
  CHECK(dim == 2);
  // second time row, trajectory 1, component 0
  bin.seekg(static_cast<std::streamoff>(4 + 4 + 24 + (1 * 3 * 2 + 1 * 2) * 8));
  float re = 0, im = 0;
  bin.read(reinterpret_cast<char*>(&re), 4);
  bin.read(reinterpret_cast<char*>(&im), 4);
  CHECK(re == Approx(e.states[1][1](0).real()).epsilon(1e-6));
  CHECK(im == Approx(e.states[1][1](0).imag()).epsilon(1e-6));
  std::filesystem::remove(path);
}
