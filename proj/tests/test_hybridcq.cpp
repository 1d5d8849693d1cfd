#include "doctest.h"

#include <algorithm>
#include <random>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "relclock/errors.hpp"
#include "relclock/hybridcq.hpp"

using namespace relclock;
using doctest::Approx;

namespace {

CMatrix scalar(double v) { return CMatrix::Constant(1, 1, v); }

CQKernels scalar_kernels(double d0, double d1, double d2) { return {scalar(d0), scalar(d1), scalar(d2)}; }

CMatrix pauli_x() { CMatrix m = CMatrix::Zero(2, 2); m(0, 1) = 1; m(1, 0) = 1; return m; }
CMatrix pauli_z() { CMatrix m = CMatrix::Zero(2, 2); m(0, 0) = 1; m(1, 1) = -1; return m; }
CMatrix plus_state() { return CMatrix::Constant(2, 2, 0.5); }
CMatrix excited() { CMatrix m = CMatrix::Zero(2, 2); m(0, 0) = 1; return m; }

CQModel dephasing_model(CMatrix h0 = CMatrix::Zero(2, 2), CMatrix h1 = CMatrix()) {
  return {std::move(h0), std::move(h1), {pauli_z()}};
}

double z_mean(const HybridState& s) {
  double m = 0.0;
  for (std::size_t i = 0; i < s.blocks.size(); ++i) m += s.z_grid[i] * s.blocks[i].trace().real();
  return m / s.total_trace();
}

double z_variance(const HybridState& s) {
  const double m = z_mean(s);
  double v = 0.0;
  for (std::size_t i = 0; i < s.blocks.size(); ++i) v += std::pow(s.z_grid[i] - m, 2) * s.blocks[i].trace().real();
  return v / s.total_trace();
}

double trace_distance(const CMatrix& a, const CMatrix& b) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * ((a - b) + (a - b).adjoint()));
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

CMatrix random_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> n;
  CMatrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = Complex(n(rng), n(rng));
  return m;
}

}  // namespace

TEST_CASE("trade-off verdicts") {
  const auto boundary = tradeoff_check(scalar_kernels(2, 2, 1));
  CHECK(boundary.verdict == TradeoffVerdict::satisfied);
  CHECK(std::abs(boundary.margin) <= 1e-14);

  const auto bad = tradeoff_check(scalar_kernels(1, 2, 1));
  CHECK(bad.verdict == TradeoffVerdict::violated);
  CHECK(bad.margin == Approx(-2.0));

  CQKernels free{CMatrix::Identity(2, 2) * 0.3, CMatrix::Zero(1, 2), scalar(0.7)};
  CHECK(tradeoff_check(free).verdict == TradeoffVerdict::satisfied);
  CHECK(tradeoff_check(free).margin == Approx(1.4));

  // backaction outside the support of d0
  CQKernels leak{CMatrix::Zero(2, 2), CMatrix::Constant(1, 2, 1.0), scalar(10.0)};
  leak.d0(0, 0) = 1.0;
  const auto lr = tradeoff_check(leak);
  CHECK(lr.verdict == TradeoffVerdict::range_violation);
  CHECK_FALSE(lr.range_ok);

  const auto j = nlohmann::json::parse(tradeoff_json(bad));
  CHECK(j["verdict"] == "violated");
  CHECK(j["range_ok"] == true);
  CHECK(j["margin"].get<double>() == Approx(-2.0));

  CHECK_THROWS_AS(tradeoff_check({scalar(-1), scalar(0), scalar(1)}), ConstructionError);
  CHECK_THROWS_AS(tradeoff_check({scalar(1), CMatrix::Zero(2, 1), scalar(1)}), ConstructionError);
}

TEST_CASE("without backaction the clock diffuses with variance 2 d2 t") {
  const auto k = scalar_kernels(1.0, 0.0, 1.0);
  const CQModel m = dephasing_model(0.5 * pauli_z());
  const HybridState s0 = make_hybrid_state(-8.0, 8.0, 128, plus_state(), 0.01);
  CHECK(z_variance(s0) == 0.0);
  const HybridState s1 = cq_evolve_grid(k, m, s0, 1.0, 0.002);
  CHECK(z_variance(s1) == Approx(2.0).epsilon(0.02));
  CHECK(std::abs(s1.total_trace() - 1.0) <= 1e-8);
  // quantum marginal is the GKLS dephasing result, <sigma_x> = e^{-2 d0 t} cos(t)
  const CMatrix rho = s1.quantum_marginal();
  CHECK((pauli_x() * rho).trace().real() == Approx(std::exp(-2.0) * std::cos(1.0)).epsilon(1e-6));
}

TEST_CASE("zero kernels give unitary per-cell evolution") {
  const CQKernels k = scalar_kernels(0.0, 0.0, 0.0);
  const CQModel m = dephasing_model(0.5 * pauli_x(), 0.3 * pauli_z());
  CMatrix rho0 = CMatrix::Zero(2, 2);
  rho0(0, 0) = 0.8;
  rho0(1, 1) = 0.2;
  rho0(0, 1) = 0.1;
  rho0(1, 0) = 0.1;
  const HybridState s0 = make_hybrid_state(-3.0, 3.0, 16, rho0, 0.0, 1.0);
  const HybridState s1 = cq_evolve_grid(k, m, s0, 2.0, 0.01);
  for (std::size_t i = 0; i < s0.blocks.size(); ++i) {
    Eigen::SelfAdjointEigenSolver<CMatrix> a(s0.blocks[i]), b(s1.blocks[i]);
    CHECK((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("boundary kernels: dephasing at 2 d0 and state-conditioned drift") {
  const auto k = scalar_kernels(2.0, 2.0, 1.0);
  const CQModel m = dephasing_model();
  const HybridState s0 = make_hybrid_state(-12.0, 12.0, 128, plus_state(), 0.05);
  for (double t : {0.5, 1.0}) {
    double seen = 0.0;
    const HybridState s = cq_evolve_grid(k, m, s0, t, 0.004, &seen);
    const double sx = (pauli_x() * s.quantum_marginal()).trace().real();
    CHECK(sx == Approx(std::exp(-2.0 * 2.0 * t)).epsilon(0.05));
    CHECK(seen >= -1e-6);
    // the excited and ground populations drift at +-2 d1
    double me = 0.0, mg = 0.0, pe = 0.0, pg = 0.0;
    for (std::size_t i = 0; i < s.blocks.size(); ++i) {
      me += s.z_grid[i] * s.blocks[i](0, 0).real();
      pe += s.blocks[i](0, 0).real();
      mg += s.z_grid[i] * s.blocks[i](1, 1).real();
      pg += s.blocks[i](1, 1).real();
    }
    const double z_start = s0.z_grid[static_cast<std::size_t>((0.05 + 12.0) / s0.cell_width())];
    CHECK(me / pe - z_start == Approx(4.0 * t).epsilon(0.02));
    CHECK(mg / pg - z_start == Approx(-4.0 * t).epsilon(0.02));
  }
}

TEST_CASE("positivity sentinel") {
  const CQModel m = dephasing_model();
  const HybridState s0 = make_hybrid_state(-8.0, 8.0, 64, plus_state(), 0.1);
  double bad = 0.0, good = 0.0;
  cq_evolve_grid(scalar_kernels(1.0, 2.0, 1.0), m, s0, 1.0, 0.01, &bad);
  cq_evolve_grid(scalar_kernels(2.0, 2.0, 1.0), m, s0, 1.0, 0.01, &good);
  CHECK(bad <= -1e-4);
  CHECK(good >= -1e-6);
}

TEST_CASE("trace conservation and positivity for random valid kernels") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix g = random_matrix(rng, 2, 2);
    CQKernels k;
    k.d0 = g * g.adjoint() * 0.3;
    k.d1 = random_matrix(rng, 1, 2) * 0.5;
    const double q = (k.d1 * k.d0.inverse() * k.d1.adjoint())(0, 0).real();
    k.d2 = scalar(0.5 * q + u(rng));
    REQUIRE(tradeoff_check(k).verdict == TradeoffVerdict::satisfied);
    CQModel m;
    const CMatrix h = random_matrix(rng, 2, 2);
    m.h0 = 0.5 * (h + h.adjoint());
    m.h1 = 0.1 * pauli_z();
    m.lindblad = {random_matrix(rng, 2, 2) * 0.5, random_matrix(rng, 2, 2) * 0.5};
    const HybridState s0 = make_hybrid_state(-4.0, 4.0, 32, plus_state(), 0.0, 0.7);
    const double dt = std::min(0.2 * std::pow(8.0 / 32, 2) / k.d2(0, 0).real(), 0.01);
    double seen = 0.0;
    HybridState s;
    try {
      s = cq_evolve_grid(k, m, s0, 1.0, dt, &seen);
    } catch (const StepSizeError&) {
      s = cq_evolve_grid(k, m, s0, 1.0, dt / 10, &seen);
    }
    CHECK(std::abs(s.total_trace() - 1.0) <= 1e-8);
    CHECK(seen >= -1e-6);
  }
}

TEST_CASE("Strang steps converge at second order") {
  const auto k = scalar_kernels(1.0, 0.5, 0.5);
  const CQModel m = dephasing_model(0.5 * pauli_x(), 0.5 * pauli_z());
  const HybridState s0 = make_hybrid_state(-6.0, 6.0, 48, excited(), 0.0, 0.8);
  const auto a = cq_evolve_grid(k, m, s0, 1.0, 0.01);
  const auto b = cq_evolve_grid(k, m, s0, 1.0, 0.005);
  const auto c = cq_evolve_grid(k, m, s0, 1.0, 0.0025);
  double dab = 0.0, dbc = 0.0;
  for (std::size_t i = 0; i < s0.blocks.size(); ++i) {
    dab += (a.blocks[i] - b.blocks[i]).squaredNorm();
    dbc += (b.blocks[i] - c.blocks[i]).squaredNorm();
  }
  CHECK(std::sqrt(dab / dbc) == Approx(4.0).epsilon(0.15));
}

TEST_CASE("grid evolver preconditions") {
  const CQModel m = dephasing_model();
  const HybridState s0 = make_hybrid_state(-8.0, 8.0, 64, plus_state(), 0.1);
  CHECK_THROWS_AS(cq_evolve_grid(scalar_kernels(1, 0, 1), m, s0, 1.0, 0.02), StepSizeError);
  CHECK_THROWS_AS(cq_evolve_grid(scalar_kernels(100, 0, 0), m, s0, 1.0, 0.01), StepSizeError);
  CQKernels two{scalar(1), CMatrix::Zero(2, 1), CMatrix::Identity(2, 2)};
  CHECK_THROWS_AS(cq_evolve_grid(two, m, s0, 1.0, 0.01), UnsupportedError);
  CHECK_THROWS_AS(make_hybrid_state(0.0, 1.0, 8, plus_state(), 2.0), DomainError);
}

TEST_CASE("unraveled marginals match the grid evolver") {
  const auto k = scalar_kernels(1.0, 1.0, 1.0);
  const CQModel m = dephasing_model(0.5 * pauli_x(), 0.5 * pauli_z());
  const HybridState s0 = make_hybrid_state(-10.0, 10.0, 121, excited(), 0.0);
  const HybridState grid = cq_evolve_grid(k, m, s0, 1.0, 0.005);
  const auto u = cq_unravel(k, m, excited(), 0.0, -10.0, 10.0, 121, 1.0, 1e-3, 10000, 42);
  CHECK(trace_distance(u.marginal_quantum, grid.quantum_marginal()) <= std::max(0.03, 5.0 * u.stat_error));
  double mean_u = 0.0, var_u = 0.0;
  for (double z : u.z_final) mean_u += z / u.z_final.size();
  for (double z : u.z_final) var_u += (z - mean_u) * (z - mean_u) / (u.z_final.size() - 1);
  CHECK(std::abs(mean_u - z_mean(grid)) <= 5.0 * std::sqrt(var_u / u.z_final.size()));
  CHECK(var_u == Approx(z_variance(grid)).epsilon(0.05));
}

TEST_CASE("unraveled clock diffusion is Gaussian") {
  const auto k = scalar_kernels(0.5, 0.0, 5.0);
  const CQModel m = dephasing_model(0.5 * pauli_z());
  const std::size_t n = 10000;
  auto u = cq_unravel(k, m, plus_state(), 0.0, -40.0, 40.0, 80, 1.0, 0.05, n, 9);
  std::sort(u.z_final.begin(), u.z_final.end());
  const double sd = std::sqrt(2.0 * 5.0 * 1.0);
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cdf = 0.5 * std::erfc(-u.z_final[i] / (sd * std::sqrt(2.0)));
    ks = std::max({ks, std::abs(cdf - static_cast<double>(i) / n), std::abs(cdf - static_cast<double>(i + 1) / n)});
  }
  CHECK(ks <= 1.6 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("deterministic limit and refusal") {
  const CQModel m = dephasing_model(0.5 * pauli_x());
  const auto u = cq_unravel(scalar_kernels(1.0, 0.0, 0.0), m, excited(), 1.5, -5.0, 5.0, 10, 0.5, 1e-3, 50, 3);
  for (double z : u.z_final) CHECK(z == 1.5);
  CHECK(u.stat_error <= 1e-7);
  CHECK(u.z_histogram[6] == Approx(1.0));
  CHECK_THROWS_AS(cq_unravel(scalar_kernels(1.0, 2.0, 1.0), m, excited(), 0.0, -5.0, 5.0, 10, 0.5, 1e-3, 50, 3),
                  PositivityError);
}

TEST_CASE("hybrid snapshot CSV") {
  const HybridState s = make_hybrid_state(-1.0, 1.0, 4, excited(), 0.0);
  std::ostringstream out;
  write_hybrid_csv(out, s);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "z,trace,re_00,im_00,re_01,im_01,re_10,im_10,re_11,im_11");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 4);
}
