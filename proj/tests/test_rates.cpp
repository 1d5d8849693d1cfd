#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "relclock/errors.hpp"
#include "relclock/rates.hpp"

using namespace relclock;
using doctest::Approx;

namespace {

EnvironmentSpec vacuum(double g = 1.0, double m = 1.0) {
  EnvironmentSpec e;
  e.coupling_g = g;
  e.mass_E = m;
  return e;
}

EnvironmentSpec thermal(double beta) {
  EnvironmentSpec e;
  e.beta = beta;
  return e;
}

double tcl(double omega, double sigma, const EnvironmentSpec& env) {
  return kappa_tcl(RateQuery(omega, ClockKernel::gaussian(sigma), env));
}

}  // namespace

TEST_CASE("markov vacuum closed form") {
  const auto env = vacuum();
  CHECK(kappa_markov_vacuum(env, -2.0) == Approx(std::sqrt(3.0) / (2 * oracle::pi)).epsilon(1e-14));
  CHECK(kappa_markov_vacuum(env, -2.0) == Approx(0.2756644).epsilon(1e-7));
  CHECK(kappa_markov_vacuum(env, -1.0) == 0.0);
  CHECK(kappa_markov_vacuum(env, 0.5) == 0.0);
  // 2 pi j(-omega) = kappa_markov(omega)
  for (double w : {-1.2, -2.0, -7.5}) {
    CHECK(std::abs(2 * oracle::pi * vacuum_spectral_density(env, -w) - kappa_markov_vacuum(env, w)) <=
          1e-12 * kappa_markov_vacuum(env, w));
  }
}

TEST_CASE("tcl vacuum rate against an independent quadrature") {
  const auto env = vacuum();
  for (double sigma : {0.7, 2.0, 10.0}) {
    for (double w : {-3.0, -1.1, 0.0, 0.8}) {
      const double ref = oracle::kappa_vacuum_gauss(1, 1, sigma, w);
      const double got = tcl(w, sigma, env);
      CHECK(got >= 0.0);
      CHECK(std::abs(got - ref) <= 1e-8 * ref + 1e-300);
    }
  }
}

TEST_CASE("tcl vacuum examples") {
  const auto env = vacuum();
  const double k = tcl(-3.0, 10.0, env);
  CHECK(std::abs(k - std::sqrt(8.0) / (2 * oracle::pi)) <= 1e-3 * std::sqrt(8.0) / (2 * oracle::pi));
  CHECK(tcl(1.0, 5.0, env) <= 1e-10 * tcl(-3.0, 5.0, env));
  CHECK(tcl(-2.0, 1.0, vacuum(0.0)) == 0.0);
  CHECK_THROWS_AS(kappa_tcl_vacuum(RateQuery(-2.0, ClockKernel::gaussian(1.0), thermal(1.0))),
                  DomainError);
}

TEST_CASE("markov convergence is second order in sigma") {
  const auto env = vacuum();
  const double km = kappa_markov_vacuum(env, -3.0);
  std::vector<double> err;
  for (double sigma : {2.0, 5.0, 10.0, 20.0}) err.push_back(std::abs(tcl(-3.0, sigma, env) - km) / km);
  for (std::size_t i = 1; i < err.size(); ++i) CHECK(err[i] < err[i - 1]);
  CHECK(err[2] <= 1e-3);
  CHECK(err[3] <= 2.5e-4);
  CHECK(err[2] / err[3] == Approx(4.0).epsilon(0.2));
}

TEST_CASE("boosted vacuum rate") {
  // The rate is boost invariant; the Doppler-averaged route has to reproduce
  // the rest-frame value, and an independent 2D quadrature has to agree.
  for (double eta : {0.3, 1.0, -0.7}) {
    auto env = vacuum();
    env.rapidity = eta;
    for (double w : {-3.0, -0.5, 0.7}) {
      const double boosted = tcl(w, 2.0, env);
      const double rest = tcl(w, 2.0, vacuum());
      CHECK(std::abs(boosted - rest) <= 1e-8 * rest);
    }
  }
  auto env = vacuum();
  env.rapidity = 0.3;
  const double ref = oracle::kappa_vacuum_gauss_boosted(1, 1, 2.0, -2.0, 0.3, 4000, 400);
  CHECK(tcl(-2.0, 2.0, env) == Approx(ref).epsilon(1e-6));
}

TEST_CASE("coherent readout rates use the atomic spectrum") {
  const auto env = vacuum();
  const auto k = ClockKernel::coherent_readout(1.0, 0.5);
  const RateQuery q(-2.0, k, env);
  double ref = 0.0;
  const double p0 = std::exp(-1.0);
  double pn = p0;
  ref += 2 * oracle::pi * p0 * oracle::j_vacuum(1, 1, 2.0);
  for (int n = 1; n < 40; ++n) {
    pn *= 1.0 / n;
    ref += oracle::pi * pn * (oracle::j_vacuum(1, 1, 2.0 + 0.5 * n) + oracle::j_vacuum(1, 1, 2.0 - 0.5 * n));
  }
  CHECK(kappa_tcl(q) == Approx(ref).epsilon(1e-11));
}

TEST_CASE("tabulated kernels are refused by the rate integrals") {
  std::vector<double> s, w;
  for (int i = -50; i <= 50; ++i) {
    s.push_back(0.1 * i);
    w.push_back(std::exp(-0.5 * 0.01 * i * i));
  }
  const RateQuery q(-2.0, ClockKernel::tabulated(s, w), vacuum());
  CHECK_THROWS_AS(kappa_tcl(q), UnsupportedError);
}

TEST_CASE("rate query certifies the kernel") {
  std::vector<double> s, w;
  for (int i = -100; i <= 100; ++i) {
    s.push_back(0.01 * i);
    w.push_back(1.0 - 0.0001 * i * i);
  }
  CHECK_THROWS_AS(RateQuery(-2.0, ClockKernel::tabulated(s, w), vacuum()), PositivityError);
}

TEST_CASE("kms rates") {
  // beta = inf reduces to the vacuum rate.
  const RateQuery qv(-2.5, ClockKernel::gaussian(3.0), vacuum());
  CHECK(kappa_tcl_kms(qv) == kappa_tcl_vacuum(qv));

  // Against an independent quadrature of both terms.
  for (double w : {-2.0, 0.0, 2.0}) {
    const double sigma = 2.0;
    auto f = [&](double y) {
      const double e = std::cosh(y);
      const double n = oracle::bose(e, 1.0);
      return oracle::j_vacuum(1, 1, e) * std::sinh(y) *
             ((1 + n) * oracle::what_gauss(sigma, w + e) + n * oracle::what_gauss(sigma, w - e));
    };
    const double ref = oracle::simpson(f, 0.0, 5.0, 400000);
    CHECK(tcl(w, sigma, thermal(1.0)) == Approx(ref).epsilon(1e-8));
  }

  for (double sigma : {1.0, 3.0}) CHECK(tcl(0.0, sigma, thermal(1.0)) >= tcl(0.0, sigma, vacuum()));

  // Markov limit of the absorption line.
  CHECK(tcl(2.0, 40.0, thermal(1.0)) == Approx(0.0431462).epsilon(1e-3));

  auto boosted = thermal(1.0);
  boosted.rapidity = 0.2;
  CHECK_THROWS_AS(kappa_tcl_kms(RateQuery(-2.0, ClockKernel::gaussian(1.0), boosted)), UnsupportedError);
}

TEST_CASE("markov kms rates and detailed balance") {
  const auto env = thermal(1.0);
  CHECK(kappa_markov_kms(env, 2.0) == Approx(0.2756644 * 0.1565176).epsilon(1e-6));
  CHECK(kappa_markov_kms(env, 2.0) * std::exp(2.0) == Approx(kappa_markov_kms(env, -2.0)).epsilon(1e-12));
  CHECK(kappa_markov_kms(vacuum(), -2.0) == Approx(kappa_markov_vacuum(vacuum(), -2.0)).epsilon(1e-14));
  CHECK(kappa_markov_kms(env, 0.5) == 0.0);
  CHECK(kappa_markov_kms(env, -0.5) == 0.0);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ub(0.05, 5.0), uw(1.0, 20.0);
  for (int i = 0; i < 100; ++i) {
    const auto e = thermal(ub(rng));
    const double w = uw(rng);
    const double lhs = kappa_markov_kms(e, w) * std::exp(e.beta * w);
    CHECK(std::abs(lhs - kappa_markov_kms(e, -w)) <= 1e-12 * kappa_markov_kms(e, -w));
  }
}

TEST_CASE("finite sigma detailed balance improves with sigma") {
  const auto env = thermal(1.0);
  double prev = INFINITY;
  for (double sigma : {2.0, 5.0, 10.0, 20.0}) {
    const double dev = std::abs(tcl(2.0, sigma, env) * std::exp(2.0) / tcl(-2.0, sigma, env) - 1.0);
    CHECK(dev < prev);
    prev = dev;
  }
}

TEST_CASE("memory correction") {
  const auto env = vacuum();
  const RateQuery q(-3.0, ClockKernel::gaussian(20.0), env);
  CHECK(std::abs(delta_kappa_memory(q)) / kappa_markov_vacuum(env, -3.0) <= 1e-3);
  const RateQuery up(1.0, ClockKernel::gaussian(2.0), env);
  CHECK(delta_kappa_memory(up) == kappa_tcl(up));
  CHECK(delta_kappa_memory(up) >= 0.0);
  CHECK(delta_kappa_memory(RateQuery(-2.0, ClockKernel::gaussian(2.0), vacuum(0.0))) == 0.0);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uw(-6.0, 6.0), us(0.5, 20.0), ub(0.2, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double w = uw(rng);
    const double sigma = us(rng);
    const auto e = (i % 2) ? vacuum() : thermal(ub(rng));
    const RateQuery r(w, ClockKernel::gaussian(sigma), e);
    CHECK(kappa_markov(e, w) + delta_kappa_memory(r) >= 0.0);
  }
}

TEST_CASE("rates are nonnegative across random draws") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uw(-8.0, 8.0), us(0.3, 30.0), ub(0.1, 10.0), ug(0.0, 3.0),
      um(0.2, 3.0);
  for (int i = 0; i < 1000; ++i) {
    EnvironmentSpec e;
    e.coupling_g = ug(rng);
    e.mass_E = um(rng);
    if (i % 3 == 0) e.beta = ub(rng);
    const double w = uw(rng);
    const RateQuery q(w, ClockKernel::gaussian(us(rng)), e);
    CHECK(kappa_tcl(q) >= 0.0);
    CHECK(kappa_markov(e, w) >= 0.0);
  }
}

TEST_CASE("odd transform") {
  const Complex a = odd_transform_quadrature(1.0, 2.0);
  const Complex b = odd_transform_closed(1.0, 2.0);
  CHECK(std::abs(a - b) <= 1e-8 * std::abs(b));
  CHECK(b.real() == 0.0);
  // Independent closed form through the Dawson oracle.
  CHECK(b.imag() == Approx(-2 * std::sqrt(2.0) * oracle::dawson(2.0 / std::sqrt(2.0))).epsilon(1e-11));
}

TEST_CASE("lamb shift coefficient") {
  const auto k = ClockKernel::gaussian(1.0);
  CHECK(lamb_shift_coefficient(vacuum(0.0), k, 40.0).raw_value == 0.0);
  CHECK_THROWS_AS(lamb_shift_coefficient(vacuum(), k, 5.0), DomainError);
  CHECK_THROWS_AS(lamb_shift_coefficient(vacuum(), ClockKernel::coherent_readout(1, 1), 40.0),
                  UnsupportedError);

  const auto l40 = lamb_shift_coefficient(vacuum(), k, 40.0);
  const auto l80 = lamb_shift_coefficient(vacuum(), k, 80.0);
  const double slope = (l80.raw_value - l40.raw_value) / 40.0;
  const double analytic = 1.0 / (2 * oracle::pi * oracle::pi);
  CHECK(l40.analytic_slope == Approx(analytic).epsilon(1e-15));
  CHECK(std::abs(slope - analytic) <= 0.02 * analytic);

  // Raw value against an independent quadrature with the Dawson oracle.
  const double ref = oracle::simpson([](double y) {
    const double e = std::cosh(y);
    return 2 * std::sqrt(2.0) * oracle::j_vacuum(1, 1, e) * oracle::dawson(e / std::sqrt(2.0)) * std::sinh(y);
  }, 0.0, std::acosh(40.0), 4000);
  CHECK(l40.raw_value == Approx(ref).epsilon(1e-8));

  const auto l160 = lamb_shift_coefficient(vacuum(), k, 160.0);
  CHECK(std::abs(l160.subtracted_value - l80.subtracted_value) <
        std::abs(l80.subtracted_value - l40.subtracted_value));
}

TEST_CASE("kossakowski assembly") {
  const auto env = vacuum();
  const auto k = ClockKernel::gaussian(2.0);
  std::vector<RateQuery> one{RateQuery(-2.0, k, env)};
  const auto b1 = assemble_kossakowski(one, CMatrix::Identity(1, 1));
  CHECK(b1.matrix(0, 0).real() == Approx(kappa_tcl(one[0])).epsilon(1e-15));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 2 * oracle::pi);
  for (int t = 0; t < 100; ++t) {
    CVector f(2);
    f << 1.0, std::polar(1.0, u(rng));
    const CMatrix gram = f * f.adjoint();
    const auto b = assemble_kossakowski(one, gram);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(b.matrix);
    CHECK(es.eigenvalues()(0) >= -1e-12);
    CHECK(es.eigenvalues()(1) == Approx(2 * kappa_tcl(one[0])).epsilon(1e-12));
  }

  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> uw(-5.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    CMatrix a(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) a(i, j) = Complex(n01(rng), n01(rng));
    const CMatrix gram = a * a.adjoint();
    std::vector<RateQuery> qs;
    for (int i = 0; i < 5; ++i) qs.emplace_back(uw(rng), k, env);
    const auto b = assemble_kossakowski(qs, gram);
    CHECK(b.labels.size() == 20);
    CHECK((b.matrix - b.matrix.adjoint()).norm() <= 1e-12);
    CHECK(b.psd_margin >= -1e-10 * b.matrix.trace().real());
    CHECK(oracle::min_eig(b.matrix) >= -1e-10 * b.matrix.trace().real());
  }

  CMatrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(assemble_kossakowski(one, bad), ConstructionError);
  std::vector<RateQuery> dup{RateQuery(-2.0, k, env), RateQuery(-2.0, k, env)};
  CHECK_THROWS_AS(assemble_kossakowski(dup, CMatrix::Identity(1, 1)), ConstructionError);
  std::vector<RateQuery> mixed{RateQuery(-2.0, k, env), RateQuery(-1.0, ClockKernel::gaussian(1.0), env)};
  CHECK_THROWS_AS(assemble_kossakowski(mixed, CMatrix::Identity(1, 1)), ConstructionError);
}
