#include "relclock/hybridcq.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include <json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "relclock/errors.hpp"
#include "relclock/gkls.hpp"

namespace relclock {

namespace {

constexpr double kPsdTol = 1e-10;

// Hermitian pseudo-inverse with relative cutoff.
CMatrix hermitian_pinv(const CMatrix& m) {
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
  const double cut = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  Eigen::VectorXd inv = es.eigenvalues();
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv(i) = std::abs(inv(i)) > cut ? 1.0 / inv(i) : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
}

// Kraus operators sqrt(lambda_k) sum_m U_mk L_m of a PSD rate matrix; negative
// eigenvalues are dropped.
std::vector<CMatrix> channel_ops(const CMatrix& rates, const std::vector<CMatrix>& ops) {
  std::vector<CMatrix> out;
  if (rates.size() == 0) return out;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rates + rates.adjoint()));
  for (Eigen::Index k = 0; k < rates.rows(); ++k) {
    const double lam = es.eigenvalues()(k);
    if (lam <= 0.0) continue;
    CMatrix j = CMatrix::Zero(ops[0].rows(), ops[0].cols());
    for (std::size_t m = 0; m < ops.size(); ++m) j += es.eigenvectors()(static_cast<Eigen::Index>(m), k) * ops[m];
    out.push_back(std::sqrt(lam) * j);
  }
  return out;
}

// sum_m c_m L_m
CMatrix combine(const std::vector<CMatrix>& ops, const Eigen::Ref<const CVector>& c, Eigen::Index dim) {
  CMatrix out = CMatrix::Zero(dim, dim);
  for (std::size_t m = 0; m < ops.size(); ++m) out += c(static_cast<Eigen::Index>(m)) * ops[m];
  return out;
}

// Scalar quantities of the single-direction drift.
struct Drift {
  CVector u;         // d1^* as a column (coefficients of L_m in the drift)
  double d2 = 0.0;
  double q = 0.0;    // d1 pinv(d0) d1^dag
};

Drift single_direction(const CQKernels& k) {
  if (k.n_classical() != 1) throw UnsupportedError("hybrid evolution supports one classical direction");
  Drift d;
  d.u = k.d1.row(0).adjoint();
  d.d2 = k.d2(0, 0).real();
  d.q = (k.d1 * hermitian_pinv(k.d0) * k.d1.adjoint())(0, 0).real();
  return d;
}

}  // namespace

void CQKernels::validate() const {
  const Eigen::Index nl = d0.rows(), nc = d2.rows();
  if (d0.cols() != nl || d2.cols() != nc) throw ConstructionError("CQKernels: d0 and d2 must be square");
  if (d1.rows() != nc || d1.cols() != nl) throw ConstructionError("CQKernels: d1 must be n_classical x n_lindblad");
  for (const CMatrix* m : {&d0, &d2}) {
    if (m->size() == 0) continue;
    const double scale = std::max(1.0, m->cwiseAbs().maxCoeff());
    if (hermiticity_defect(*m) > 1e-12 * scale) throw ConstructionError("CQKernels: d0 and d2 must be Hermitian");
    if (min_hermitian_eigenvalue(*m) < -kPsdTol * scale) throw ConstructionError("CQKernels: d0 and d2 must be PSD");
  }
}

TradeoffReport tradeoff_check(const CQKernels& k) {
  k.validate();
  TradeoffReport r;
  const CMatrix p = hermitian_pinv(k.d0);
  const CMatrix m = 2.0 * k.d2 - k.d1 * p * k.d1.adjoint();
  r.margin = m.size() ? min_hermitian_eigenvalue(m) : 0.0;
  const Eigen::Index nl = k.d0.rows();
  const CMatrix leak = k.d1 * (CMatrix::Identity(nl, nl) - p * k.d0);
  const double scale = std::max(1.0, k.d1.size() ? k.d1.cwiseAbs().maxCoeff() : 0.0);
  r.range_ok = leak.size() == 0 || leak.cwiseAbs().maxCoeff() <= kPsdTol * scale;
  const double mscale = std::max(1.0, m.size() ? m.cwiseAbs().maxCoeff() : 0.0);
  if (!r.range_ok) {
    r.verdict = TradeoffVerdict::range_violation;
  } else if (r.margin < -kPsdTol * mscale) {
    r.verdict = TradeoffVerdict::violated;
  } else {
    r.verdict = TradeoffVerdict::satisfied;
  }
  return r;
}

const char* to_string(TradeoffVerdict v) noexcept {
  switch (v) {
    case TradeoffVerdict::satisfied: return "satisfied";
    case TradeoffVerdict::violated: return "violated";
    case TradeoffVerdict::range_violation: return "range_violation";
  }
  return "unknown";
}

std::string tradeoff_json(const TradeoffReport& r) {
  nlohmann::json j;
  j["margin"] = r.margin;
  j["range_ok"] = r.range_ok;
  j["verdict"] = to_string(r.verdict);
  return j.dump();
}

CMatrix CQModel::hamiltonian(double z) const {
  if (h1.size() == 0) return h0;
  return h0 + z * h1;
}

void CQModel::validate(const CQKernels& k) const {
  k.validate();
  const Eigen::Index d = h0.rows();
  if (d == 0 || h0.cols() != d) throw ConstructionError("CQModel: h0 must be square and non-empty");
  const double hs = std::max(1.0, h0.cwiseAbs().maxCoeff());
  if (hermiticity_defect(h0) > 1e-12 * hs) throw ConstructionError("CQModel: h0 must be Hermitian");
  if (h1.size() != 0) {
    if (h1.rows() != d || h1.cols() != d) throw ConstructionError("CQModel: h1 shape mismatch");
    if (hermiticity_defect(h1) > 1e-12 * std::max(1.0, h1.cwiseAbs().maxCoeff())) {
      throw ConstructionError("CQModel: h1 must be Hermitian");
    }
  }
  if (lindblad.size() != k.n_lindblad()) throw ConstructionError("CQModel: one Lindblad operator per d0 index");
  for (const auto& l : lindblad) {
    if (l.rows() != d || l.cols() != d) throw ConstructionError("CQModel: Lindblad operator shape mismatch");
  }
}

double HybridState::cell_width() const noexcept {
  return z_grid.empty() ? 0.0 : (z_max - z_min) / static_cast<double>(z_grid.size());
}

double HybridState::total_trace() const {
  CompensatedSum s;
  for (const auto& b : blocks) s.add(b.trace().real());
  return s.value();
}

CMatrix HybridState::quantum_marginal() const {
  CMatrix out = CMatrix::Zero(blocks.front().rows(), blocks.front().cols());
  for (const auto& b : blocks) out += b;
  return out;
}

std::vector<double> HybridState::z_distribution() const {
  std::vector<double> p;
  for (const auto& b : blocks) p.push_back(b.trace().real());
  return p;
}

double HybridState::min_block_eigenvalue() const {
  double m = kInf;
  for (const auto& b : blocks) m = std::min(m, min_hermitian_eigenvalue(0.5 * (b + b.adjoint())));
  return m;
}

HybridState make_hybrid_state(double z_min, double z_max, std::size_t n_cells, const CMatrix& rho0,
                              double z0, double width) {
  if (!(z_max > z_min) || n_cells < 2) throw DomainError("make_hybrid_state: need z_max > z_min and >= 2 cells");
  if (!(z0 >= z_min && z0 <= z_max)) throw DomainError("make_hybrid_state: z0 outside the window");
  validate_density(rho0, static_cast<std::size_t>(rho0.rows()), 1e-10);
  HybridState st;
  st.z_min = z_min;
  st.z_max = z_max;
  const double dz = (z_max - z_min) / static_cast<double>(n_cells);
  std::vector<double> w(n_cells, 0.0);
  for (std::size_t i = 0; i < n_cells; ++i) st.z_grid.push_back(z_min + (static_cast<double>(i) + 0.5) * dz);
  if (width <= 0.0) {
    const auto cell = std::min<std::size_t>(n_cells - 1, static_cast<std::size_t>((z0 - z_min) / dz));
    w[cell] = 1.0;
  } else {
    double total = 0.0;
    for (std::size_t i = 0; i < n_cells; ++i) {
      const double x = (st.z_grid[i] - z0) / width;
      w[i] = std::exp(-0.5 * x * x);
      total += w[i];
    }
    for (double& v : w) v /= total;
  }
  for (double v : w) st.blocks.push_back(v * rho0);
  return st;
}

HybridState cq_evolve_grid(const CQKernels& k, const CQModel& model, const HybridState& st,
                           double t, double dt, double* min_eigenvalue_seen) {
  model.validate(k);
  const Drift drift = single_direction(k);
  const std::size_t n = st.blocks.size();
  const auto d = static_cast<Eigen::Index>(model.dim());
  if (n < 2 || st.z_grid.size() != n) throw DomainError("cq_evolve_grid: malformed hybrid state");
  for (const auto& b : st.blocks) {
    if (b.rows() != d || b.cols() != d) throw DomainError("cq_evolve_grid: block dimension mismatch");
  }
  if (!(t >= 0.0) || !(dt > 0.0)) throw DomainError("cq_evolve_grid: need t >= 0 and dt > 0");
  const double dz = st.cell_width();
  if (drift.d2 > 0.0 && dt > 0.2 * dz * dz / drift.d2) {
    throw StepSizeError("cq_evolve_grid: dt exceeds 0.2 dz^2 / d2");
  }

  // Classical jumps and the part of d0 they leave to the quantum step.
  const bool jumps = drift.d2 > 0.0;
  const double a = jumps ? std::sqrt(drift.d2) / dz : 0.0;
  const CMatrix id = CMatrix::Identity(d, d);
  CMatrix b_op = CMatrix::Zero(d, d);
  CMatrix residual = k.d0;
  if (jumps) {
    b_op = combine(model.lindblad, drift.u / (2.0 * std::sqrt(drift.d2)), d);
    residual -= drift.u * drift.u.adjoint() / (2.0 * drift.d2);
  }
  const CMatrix k_plus = a * id + b_op;
  const CMatrix k_minus = a * id - b_op;
  const CMatrix loss_plus = 0.5 * k_plus.adjoint() * k_plus;
  const CMatrix loss_minus = 0.5 * k_minus.adjoint() * k_minus;
  const CMatrix drift_op = combine(model.lindblad, drift.u, d);  // A(Y) = D Y + Y D^dag

  auto classical_rhs = [&](const std::vector<CMatrix>& y, std::vector<CMatrix>& out) {
    parallel_for(n, [&](std::size_t i) {
      CMatrix r = CMatrix::Zero(d, d);
      if (jumps) {
        if (i > 0) {  // from i-1 via K_+, and i -> i-1 via K_-
          r += k_plus * y[i - 1] * k_plus.adjoint();
          r -= loss_minus * y[i] + y[i] * loss_minus;
        }
        if (i + 1 < n) {
          r += k_minus * y[i + 1] * k_minus.adjoint();
          r -= loss_plus * y[i] + y[i] * loss_plus;
        }
      } else {
        // central flux F_{i+1/2} = (A_i + A_{i+1}) / 2, zero at the walls
        auto flux = [&](std::size_t left) -> CMatrix {
          const CMatrix s = y[left] + y[left + 1];
          return 0.5 * (drift_op * s + s * drift_op.adjoint());
        };
        if (i + 1 < n) r -= flux(i) / dz;
        if (i > 0) r += flux(i - 1) / dz;
      }
      out[i] = r;
    });
  };
  const double op_b = spectral_norm(b_op);
  const double rhs_bound =
      jumps ? 4.0 * std::pow(a + op_b, 2) : 2.0 * spectral_norm(drift_op) / dz;

  // Per-cell quantum generators with the residual rates.
  std::vector<CMatrix> half_step(n);
  double max_gen = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Superoperator g = generator_from_rates(model.hamiltonian(st.z_grid[i]), model.lindblad, residual);
    max_gen = std::max(max_gen, spectral_norm(g.matrix));
  }
  if (dt * max_gen > 0.1) throw StepSizeError("cq_evolve_grid: dt * ||cell generator|| exceeds 0.1");

  const auto n_steps = static_cast<std::size_t>(std::ceil(t / dt - 1e-12));
  const double h = n_steps ? t / static_cast<double>(n_steps) : 0.0;
  parallel_for(n, [&](std::size_t i) {
    const Superoperator g = generator_from_rates(model.hamiltonian(st.z_grid[i]), model.lindblad, residual);
    half_step[i] = (0.5 * h * g.matrix).exp();
  });
  // exp(h G_c) by Taylor series on sub-steps with h_sub * bound <= 0.5
  const auto n_sub = static_cast<std::size_t>(std::max(1.0, std::ceil(h * rhs_bound / 0.5)));
  const double h_sub = n_sub ? h / static_cast<double>(n_sub) : 0.0;

  HybridState cur = st;
  auto quantum = [&](std::vector<CMatrix>& y) {
    parallel_for(n, [&](std::size_t i) {
      const CVector v = half_step[i] * vectorize(y[i]);
      y[i] = unvectorize(v, model.dim());
    });
  };
  std::vector<CMatrix> term(n), next(n);
  auto classical = [&](std::vector<CMatrix>& y) {
    if (!jumps && drift.u.isZero(0.0)) return;
    for (std::size_t s = 0; s < n_sub; ++s) {
      std::vector<CMatrix> acc = y;
      term = y;
      for (int order = 1; order <= 40; ++order) {
        classical_rhs(term, next);
        double norm = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          term[i] = next[i] * (h_sub / order);
          acc[i] += term[i];
          norm += term[i].squaredNorm();
          ref += acc[i].squaredNorm();
        }
        if (norm <= 1e-34 * ref) break;
      }
      y = std::move(acc);
    }
  };
  double seen = cur.min_block_eigenvalue();
  for (std::size_t step = 0; step < n_steps; ++step) {
    quantum(cur.blocks);
    classical(cur.blocks);
    quantum(cur.blocks);
    for (auto& b : cur.blocks) b = 0.5 * (b + b.adjoint());
    if (min_eigenvalue_seen) seen = std::min(seen, cur.min_block_eigenvalue());
  }
  if (min_eigenvalue_seen) *min_eigenvalue_seen = seen;
  return cur;
}

CQUnravelResult cq_unravel(const CQKernels& k, const CQModel& model, const CMatrix& rho0, double z0,
                           double z_min, double z_max, std::size_t n_cells, double t, double dt,
                           std::size_t n_traj, std::uint64_t seed) {
  model.validate(k);
  const Drift drift = single_direction(k);
  const TradeoffReport rep = tradeoff_check(k);
  if (rep.verdict != TradeoffVerdict::satisfied) {
    throw PositivityError("cq_unravel: trade-off fails, no CP unraveling exists", rep.margin);
  }
  const auto d = static_cast<Eigen::Index>(model.dim());
  validate_density(rho0, model.dim(), 1e-10);
  if (!(z_max > z_min) || n_cells < 1 || !(z0 >= z_min && z0 <= z_max)) {
    throw DomainError("cq_unravel: bad z window");
  }
  if (!(t >= 0.0) || !(dt > 0.0) || n_traj == 0) throw DomainError("cq_unravel: need t >= 0, dt > 0, n_traj >= 1");

  // Monitored channel J = sum_m (d1_m^* / c) L_m with c^2 = q; the rest of d0
  // (PSD by the trade-off) and the extra noise 2 d2 - q are unmonitored.
  const double c = std::sqrt(std::max(0.0, drift.q));
  const bool monitored = c > 0.0;
  CMatrix j_op = CMatrix::Zero(d, d);
  CMatrix rest = k.d0;
  if (monitored) {
    j_op = combine(model.lindblad, drift.u / c, d);
    rest -= drift.u * drift.u.adjoint() / drift.q;
  }
  const std::vector<CMatrix> kraus = channel_ops(rest, model.lindblad);
  CMatrix decay = j_op.adjoint() * j_op;
  for (const auto& kr : kraus) decay += kr.adjoint() * kr;
  const double extra = std::sqrt(std::max(0.0, 2.0 * drift.d2 - drift.q));

  const auto n_steps = static_cast<std::size_t>(std::ceil(t / dt - 1e-12));
  const double h = n_steps ? t / static_cast<double>(n_steps) : 0.0;
  const double sqrt_h = std::sqrt(h);
  const double width = z_max - z_min;

  std::vector<CMatrix> finals(n_traj);
  std::vector<double> z_final(n_traj);
  parallel_for(n_traj, [&](std::size_t r) {
    std::mt19937_64 rng(stream_seed(seed, r));
    std::normal_distribution<double> n01;
    CMatrix rho = rho0;
    double z = z0;
    for (std::size_t s = 0; s < n_steps; ++s) {
      const double dw = n01(rng) * sqrt_h;
      const double db = n01(rng) * sqrt_h;
      double dy = 0.0;
      if (monitored) dy = (j_op * rho).trace().real() * 2.0 * h + dw;
      const CMatrix m = CMatrix::Identity(d, d) +
                        (Complex(0.0, -1.0) * model.hamiltonian(z) - 0.5 * decay) * h + j_op * dy;
      CMatrix next = m * rho * m.adjoint();
      for (const auto& kr : kraus) next += h * (kr * rho * kr.adjoint());
      next = 0.5 * (next + next.adjoint());
      rho = next / next.trace().real();
      z += c * dy + extra * db;
      // reflect into the window
      while (z < z_min || z > z_max) {
        if (z < z_min) z = 2.0 * z_min - z;
        if (z > z_max) z = 2.0 * z_max - z;
      }
    }
    finals[r] = rho;
    z_final[r] = z;
  });

  CQUnravelResult out;
  out.marginal_quantum = CMatrix::Zero(d, d);
  const double dz = width / static_cast<double>(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) out.z_grid.push_back(z_min + (static_cast<double>(i) + 0.5) * dz);
  out.z_histogram.assign(n_cells, 0.0);
  std::vector<CompensatedComplexSum> sums(static_cast<std::size_t>(d * d));
  CompensatedSum sq;
  for (std::size_t r = 0; r < n_traj; ++r) {
    for (Eigen::Index i = 0; i < d * d; ++i) sums[static_cast<std::size_t>(i)].add(finals[r](i));
    sq.add(finals[r].squaredNorm());
    const auto cell = std::min<std::size_t>(n_cells - 1, static_cast<std::size_t>((z_final[r] - z_min) / dz));
    out.z_histogram[cell] += 1.0 / static_cast<double>(n_traj);
  }
  const double nt = static_cast<double>(n_traj);
  for (Eigen::Index i = 0; i < d * d; ++i) out.marginal_quantum(i) = sums[static_cast<std::size_t>(i)].value() / nt;
  const double var = std::max(0.0, sq.value() / nt - out.marginal_quantum.squaredNorm());
  out.stat_error = n_traj > 1 ? std::sqrt(var / (nt - 1.0)) : 0.0;
  out.z_final = std::move(z_final);
  return out;
}

void write_hybrid_csv(std::ostream& out, const HybridState& st) {
  const auto d = st.blocks.empty() ? 0 : st.blocks.front().rows();
  out << "z,trace";
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out << ",re_" << i << j << ",im_" << i << j;
  out << '\n' << std::setprecision(17);
  for (std::size_t c = 0; c < st.blocks.size(); ++c) {
    const CMatrix& b = st.blocks[c];
    out << st.z_grid[c] << ',' << b.trace().real();
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) out << ',' << b(i, j).real() << ',' << b(i, j).imag();
    out << '\n';
  }
}

}  // namespace relclock
