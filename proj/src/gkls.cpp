#include "relclock/gkls.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "relclock/errors.hpp"

namespace relclock {

namespace {

CMatrix identity(std::size_t d) {
  return CMatrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
}

double frequency_tolerance(const CMatrix& h) { return 1e-9 * std::max(1.0, spectral_norm(h)); }

}  // namespace

void GKLSModel::validate() const {
  const auto d = hamiltonian.rows();
  if (d == 0 || hamiltonian.cols() != d) throw ConstructionError("gkls model: hamiltonian must be square");
  if (hermiticity_defect(hamiltonian) > 1e-12 * std::max(1.0, hamiltonian.cwiseAbs().maxCoeff())) {
    throw ConstructionError("gkls model: hamiltonian not Hermitian");
  }
  const CMatrix& hs = bohr_reference();
  if (hs.rows() != d || hs.cols() != d) throw ConstructionError("gkls model: system hamiltonian shape");
  if (hermiticity_defect(hs) > 1e-12 * std::max(1.0, hs.cwiseAbs().maxCoeff())) {
    throw ConstructionError("gkls model: system hamiltonian not Hermitian");
  }
  const auto n = static_cast<Eigen::Index>(jumps.size());
  if (kossakowski.matrix.rows() != n || kossakowski.matrix.cols() != n ||
      kossakowski.labels.size() != jumps.size()) {
    throw ConstructionError("gkls model: kossakowski block does not match the jump list");
  }
  const double hs_norm = spectral_norm(hs);
  for (std::size_t i = 0; i < jumps.size(); ++i) {
    const auto& j = jumps[i];
    if (j.op.rows() != d || j.op.cols() != d) throw ConstructionError("gkls model: jump shape");
    if (kossakowski.labels[i].alpha != j.alpha || kossakowski.labels[i].omega != j.omega) {
      throw ConstructionError("gkls model: kossakowski label " + std::to_string(i) +
                              " misaligned with its jump");
    }
    const double defect = (commutator(hs, j.op) - j.omega * j.op).norm();
    if (defect > 1e-10 * std::max(1.0, hs_norm * j.op.norm())) {
      std::ostringstream msg;
      msg << "gkls model: jump " << i << " is not a Bohr eigenoperator at omega " << j.omega
          << " (defect " << defect << ")";
      throw ConstructionError(msg.str());
    }
  }
  const CMatrix& k = kossakowski.matrix;
  const double scale = std::max(1.0, k.size() ? k.cwiseAbs().maxCoeff() : 0.0);
  if (n > 0 && hermiticity_defect(k) > 1e-12 * scale) {
    throw ConstructionError("gkls model: kossakowski block not Hermitian");
  }
  const double ftol = frequency_tolerance(hs);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      if (std::abs(jumps[static_cast<std::size_t>(a)].omega - jumps[static_cast<std::size_t>(b)].omega) > ftol &&
          std::abs(k(a, b)) > 1e-12 * scale) {
        throw ConstructionError("gkls model: rates couple distinct Bohr frequencies");
      }
    }
  }
  if (n > 0) {
    const double margin = min_hermitian_eigenvalue(k);
    if (margin < -1e-10 * std::max(1.0, std::abs(k.trace().real()))) {
      std::ostringstream msg;
      msg << "gkls model: kossakowski block not PSD (min eigenvalue " << margin << ")";
      throw ConstructionError(msg.str());
    }
  }
}

CMatrix Superoperator::apply(const CMatrix& rho) const {
  return unvectorize(matrix * vectorize(rho), dim);
}

CVector vectorize(const CMatrix& rho) {
  return Eigen::Map<const CVector>(rho.data(), rho.size());
}

CMatrix unvectorize(const CVector& v, std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  if (v.size() != d * d) throw DomainError("unvectorize: length is not dim^2");
  return Eigen::Map<const CMatrix>(v.data(), d, d);
}

Superoperator generator_from_rates(const CMatrix& hamiltonian, std::span<const CMatrix> ops,
                                   const CMatrix& kappa) {
  const auto d = static_cast<std::size_t>(hamiltonian.rows());
  const auto n = static_cast<Eigen::Index>(ops.size());
  if (kappa.rows() != n || kappa.cols() != n) throw ConstructionError("generator: kappa shape");
  const CMatrix id = identity(d);
  Superoperator s;
  s.dim = d;
  s.matrix = Complex(0.0, -1.0) * (kron(id, hamiltonian) - kron(hamiltonian.transpose(), id));
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const Complex k = kappa(a, b);
      if (k == Complex(0.0)) continue;
      const CMatrix& la = ops[static_cast<std::size_t>(a)];
      const CMatrix& lb = ops[static_cast<std::size_t>(b)];
      const CMatrix ba = lb.adjoint() * la;
      s.matrix += k * (kron(lb.conjugate(), la) - 0.5 * kron(id, ba) - 0.5 * kron(ba.transpose(), id));
    }
  }
  return s;
}

Superoperator build_generator(const GKLSModel& m) {
  m.validate();
  std::vector<CMatrix> ops;
  ops.reserve(m.jumps.size());
  for (const auto& j : m.jumps) ops.push_back(j.op);
  return generator_from_rates(m.hamiltonian, ops, m.kossakowski.matrix);
}

CMatrix choi_matrix(const Superoperator& s, double dt) {
  const auto d = static_cast<Eigen::Index>(s.dim);
  const CMatrix channel = (dt * s.matrix).exp();
  CMatrix j = CMatrix::Zero(d * d, d * d);
  // Column i + d*jj of the channel is Phi(|i><jj|) in column-stacked form.
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index jj = 0; jj < d; ++jj) {
      const CMatrix out = unvectorize(channel.col(i + d * jj), s.dim);
      j.block(i * d, jj * d, d, d) = out;
    }
  }
  return j;
}

ChoiVerdict cp_choi_check(const Superoperator& s, double dt, double tol) {
  if (!(dt >= 0.0)) throw DomainError("cp_choi_check: dt must be >= 0");
  if (dt * spectral_norm(s.matrix) > 1.0 + 1e-12) {
    throw DomainError("cp_choi_check: dt * ||L|| must be <= 1");
  }
  if (dt == 0.0) {
    // Identity channel: J = |Omega><Omega|, eigenvalues {d, 0, ..., 0}.
    return ChoiVerdict{true, s.dim > 1 ? 0.0 : 1.0};
  }
  const double lowest = min_hermitian_eigenvalue(choi_matrix(s, dt));
  return ChoiVerdict{lowest >= -tol, lowest};
}

void validate_density(const CMatrix& rho, std::size_t dim, double tol) {
  const auto d = static_cast<Eigen::Index>(dim);
  if (rho.rows() != d || rho.cols() != d) throw DomainError("density matrix: wrong dimension");
  if (hermiticity_defect(rho) > tol) throw DomainError("density matrix: not Hermitian");
  if (std::abs(rho.trace() - Complex(1.0)) > tol) throw DomainError("density matrix: trace != 1");
}

CMatrix evolve(const Superoperator& s, const CMatrix& rho0, double t) {
  if (!(t >= 0.0)) throw DomainError("evolve: t must be >= 0");
  validate_density(rho0, s.dim);
  if (t == 0.0) return rho0;
  const CMatrix propagator = (t * s.matrix).exp();
  return unvectorize(propagator * vectorize(rho0), s.dim);
}

CMatrix evolve(const GKLSModel& m, const CMatrix& rho0, double t) {
  return evolve(build_generator(m), rho0, t);
}

double stationarity_check(const GKLSModel& m, const CMatrix& rho) {
  return build_generator(m).apply(rho).norm();
}

CMatrix gibbs_state(const CMatrix& h, double beta) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const RVector e = es.eigenvalues();
  const double e0 = e.minCoeff();
  RVector w(e.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) w(i) = std::exp(-beta * (e(i) - e0));
  w /= w.sum();
  return es.eigenvectors() * w.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

std::vector<BohrComponent> bohr_decompose(const CMatrix& h, const CMatrix& a, double rel_tol) {
  if (h.rows() != h.cols() || a.rows() != h.rows() || a.cols() != h.cols()) {
    throw DomainError("bohr_decompose: shape mismatch");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const RVector e = es.eigenvalues();
  const CMatrix& v = es.eigenvectors();
  const double tol = rel_tol * std::max(1.0, spectral_norm(h));

  // Group degenerate eigenvalues (sorted ascending) into projectors.
  std::vector<double> levels;
  std::vector<std::vector<Eigen::Index>> members;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (levels.empty() || e(i) - levels.back() > tol) {
      levels.push_back(e(i));
      members.push_back({i});
    } else {
      members.back().push_back(i);
    }
  }
  std::vector<CMatrix> proj;
  for (const auto& idx : members) {
    CMatrix p = CMatrix::Zero(h.rows(), h.cols());
    for (auto i : idx) p += v.col(i) * v.col(i).adjoint();
    proj.push_back(p);
  }
  // Bin level differences.
  std::vector<BohrComponent> out;
  for (std::size_t x = 0; x < levels.size(); ++x) {
    for (std::size_t y = 0; y < levels.size(); ++y) {
      const double omega = levels[x] - levels[y];
      const CMatrix piece = proj[x] * a * proj[y];
      auto it = std::find_if(out.begin(), out.end(),
                             [&](const BohrComponent& c) { return std::abs(c.omega - omega) <= tol; });
      if (it == out.end()) {
        out.push_back({omega, piece});
      } else {
        it->op += piece;
      }
    }
  }
  const double scale = std::max(1.0, a.norm());
  std::erase_if(out, [&](const BohrComponent& c) { return c.op.norm() <= 1e-14 * scale; });
  std::sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.omega < r.omega; });
  return out;
}

GKLSModel model_from_couplings(const CMatrix& h_s, std::span<const CMatrix> couplings,
                               const CMatrix& cross_phases,
                               const std::function<double(double)>& rate,
                               const CMatrix& lamb_shift) {
  const auto nc = static_cast<Eigen::Index>(couplings.size());
  if (cross_phases.rows() != nc || cross_phases.cols() != nc) {
    throw ConstructionError("model_from_couplings: cross_phases must be n_couplings square");
  }
  GKLSModel m;
  m.system_hamiltonian = h_s;
  m.hamiltonian = lamb_shift.size() ? CMatrix(h_s + lamb_shift) : h_s;
  const double tol = frequency_tolerance(h_s);

  std::vector<std::vector<BohrComponent>> parts;
  std::vector<double> freqs;
  for (const auto& a : couplings) {
    parts.push_back(bohr_decompose(h_s, a));
    for (const auto& c : parts.back()) {
      if (std::none_of(freqs.begin(), freqs.end(), [&](double f) { return std::abs(f - c.omega) <= tol; })) {
        freqs.push_back(c.omega);
      }
    }
  }
  std::sort(freqs.begin(), freqs.end());
  for (double f : freqs) {
    for (std::size_t alpha = 0; alpha < parts.size(); ++alpha) {
      for (const auto& c : parts[alpha]) {
        if (std::abs(c.omega - f) <= tol) m.jumps.push_back({c.op, f, alpha});
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(m.jumps.size());
  m.kossakowski.matrix = CMatrix::Zero(n, n);
  std::map<double, double> rate_at;
  for (double f : freqs) rate_at[f] = rate(f);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ji = m.jumps[static_cast<std::size_t>(i)];
    m.kossakowski.labels.push_back({ji.alpha, ji.omega});
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& jj = m.jumps[static_cast<std::size_t>(j)];
      if (ji.omega != jj.omega) continue;
      m.kossakowski.matrix(i, j) = rate_at[ji.omega] *
                                   cross_phases(static_cast<Eigen::Index>(ji.alpha),
                                                static_cast<Eigen::Index>(jj.alpha));
    }
  }
  m.kossakowski.matrix = 0.5 * (m.kossakowski.matrix + m.kossakowski.matrix.adjoint()).eval();
  m.kossakowski.psd_margin = n ? min_hermitian_eigenvalue(m.kossakowski.matrix) : 0.0;
  m.validate();
  return m;
}

namespace {

void write_matrix(std::ostream& out, const CMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << (c ? " " : "") << m(r, c).real() << "," << m(r, c).imag();
    }
    out << "\n";
  }
}

std::string expect_word(std::istream& in, const char* word) {
  std::string tok;
  if (!(in >> tok) || tok != word) {
    throw ParseError(std::string("gkls model text: expected '") + word + "', got '" + tok + "'");
  }
  return tok;
}

CMatrix read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::string tok;
      if (!(in >> tok)) throw ParseError("gkls model text: truncated matrix");
      const auto comma = tok.find(',');
      if (comma == std::string::npos) throw ParseError("gkls model text: entry '" + tok + "' is not re,im");
      try {
        m(r, c) = Complex(std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1)));
      } catch (const std::exception&) {
        throw ParseError("gkls model text: bad number '" + tok + "'");
      }
    }
  }
  return m;
}

}  // namespace

void write_model(std::ostream& out, const GKLSModel& m) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(17);
  out << "relclock-gkls 1\n";
  out << "dim " << m.dim() << "\n";
  out << "hamiltonian\n";
  write_matrix(out, m.hamiltonian);
  if (m.system_hamiltonian.size()) {
    out << "system_hamiltonian\n";
    write_matrix(out, m.system_hamiltonian);
  } else {
    out << "system_hamiltonian none\n";
  }
  out << "jumps " << m.jumps.size() << "\n";
  for (const auto& j : m.jumps) {
    out << "jump " << j.alpha << " " << j.omega << "\n";
    write_matrix(out, j.op);
  }
  out << "kossakowski\n";
  write_matrix(out, m.kossakowski.matrix);
  out.flags(flags);
  out.precision(prec);
}

GKLSModel read_model(std::istream& in) {
  expect_word(in, "relclock-gkls");
  int version = 0;
  if (!(in >> version) || version != 1) throw ParseError("gkls model text: unsupported version");
  expect_word(in, "dim");
  long d = 0;
  if (!(in >> d) || d <= 0 || d > 64) throw ParseError("gkls model text: bad dimension");
  GKLSModel m;
  expect_word(in, "hamiltonian");
  m.hamiltonian = read_matrix(in, d, d);
  expect_word(in, "system_hamiltonian");
  const auto pos = in.tellg();
  std::string tok;
  in >> tok;
  if (tok != "none") {
    in.seekg(pos);
    m.system_hamiltonian = read_matrix(in, d, d);
  }
  expect_word(in, "jumps");
  long n = 0;
  if (!(in >> n) || n < 0) throw ParseError("gkls model text: bad jump count");
  for (long i = 0; i < n; ++i) {
    expect_word(in, "jump");
    JumpOperator j;
    if (!(in >> j.alpha >> j.omega)) throw ParseError("gkls model text: bad jump header");
    j.op = read_matrix(in, d, d);
    m.jumps.push_back(std::move(j));
  }
  expect_word(in, "kossakowski");
  m.kossakowski.matrix = read_matrix(in, n, n);
  for (const auto& j : m.jumps) m.kossakowski.labels.push_back({j.alpha, j.omega});
  m.kossakowski.psd_margin = n ? min_hermitian_eigenvalue(m.kossakowski.matrix) : 0.0;
  m.validate();
  return m;
}

void save_model(const std::filesystem::path& path, const GKLSModel& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_model(out, m);
}

GKLSModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_model(in);
}

}  // namespace relclock
