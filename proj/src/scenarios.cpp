#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "relclock/errors.hpp"
#include "relclock/gkls.hpp"
#include "relclock/hybridcq.hpp"
#include "relclock/integrability.hpp"
#include "relclock/langevin.hpp"
#include "relclock/rates.hpp"
#include "relclock/scenario.hpp"
#include "relclock/specfun.hpp"
#include "relclock/trajectories.hpp"

namespace relclock {

namespace {

using nlohmann::json;

struct Report {
  std::ostringstream csv;
  json outputs = json::object();
  json checks = json::object();
};

EnvironmentSpec environment(const ScenarioConfig& c) {
  EnvironmentSpec e;
  e.mass_E = c.real("environment.m_E");
  e.coupling_g = c.real("environment.g");
  e.beta = c.real("environment.beta");
  e.rapidity = c.real("environment.rapidity");
  e.validate();
  return e;
}

ClockKernel kernel(const ScenarioConfig& c) {
  if (c.text("kernel.type") == "coherent_readout") {
    return ClockKernel::coherent_readout(c.real("kernel.amplitude"), c.real("kernel.omega_c"));
  }
  return ClockKernel::gaussian(c.real("kernel.sigma"));
}

CMatrix matrix(const ScenarioConfig& c, const std::string& key) {
  const auto& v = c.list(key);
  const auto rows = static_cast<Eigen::Index>(v.at(0));
  const auto cols = static_cast<Eigen::Index>(v.size() - 1) / rows;
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v[static_cast<std::size_t>(1 + i * cols + j)];
  return m;
}

CMatrix sigma_z() {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 1;
  m(1, 1) = -1;
  return m;
}

CMatrix sigma_x() {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = 1;
  m(1, 0) = 1;
  return m;
}

CMatrix sigma_minus() {
  CMatrix m = CMatrix::Zero(2, 2);
  m(1, 0) = 1;
  return m;
}

CMatrix excited() {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 1;
  return m;
}

// Qubit H = omega0 sz / 2 with sigma_-/sigma_+ at kappa_tcl(-omega0), kappa_tcl(+omega0).
GKLSModel qubit_model(const EnvironmentSpec& env, const ClockKernel& k, double omega0) {
  const RateQuery q(-omega0, k, env);
  GKLSModel m;
  m.hamiltonian = 0.5 * omega0 * sigma_z();
  m.jumps = {{sigma_minus(), -omega0, 0}, {CMatrix(sigma_minus().adjoint()), omega0, 0}};
  m.kossakowski.labels = {{0, -omega0}, {0, omega0}};
  m.kossakowski.matrix = CMatrix::Zero(2, 2);
  m.kossakowski.matrix(0, 0) = kappa_tcl(q);
  m.kossakowski.matrix(1, 1) = kappa_tcl(q.with_omega(omega0));
  return m;
}

void write_density_row(std::ostream& out, double t, const CMatrix& rho) {
  out << t;
  for (Eigen::Index i = 0; i < rho.rows(); ++i)
    for (Eigen::Index j = 0; j < rho.cols(); ++j) out << ',' << rho(i, j).real() << ',' << rho(i, j).imag();
  out << ',' << rho.trace().real() << '\n';
}

void run_rates(const ScenarioConfig& c, Report& r) {
  const auto env = environment(c);
  const auto k = kernel(c);
  r.csv << "omega,sigma,beta,rapidity,kappa_tcl,kappa_markov,delta_kappa\n";
  bool nonneg = true, no_heating = true;
  double max_rate = 0.0;
  for (double w : c.list("rates.omega_grid")) {
    const double tcl = kappa_tcl(RateQuery(w, k, env));
    const double mk = kappa_markov(env, w);
    r.csv << w << ',' << k.width() << ',' << env.beta << ',' << env.rapidity << ',' << tcl << ',' << mk << ','
          << tcl - mk << '\n';
    nonneg = nonneg && tcl >= 0.0;
    if (env.is_vacuum() && w > -env.mass_E) no_heating = no_heating && mk == 0.0;
    max_rate = std::max(max_rate, tcl);
  }
  r.outputs["max_kappa_tcl"] = max_rate;
  r.checks["nonnegative"] = nonneg;
  if (env.is_vacuum()) r.checks["markov_no_heating"] = no_heating;
}

void run_lamb_shift(const ScenarioConfig& c, Report& r) {
  const auto env = environment(c);
  const auto ls = lamb_shift_coefficient(env, kernel(c), c.real("lamb_shift.cutoff"));
  r.csv << "cutoff,raw_value,subtracted_value,fitted_slope,analytic_slope\n";
  r.csv << ls.cutoff << ',' << ls.raw_value << ',' << ls.subtracted_value << ',' << ls.fitted_slope << ','
        << ls.analytic_slope << '\n';
  r.outputs["raw_value"] = ls.raw_value;
  r.outputs["subtracted_value"] = ls.subtracted_value;
  r.outputs["fitted_slope"] = ls.fitted_slope;
  r.outputs["analytic_slope"] = ls.analytic_slope;
  r.checks["tail_slope_within_5pct"] = std::abs(ls.fitted_slope - ls.analytic_slope) <= 0.05 * ls.analytic_slope;
}

void run_markov_limit(const ScenarioConfig& c, Report& r) {
  const auto env = environment(c);
  const double w = c.real("markov_limit.omega");
  const double km = kappa_markov(env, w);
  if (!(km > 0.0)) throw DomainError("markov_limit: omega must lie on the emission branch (kappa_markov > 0)");
  r.csv << "sigma,kappa_tcl,kappa_markov,rel_error\n";
  std::vector<double> sig = c.list("markov_limit.sigma_grid"), err;
  for (double s : sig) {
    const double k = kappa_tcl(RateQuery(w, ClockKernel::gaussian(s), env));
    err.push_back(std::abs(k - km) / km);
    r.csv << s << ',' << k << ',' << km << ',' << err.back() << '\n';
  }
  bool monotone = true;
  json orders = json::array();
  for (std::size_t i = 1; i < err.size(); ++i) {
    monotone = monotone && err[i] < err[i - 1];
    orders.push_back(std::log(err[i - 1] / err[i]) / std::log(sig[i] / sig[i - 1]));
  }
  const bool converged = monotone && err.back() <= 1e-3;
  r.outputs["observed_order"] = orders;
  r.outputs["final_rel_error"] = err.back();
  r.outputs["converged"] = converged;
  r.checks["converged"] = converged;
}

void run_kms(const ScenarioConfig& c, Report& r) {
  const auto env = environment(c);
  if (env.is_vacuum()) throw DomainError("kms: environment.beta must be finite");
  r.csv << "omega,sigma,k_plus,k_minus,detailed_balance_defect\n";
  double worst_markov = 0.0;
  bool monotone = true;
  for (double w : c.list("kms.omega_grid")) {
    const double a = std::abs(w);
    if (a < env.mass_E) throw DomainError("kms: |omega| must be >= m_E");
    const double kp = kappa_markov_kms(env, a), km = kappa_markov_kms(env, -a);
    const double dm = std::abs(kp * std::exp(env.beta * a) - km) / km;
    worst_markov = std::max(worst_markov, dm);
    r.csv << a << ",inf," << kp << ',' << km << ',' << dm << '\n';
    double prev = kInf;
    for (double s : c.list("kms.sigma_grid")) {
      const RateQuery q(a, ClockKernel::gaussian(s), env);
      const double tp = kappa_tcl(q), tm = kappa_tcl(q.with_omega(-a));
      const double d = std::abs(tp * std::exp(env.beta * a) / tm - 1.0);
      r.csv << a << ',' << s << ',' << tp << ',' << tm << ',' << d << '\n';
      monotone = monotone && d < prev;
      prev = d;
    }
  }
  r.outputs["max_markov_defect"] = worst_markov;
  r.checks["markov_detailed_balance"] = worst_markov <= 1e-12;
  r.checks["finite_sigma_deviation_decreasing"] = monotone;
}

void run_gkls(const ScenarioConfig& c, Report& r) {
  const auto env = environment(c);
  const std::string file = c.text("gkls.model_file");
  const GKLSModel m = file.empty() ? qubit_model(env, kernel(c), c.real("gkls.omega0")) : load_model(file);
  m.validate();
  const Superoperator s = build_generator(m);
  const std::size_t n = std::max<std::size_t>(2, c.count("gkls.n_times"));
  const double tf = c.real("gkls.t_final");
  CMatrix rho0 = CMatrix::Zero(static_cast<Eigen::Index>(m.dim()), static_cast<Eigen::Index>(m.dim()));
  rho0(0, 0) = 1.0;
  r.csv << "t";
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) r.csv << ",re_rho_" << i << j << ",im_rho_" << i << j;
  r.csv << ",trace\n";
  double trace_dev = 0.0, min_eig = kInf;
  CMatrix last;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = tf * static_cast<double>(i) / static_cast<double>(n - 1);
    last = evolve(s, rho0, t);
    write_density_row(r.csv, t, last);
    trace_dev = std::max(trace_dev, std::abs(last.trace().real() - 1.0));
    min_eig = std::min(min_eig, min_hermitian_eigenvalue(0.5 * (last + last.adjoint())));
  }
  const double norm = spectral_norm(s.matrix);
  const auto cp = cp_choi_check(s, norm > 0.0 ? std::min(0.1, 1.0 / norm) : 0.1);
  r.outputs["dim"] = m.dim();
  r.outputs["min_choi_eigenvalue"] = cp.min_choi_eigenvalue;
  r.outputs["final_excited_population"] = last(0, 0).real();
  r.outputs["max_trace_deviation"] = trace_dev;
  r.checks["completely_positive"] = cp.completely_positive;
  r.checks["trace_preserved"] = trace_dev <= 1e-10;
  r.checks["positive_states"] = min_eig >= -1e-10;
}

void run_langevin(const ScenarioConfig& c, Report& r) {
  const auto env = environment(c);
  const double e = c.real("langevin.energy");
  const ModeParams p = mode_params_from_kms(env, e);
  ModeMoments m0;
  m0.mean_a = 1.0;
  m0.occupation_n = 1.0;
  m0.anomalous_m = 1.0;
  std::vector<double> taus;
  double worst = 0.0;
  for (double x : c.list("langevin.gamma_tau_grid")) {
    taus.push_back(x / p.gamma);
    worst = std::max(worst, ccr_defect(p, taus.back()));
  }
  write_moment_csv(r.csv, p, m0, taus);
  r.outputs["gamma"] = p.gamma;
  r.outputs["nbar"] = p.nbar;
  r.outputs["max_ccr_defect"] = worst;
  r.checks["ccr_preserved"] = worst <= 1e-12;
  if (!env.is_vacuum()) {
    const FdrCheck f = stationary_fdr_check(p, env.beta);
    const double nb = specfun::bose_occupation(e, env.beta);
    r.outputs["fdr_deviation"] = f.deviation;
    r.outputs["occupation_vs_bose"] = std::abs(p.nbar - nb);
    r.checks["fdr"] = f.deviation <= 1e-9;
    r.checks["thermal_occupation"] = std::abs(p.nbar - nb) <= 1e-9;
  }
}

void run_unravel(const ScenarioConfig& c, Report& r) {
  const auto env = environment(c);
  const GKLSModel m = qubit_model(env, kernel(c), c.real("unravel.omega0"));
  UnravelOptions o;
  o.dt = c.real("unravel.dt");
  o.n_traj = c.count("unravel.n_traj");
  o.seed = *c.seed;
  o.record_stride = c.count("unravel.record_stride");
  const auto e = unravel_linear(m, excited(), c.real("unravel.t_final"), o);
  write_ensemble_csv(r.csv, e);
  const Superoperator s = build_generator(m);
  bool matches = true, trace_ok = true;
  double worst = 0.0;
  for (std::size_t i = 0; i < e.times.size(); ++i) {
    const double dev = (e.mean_state[i] - evolve(s, excited(), e.times[i])).norm();
    worst = std::max(worst, dev);
    matches = matches && dev <= std::max(0.02, 5.0 * e.stat_error[i]);
    trace_ok = trace_ok && std::abs(e.mean_state[i].trace().real() - 1.0) <= 3.0 * e.stat_error[i] + 1e-12;
  }
  const auto cmp = ensemble_compare(e, m, excited());
  r.outputs["max_deviation"] = worst;
  r.outputs["max_sigma_units"] = cmp.max_sigma_units;
  r.outputs["final_stat_error"] = e.stat_error.back();
  r.checks["matches_master_equation"] = matches;
  r.checks["mean_trace"] = trace_ok;
}

void run_noise(const ScenarioConfig& c, Report& r) {
  const auto env = environment(c);
  const std::size_t n = c.count("noise.n_grid");
  const double h = c.real("noise.spacing");
  std::vector<double> grid;
  for (std::size_t i = 0; i < n; ++i) grid.push_back(h * static_cast<double>(i));
  const NoiseField f = sample_colored_noise(env, kernel(c), grid, c.count("noise.n_real"), *c.seed);
  const CMatrix emp = sample_covariance(f);
  r.csv << "j,k,t_j,t_k,target_re,target_im,sample_re,sample_im\n";
  for (Eigen::Index j = 0; j < emp.rows(); ++j)
    for (Eigen::Index k = 0; k < emp.cols(); ++k) {
      r.csv << j << ',' << k << ',' << grid[static_cast<std::size_t>(j)] << ',' << grid[static_cast<std::size_t>(k)]
            << ',' << f.target_covariance(j, k).real() << ',' << f.target_covariance(j, k).imag() << ','
            << emp(j, k).real() << ',' << emp(j, k).imag() << '\n';
    }
  const double rel = (emp - f.target_covariance).norm() / f.target_covariance.norm();
  r.outputs["frobenius_rel_error"] = rel;
  r.outputs["clipped_eigenvalues"] = f.clipped_eigenvalues;
  r.outputs["most_negative_eigenvalue"] = f.most_negative_eigenvalue;
  r.checks["covariance_within_5pct"] = rel <= 0.05;
}

void run_curl(const ScenarioConfig& c, Report& r) {
  const auto env = environment(c);
  const std::size_t n = c.count("curl.n_sites");
  const double tilt = c.real("curl.tilt");
  const std::size_t x = c.count("curl.x"), y = c.count("curl.y");
  SliceLattice l;
  for (std::size_t i = 0; i < n; ++i) l.heights.push_back(static_cast<double>(i) * std::tanh(tilt));
  l.omega0 = c.real("curl.omega0");
  SliceLattice null_lattice = l;
  l.rate_mode = RateMode::normal_sampled;
  null_lattice.rate_mode = RateMode::normal_independent;
  const double eps = c.real("curl.eps");
  std::vector<CurlSweepRow> rows;
  double worst_null = 0.0, min_sampled = kInf;
  bool monotone = true;
  for (double s : c.list("curl.sigma_grid")) {
    const auto k = ClockKernel::gaussian(s);
    const CurlResidual sampled = functional_curl_residual(l, x, y, env, k, eps);
    const CurlResidual null_case = functional_curl_residual(null_lattice, x, y, env, k, eps);
    if (!rows.empty()) monotone = monotone && sampled.value < rows.back().curl.value;
    rows.push_back({s, tilt, sampled});
    worst_null = std::max(worst_null, null_case.value);
    min_sampled = std::min(min_sampled, sampled.value);
  }
  write_curl_csv(r.csv, rows);
  r.outputs["null_residual_max"] = worst_null;
  r.outputs["sampled_residual_min"] = min_sampled;
  r.outputs["monotone_in_sigma"] = monotone;
  r.outputs["residual"] = rows.front().curl.value;
  r.checks["null_test"] = worst_null <= 1e-12;
  const bool adjacent = (x > y ? x - y : y - x) == 1;
  if (tilt == 0.0 || !adjacent) {
    r.checks["sampled_residual_vanishes"] = min_sampled <= 1e-12 && rows.back().curl.value <= 1e-12;
  } else {
    r.checks["violation_detected"] = min_sampled >= 1e-3;
  }
}

void run_boost(const ScenarioConfig& c, Report& r) {
  const auto env = environment(c);
  const double mass = c.real("boost.mass");
  if (!(mass > env.mass_E)) throw DomainError("boost: boost.mass must exceed environment.m_E");
  std::vector<BoostSweepRow> rows;
  std::vector<double> cov, geo;
  for (double n : c.list("boost.grid_sizes")) {
    const auto size = static_cast<std::size_t>(n);
    for (RateSource src : {RateSource::comoving_covariant, RateSource::geometric_normal}) {
      const auto m = make_momentum_grid(size, c.real("boost.y_max"), mass, env, src);
      const auto res = boost_interchange_residual(m, c.real("boost.d_rapidity"));
      rows.push_back({size, src, res});
      (src == RateSource::comoving_covariant ? cov : geo).push_back(res.residual);
    }
  }
  write_boost_csv(r.csv, rows);
  bool refines = true;
  for (std::size_t i = 1; i < cov.size(); ++i) refines = refines && cov[i - 1] / cov[i] >= 1.7;
  const double gmax = *std::max_element(geo.begin(), geo.end());
  const double gmin = *std::min_element(geo.begin(), geo.end());
  r.outputs["covariant_residuals"] = cov;
  r.outputs["geometric_residuals"] = geo;
  r.outputs["separation_at_finest"] = geo.back() / cov.back();
  r.checks["covariant_converges"] = refines;
  r.checks["geometric_plateau"] = (gmax - gmin) / gmax < 0.2;
  r.checks["separation_1e2"] = geo.back() >= 100.0 * cov.back();
}

void run_cq(const ScenarioConfig& c, Report& r) {
  const CQKernels k{matrix(c, "cq.d0"), matrix(c, "cq.d1"), matrix(c, "cq.d2")};
  if (k.d0.rows() != 1 || k.d1.size() != 1 || k.d2.size() != 1) {
    throw DomainError("cq: scenario uses scalar kernels (one Lindblad operator sigma_z)");
  }
  const TradeoffReport rep = tradeoff_check(k);
  const CQModel model{0.5 * c.real("cq.omega0") * sigma_z(), CMatrix(), {sigma_z()}};
  const HybridState s0 = make_hybrid_state(c.real("cq.z_min"), c.real("cq.z_max"), c.count("cq.n_cells"),
                                           CMatrix::Constant(2, 2, 0.5), c.real("cq.z0"));
  double seen = 0.0;
  const HybridState s = cq_evolve_grid(k, model, s0, c.real("cq.t_final"), c.real("cq.dt"), &seen);
  write_hybrid_csv(r.csv, s);
  const double trace_defect = std::abs(s.total_trace() - 1.0);
  r.outputs["tradeoff_margin"] = rep.margin;
  r.outputs["tradeoff_verdict"] = to_string(rep.verdict);
  r.outputs["min_block_eigenvalue"] = seen;
  r.outputs["trace_defect"] = trace_defect;
  r.outputs["sigma_x"] = (sigma_x() * s.quantum_marginal()).trace().real();
  r.checks["trace_conserved"] = trace_defect <= 1e-8;
  if (rep.verdict == TradeoffVerdict::satisfied) r.checks["positivity"] = seen >= -1e-6;
}

void run_tradeoff(const ScenarioConfig& c, Report& r) {
  const CQKernels k{matrix(c, "tradeoff.d0"), matrix(c, "tradeoff.d1"), matrix(c, "tradeoff.d2")};
  const TradeoffReport rep = tradeoff_check(k);
  r.csv << "margin,range_ok,verdict\n" << rep.margin << ',' << (rep.range_ok ? 1 : 0) << ',' << to_string(rep.verdict) << '\n';
  r.outputs = json::parse(tradeoff_json(rep));
}

json echo_inputs(const ScenarioConfig& c) {
  json in = json::object();
  for (const auto& [key, value] : c.values) {
    std::visit([&](const auto& v) { in[key] = v; }, value);
  }
  return in;
}

}  // namespace

RunOutcome run_scenario(const ScenarioConfig& c, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  RunOutcome out;
  const std::filesystem::path dir = options.output_dir ? *options.output_dir : c.output_path;
  out.csv_path = dir / (c.scenario + ".csv");
  out.json_path = dir / (c.scenario + ".json");

  json summary;
  summary["scenario"] = c.scenario;
  summary["config_hash"] = c.hash();
  summary["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  summary["inputs"] = echo_inputs(c);
  summary["version"] = version_string();

  Report r;
  r.csv << std::setprecision(17);
  try {
    static const std::map<std::string, void (*)(const ScenarioConfig&, Report&)> table{
        {"rates", run_rates},       {"lamb_shift", run_lamb_shift}, {"markov_limit", run_markov_limit},
        {"kms", run_kms},           {"gkls", run_gkls},             {"langevin", run_langevin},
        {"unravel", run_unravel},   {"noise", run_noise},           {"curl", run_curl},
        {"boost", run_boost},       {"cq", run_cq},                 {"tradeoff", run_tradeoff},
    };
    const auto it = table.find(c.scenario);
    if (it == table.end()) throw ParseError("scenario: unknown scenario '" + c.scenario + "'");
    it->second(c, r);
    bool all = true;
    for (const auto& [name, ok] : r.checks.items()) all = all && ok.get<bool>();
    out.exit_code = all ? 0 : 2;
  } catch (const std::exception& e) {
    out.exit_code = 1;
    out.error = c.scenario + ": " + e.what();
    summary["error"] = out.error;
  }
  summary["outputs"] = r.outputs;
  summary["checks"] = r.checks;
  summary["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.summary_json = summary.dump(2);

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (out.exit_code != 1) {
    std::ofstream csv(out.csv_path);
    csv << r.csv.str();
    if (!csv) {
      out.exit_code = 1;
      out.error = "cannot write " + out.csv_path.string();
    }
  }
  std::ofstream js(out.json_path);
  js << out.summary_json << '\n';
  if (!js && out.exit_code != 1) {
    out.exit_code = 1;
    out.error = "cannot write " + out.json_path.string();
  }
  if (!options.quiet) {
    std::cerr << "relclock " << c.scenario << ": exit " << out.exit_code << ", wrote " << out.json_path.string()
              << '\n';
  }
  return out;
}

}  // namespace relclock
