#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "relclock/errors.hpp"
#include "relclock/scenario.hpp"

namespace relclock {

namespace {

enum class Kind { real, count, integer_list, real_list, text, matrix };
enum class Dim { none, energy, time };

struct KeySpec {
  std::string key;
  Kind kind;
  Dim dim;
  std::optional<std::string> fallback;  // default in document syntax
};

const std::vector<KeySpec>& environment_keys() {
  static const std::vector<KeySpec> k{
      {"environment.m_E", Kind::real, Dim::none, "1"},
      {"environment.g", Kind::real, Dim::none, "1"},
      {"environment.beta", Kind::real, Dim::time, "inf"},
      {"environment.rapidity", Kind::real, Dim::none, "0"},
  };
  return k;
}

const std::vector<KeySpec>& kernel_keys() {
  static const std::vector<KeySpec> k{
      {"kernel.type", Kind::text, Dim::none, "gaussian"},
      {"kernel.sigma", Kind::real, Dim::time, "5/m_E"},
      {"kernel.amplitude", Kind::real, Dim::none, "1"},
      {"kernel.omega_c", Kind::real, Dim::energy, "1 m_E"},
  };
  return k;
}

struct Schema {
  std::vector<KeySpec> keys;
  bool kernel = false;
};

const std::map<std::string, Schema>& schemas() {
  static const std::map<std::string, Schema> s{
      {"rates", {{{"rates.omega_grid", Kind::real_list, Dim::energy, std::nullopt}}, true}},
      {"lamb_shift", {{{"lamb_shift.cutoff", Kind::real, Dim::energy, "40 m_E"}}, true}},
      {"markov_limit",
       {{{"markov_limit.omega", Kind::real, Dim::energy, "-3 m_E"},
         {"markov_limit.sigma_grid", Kind::real_list, Dim::time, "2/m_E, 5/m_E, 10/m_E, 20/m_E"}},
        false}},
      {"kms",
       {{{"kms.omega_grid", Kind::real_list, Dim::energy, std::nullopt},
         {"kms.sigma_grid", Kind::real_list, Dim::time, "2/m_E, 5/m_E, 10/m_E, 20/m_E"}},
        false}},
      {"gkls",
       {{{"gkls.omega0", Kind::real, Dim::energy, "2 m_E"},
         {"gkls.t_final", Kind::real, Dim::time, "10/m_E"},
         {"gkls.n_times", Kind::count, Dim::none, "21"},
         {"gkls.model_file", Kind::text, Dim::none, ""}},
        true}},
      {"langevin",
       {{{"langevin.energy", Kind::real, Dim::energy, "2 m_E"},
         {"langevin.gamma_tau_grid", Kind::real_list, Dim::none, "0:0.5:10"}},
        false}},
      {"unravel",
       {{{"unravel.omega0", Kind::real, Dim::energy, "2 m_E"},
         {"unravel.t_final", Kind::real, Dim::time, "1"},
         {"unravel.dt", Kind::real, Dim::time, "0.001"},
         {"unravel.n_traj", Kind::count, Dim::none, "10000"},
         {"unravel.record_stride", Kind::count, Dim::none, "50"}},
        true}},
      {"noise",
       {{{"noise.n_grid", Kind::count, Dim::none, "32"},
         {"noise.spacing", Kind::real, Dim::time, "0.25/m_E"},
         {"noise.n_real", Kind::count, Dim::none, "20000"}},
        true}},
      {"curl",
       {{{"curl.n_sites", Kind::count, Dim::none, "4"},
         {"curl.tilt", Kind::real, Dim::none, "0.3"},
         {"curl.sigma_grid", Kind::real_list, Dim::time, "1/m_E, 2/m_E, 5/m_E, 10/m_E"},
         {"curl.x", Kind::count, Dim::none, "1"},
         {"curl.y", Kind::count, Dim::none, "2"},
         {"curl.omega0", Kind::real, Dim::energy, "3 m_E"},
         {"curl.eps", Kind::real, Dim::none, "0.0001"}},
        false}},
      {"boost",
       {{{"boost.grid_sizes", Kind::integer_list, Dim::none, "16, 32, 64"},
         {"boost.y_max", Kind::real, Dim::none, "6"},
         {"boost.mass", Kind::real, Dim::energy, "2 m_E"},
         {"boost.d_rapidity", Kind::real, Dim::none, "0.001"}},
        false}},
      {"cq",
       {{{"cq.d0", Kind::matrix, Dim::none, "2"},
         {"cq.d1", Kind::matrix, Dim::none, "2"},
         {"cq.d2", Kind::matrix, Dim::none, "1"},
         {"cq.omega0", Kind::real, Dim::none, "0"},
         {"cq.z_min", Kind::real, Dim::none, "-8"},
         {"cq.z_max", Kind::real, Dim::none, "8"},
         {"cq.z0", Kind::real, Dim::none, "0.1"},
         {"cq.n_cells", Kind::count, Dim::none, "64"},
         {"cq.t_final", Kind::real, Dim::none, "1"},
         {"cq.dt", Kind::real, Dim::none, "0.01"}},
        false}},
      {"tradeoff",
       {{{"tradeoff.d0", Kind::matrix, Dim::none, std::nullopt},
         {"tradeoff.d1", Kind::matrix, Dim::none, std::nullopt},
         {"tradeoff.d2", Kind::matrix, Dim::none, std::nullopt}},
        false}},
  };
  return s;
}

[[noreturn]] void fail(const std::string& key, const std::string& why) {
  throw ParseError(key + ": " + why);
}

double parse_number(const std::string& key, const std::string& raw) {
  const std::string s = boost::algorithm::trim_copy(raw);
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    fail(key, "expected a number, got '" + s + "'");
  }
  if (used != s.size()) fail(key, "expected a number, got '" + s + "'");
  return v;
}

// "<x>", "<x> m_E" (energy) or "<x>/m_E" (time).
double parse_quantity(const std::string& key, const std::string& raw, Dim dim, double m_e) {
  std::string s = boost::algorithm::trim_copy(raw);
  Dim unit = Dim::none;
  if (boost::algorithm::ends_with(s, "/m_E")) {
    unit = Dim::time;
    s = boost::algorithm::trim_copy(s.substr(0, s.size() - 4));
  } else if (boost::algorithm::ends_with(s, "m_E")) {
    unit = Dim::energy;
    s = boost::algorithm::trim_copy(s.substr(0, s.size() - 3));
    if (!s.empty() && s.back() == '*') s = boost::algorithm::trim_copy(s.substr(0, s.size() - 1));
  }
  if (unit != Dim::none && unit != dim) {
    fail(key, std::string("unit mismatch (value is ") + (unit == Dim::time ? "a time" : "an energy") +
                  ", key expects " +
                  (dim == Dim::none ? "a dimensionless number" : dim == Dim::time ? "a time" : "an energy") +
                  ")");
  }
  const double v = parse_number(key, s);
  if (unit == Dim::energy) return v * m_e;
  if (unit == Dim::time) return v / m_e;
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& raw, Dim dim, double m_e) {
  std::vector<double> out;
  const std::string s = boost::algorithm::trim_copy(raw);
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    boost::algorithm::split(parts, s, boost::is_any_of(":"));
    if (parts.size() != 3) fail(key, "range must be start:step:stop");
    const double a = parse_quantity(key, parts[0], dim, m_e);
    const double h = parse_quantity(key, parts[1], dim, m_e);
    const double b = parse_quantity(key, parts[2], dim, m_e);
    if (!(h > 0.0) || b < a) fail(key, "range needs step > 0 and stop >= start");
    const auto n = static_cast<std::size_t>(std::floor((b - a) / h + 1e-9));
    if (n > 100000) fail(key, "range has too many points");
    for (std::size_t i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * h);
    return out;
  }
  std::vector<std::string> parts;
  boost::algorithm::split(parts, s, boost::is_any_of(","));
  for (const auto& p : parts) out.push_back(parse_quantity(key, p, dim, m_e));
  if (out.empty()) fail(key, "empty list");
  return out;
}

// Real matrix "a, b; c, d" stored row-major with a leading row count.
std::vector<double> parse_matrix(const std::string& key, const std::string& raw) {
  std::vector<std::string> rows;
  boost::algorithm::split(rows, raw, boost::is_any_of(";"));
  std::vector<double> out{static_cast<double>(rows.size())};
  std::size_t cols = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<std::string> cells;
    boost::algorithm::split(cells, rows[r], boost::is_any_of(","));
    if (r == 0) cols = cells.size();
    if (cells.size() != cols) fail(key, "matrix rows must have equal length");
    for (const auto& c : cells) out.push_back(parse_number(key, c));
  }
  return out;
}

void check_value(const std::string& key, double v) {
  const std::string leaf = key.substr(key.find('.') + 1);
  auto positive = [&](const char* what) {
    if (!(v > 0.0)) fail(key, std::string(what) + " must be > 0");
  };
  if (leaf == "sigma") positive("sigma");
  if (leaf == "m_E") positive("m_E");
  if (leaf == "beta") positive("beta");
  if (leaf == "dt" || leaf == "spacing" || leaf == "t_final" || leaf == "cutoff" || leaf == "y_max" ||
      leaf == "mass" || leaf == "d_rapidity" || leaf == "eps" || leaf == "amplitude" || leaf == "omega_c") {
    positive(leaf.c_str());
  }
  if (leaf == "g" && v < 0.0) fail(key, "g must be >= 0");
  if (!std::isfinite(v) && leaf != "beta") fail(key, "must be finite");
}

std::string format_double(double v) {
  std::ostringstream o;
  o << std::setprecision(17) << v;
  return o.str();
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, schema] : schemas()) n.push_back(name);
    return n;
  }();
  return names;
}

bool is_stochastic(const std::string& scenario) { return scenario == "unravel" || scenario == "noise"; }

double ScenarioConfig::real(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end() || !std::holds_alternative<double>(it->second)) throw ParseError(key + ": not a number");
  return std::get<double>(it->second);
}

std::size_t ScenarioConfig::count(const std::string& key) const {
  return static_cast<std::size_t>(real(key));
}

const std::vector<double>& ScenarioConfig::list(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end() || !std::holds_alternative<std::vector<double>>(it->second)) {
    throw ParseError(key + ": not a list");
  }
  return std::get<std::vector<double>>(it->second);
}

const std::string& ScenarioConfig::text(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end() || !std::holds_alternative<std::string>(it->second)) throw ParseError(key + ": not text");
  return std::get<std::string>(it->second);
}

std::string ScenarioConfig::canonical() const {
  std::ostringstream o;
  o << "scenario=" << scenario << '\n';
  o << "seed=" << (seed ? std::to_string(*seed) : std::string("none")) << '\n';
  for (const auto& [key, value] : values) {
    o << key << '=';
    if (const auto* d = std::get_if<double>(&value)) {
      o << format_double(*d);
    } else if (const auto* l = std::get_if<std::vector<double>>(&value)) {
      for (std::size_t i = 0; i < l->size(); ++i) o << (i ? "," : "") << format_double((*l)[i]);
    } else {
      o << std::get<std::string>(value);
    }
    o << '\n';
  }
  return o.str();
}

std::string ScenarioConfig::hash() const {
  const std::string text = canonical();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("config hash: SHA-256 failed");
  }
  std::ostringstream o;
  for (unsigned int i = 0; i < len; ++i) o << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return o.str();
}

ScenarioConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError("config: line " + std::to_string(e.line()) + ": " + e.message());
  }

  // Flatten to section.key.
  std::map<std::string, std::string> raw;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      raw[name] = node.data();
    } else {
      for (const auto& [leaf, child] : node) raw[name + "." + leaf] = child.data();
    }
  }

  ScenarioConfig c;
  const auto sc = raw.find("scenario");
  if (sc == raw.end()) throw ParseError("scenario: missing required key");
  c.scenario = boost::algorithm::trim_copy(sc->second);
  const auto schema_it = schemas().find(c.scenario);
  if (schema_it == schemas().end()) throw ParseError("scenario: unknown scenario '" + c.scenario + "'");
  const Schema& schema = schema_it->second;

  std::vector<KeySpec> keys = environment_keys();
  if (schema.kernel) keys.insert(keys.end(), kernel_keys().begin(), kernel_keys().end());
  keys.insert(keys.end(), schema.keys.begin(), schema.keys.end());
  std::set<std::string> known{"scenario", "seed", "output"};
  for (const auto& k : keys) known.insert(k.key);
  for (const auto& [key, value] : raw) {
    if (!known.count(key)) throw ParseError(key + ": unknown key for scenario '" + c.scenario + "'");
  }

  if (const auto s = raw.find("seed"); s != raw.end()) {
    const double v = parse_number("seed", s->second);
    if (v < 0 || v != std::floor(v) || v > 1.8e19) fail("seed", "must be a non-negative integer");
    c.seed = static_cast<std::uint64_t>(std::stoull(boost::algorithm::trim_copy(s->second)));
  }
  if (is_stochastic(c.scenario) && !c.seed) fail("seed", "required for stochastic scenario '" + c.scenario + "'");
  c.output_path = raw.count("output") ? boost::algorithm::trim_copy(raw["output"]) : std::string("relclock_out");

  // m_E first: unit suffixes resolve against it.
  double m_e = 1.0;
  if (raw.count("environment.m_E")) {
    m_e = parse_number("environment.m_E", raw["environment.m_E"]);
    check_value("environment.m_E", m_e);
  }
  for (const auto& spec : keys) {
    std::string value;
    if (const auto it = raw.find(spec.key); it != raw.end()) {
      value = it->second;
    } else if (spec.fallback) {
      value = *spec.fallback;
    } else {
      fail(spec.key, "missing required key");
    }
    switch (spec.kind) {
      case Kind::real: {
        const double v = parse_quantity(spec.key, value, spec.dim, m_e);
        check_value(spec.key, v);
        c.values[spec.key] = v;
        break;
      }
      case Kind::count: {
        const double v = parse_number(spec.key, value);
        if (v < 0 || v != std::floor(v)) fail(spec.key, "must be a non-negative integer");
        c.values[spec.key] = v;
        break;
      }
      case Kind::real_list:
      case Kind::integer_list: {
        auto l = parse_list(spec.key, value, spec.dim, m_e);
        for (double v : l) {
          if (!std::isfinite(v)) fail(spec.key, "list entries must be finite");
          if (spec.kind == Kind::integer_list && (v < 0 || v != std::floor(v))) {
            fail(spec.key, "entries must be non-negative integers");
          }
          const std::string leaf = spec.key.substr(spec.key.find('.') + 1);
          if (leaf == "sigma_grid" && !(v > 0.0)) fail(spec.key, "sigma must be > 0");
        }
        c.values[spec.key] = std::move(l);
        break;
      }
      case Kind::matrix:
        c.values[spec.key] = parse_matrix(spec.key, value);
        break;
      case Kind::text:
        c.values[spec.key] = boost::algorithm::trim_copy(value);
        break;
    }
  }
  const std::string& kt = schema.kernel ? c.text("kernel.type") : std::string();
  if (schema.kernel && kt != "gaussian" && kt != "coherent_readout") {
    fail("kernel.type", "must be gaussian or coherent_readout");
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config(s.str());
}

}  // namespace relclock
