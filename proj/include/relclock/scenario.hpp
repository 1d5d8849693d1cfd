#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace relclock {

// A parsed scenario configuration. Keys are "section.key" (top-level keys
// have no section); every value is resolved to natural units with defaults
// filled in.
//
// Document format (INI):
//   scenario = rates
//   seed = 7
//   [environment]
//   m_E = 1
//   [kernel]
//   sigma = 5/m_E       ; time values may carry "/m_E", energies "m_E"
//   [rates]
//   omega_grid = -4:0.5:1   ; list: "a, b, c" or "start:step:stop"
struct ScenarioConfig {
  using Value = std::variant<double, std::vector<double>, std::string>;

  std::string scenario;
  std::map<std::string, Value> values;
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_path;

  double real(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  const std::vector<double>& list(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  bool has(const std::string& key) const { return values.count(key) != 0; }

  // Sorted "key=value" lines with 17 significant digits; the seed and output
  // path are included.
  std::string canonical() const;
  // Hex SHA-256 of canonical().
  std::string hash() const;
};

const std::vector<std::string>& scenario_names();
bool is_stochastic(const std::string& scenario);

// Throws ParseError naming the offending key: malformed document, unknown
// scenario or key, missing required key, bad value, unit mismatch, missing
// seed for a stochastic scenario.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

struct RunOptions {
  std::optional<std::filesystem::path> output_dir;  // overrides the config
  bool quiet = false;
};

struct RunOutcome {
  int exit_code = 0;  // 0 success, 2 invariant violated, 1 error
  std::string summary_json;
  std::filesystem::path csv_path;
  std::filesystem::path json_path;
  std::string error;
};

// Writes <output>/<scenario>.csv and <output>/<scenario>.json. The JSON
// summary has keys scenario, config_hash, seed, inputs, outputs, checks,
// wall_time_s, version (and error on failure).
RunOutcome run_scenario(const ScenarioConfig& c, const RunOptions& options = {});

}  // namespace relclock
