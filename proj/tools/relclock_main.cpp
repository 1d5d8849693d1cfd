// relclock <scenario> --config <file> [--seed N] [--output DIR] [--quiet]
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "relclock/relclock.h"

int main(int argc, char** argv) {
  CLI::App app{"Relational clock open-system scenarios"};
  std::string scenario, config_path, output;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("scenario", scenario, "Scenario name (must match the config)")->required();
  app.add_option("-c,--config", config_path, "Scenario config file")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("-o,--output", output, "Output directory (overrides the config)");
  app.add_flag("-q,--quiet", quiet, "Suppress the progress line");
  app.set_version_flag("--version", relclock_version());
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  relclock_config* cfg = nullptr;
  if (relclock_config_load(config_path.c_str(), &cfg) != RELCLOCK_OK) {
    std::cerr << "relclock: " << relclock_last_error() << '\n';
    return 1;
  }
  const char* name = nullptr;
  relclock_config_scenario(cfg, &name);
  if (scenario != name) {
    std::cerr << "relclock: command names scenario '" << scenario << "' but " << config_path << " is '" << name
              << "'\n";
    relclock_config_free(cfg);
    return 1;
  }
  if (seed) relclock_config_set_seed(cfg, *seed);

  int exit_code = 1;
  const relclock_status s = relclock_run_scenario(cfg, output.empty() ? nullptr : output.c_str(), quiet, &exit_code);
  if (s != RELCLOCK_OK) std::cerr << "relclock: " << relclock_last_error() << '\n';
  relclock_config_free(cfg);
  return s == RELCLOCK_OK ? exit_code : 1;
}
