// Command-line entry point for every experiment.
//
//   tune <experiment> [--config FILE] [--seed N] [--out DIR] [--set key=value]...
//   tune rules [--config FILE] [--set key=value]...   classical triples for the plant

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pidrl/classical_tuning.hpp"
#include "pidrl/experiments.hpp"
#include "pidrl/run_config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"PID auto-tuning experiments"};
  std::string experiment;
  std::string config_file;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool list_keys = false;

  app.add_option("experiment", experiment,
                 "case1 | case2 | adaptivity | benchmark | stability-map | baseline-episode | rules");
  app.add_option("--config", config_file, "key = value file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "generator seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--set", overrides, "override one key (repeatable)");
  app.add_flag("--list-keys", list_keys, "print every configuration key and exit");
  CLI11_PARSE(app, argc, argv);

  if (list_keys) {
    for (const auto& k : pidrl::RunConfig::keys()) std::cout << k << '\n';
    return 0;
  }
  if (experiment.empty()) {
    std::cerr << "tune: missing experiment name\n" << app.help();
    return 2;
  }

  try {
    const bool rules = experiment == "rules";
    pidrl::RunConfig cfg;
    if (!rules) cfg.experiment = pidrl::parse_experiment(experiment);
    if (!config_file.empty()) cfg.load_file(config_file);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (*seed_opt) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    cfg.validate();

    if (rules) {
      const auto r = pidrl::classical_rules(cfg.plant);
      auto triple = [](const pidrl::PidParams& p) {
        return nlohmann::json{{"kp", p.kp}, {"tau_i", p.tau_i}, {"tau_d", p.tau_d}};
      };
      const nlohmann::json out{{"imc_pid", triple(r.imc_pid)},
                               {"imc_mac", triple(r.imc_mac)},
                               {"closed_loop_specified", triple(r.closed_loop_specified)}};
      std::cout << out.dump(2) << '\n';
      return 0;
    }

    const auto summary = pidrl::run_experiment(cfg);
    std::cout << summary.dump(2) << '\n';
  } catch (const std::invalid_argument& e) {
    std::cerr << "tune: invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "tune: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
