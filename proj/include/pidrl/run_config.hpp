#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pidrl/closed_loop.hpp"
#include "pidrl/dpg_agent.hpp"
#include "pidrl/process_sim.hpp"
#include "pidrl/stability_map.hpp"

namespace pidrl {

enum class Experiment { case1, case2, adaptivity, benchmark, stability_map, baseline_episode };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& name);

/// Every knob of an experiment run. Defaults follow the standard
/// hyper-parameter table; MV bounds default per experiment ([0, 100] for
/// case1/stability-map/baseline-episode, [-20, 100] for case2/adaptivity/benchmark).
struct RunConfig {
  Experiment experiment = Experiment::case1;
  std::uint64_t seed = 1;
  std::size_t episodes = 2000;
  std::filesystem::path out_dir = "out";

  // Plant.
  SopdtModel plant;

  // Episode and supervisor.
  std::size_t horizon = 200;
  double setpoint = 7.5;
  std::optional<double> mv_min;
  std::optional<double> mv_max;
  double lambda = 1.0;
  double r_bmk = 15.0;
  BenchmarkMode r_bmk_mode = BenchmarkMode::fixed;
  PidParams baseline{4.56, 8.85, 5.90};
  bool preserve = true;

  // State extraction.
  std::size_t state_dim = 30;
  std::size_t state_interval = 20;

  // Agent.
  double actor_lr = 0.0002;
  double critic_lr = 0.0002;
  double gamma = 0.99;
  double rho = 0.999;
  std::size_t buffer_size = 1000;
  std::size_t batch_size = 32;
  std::vector<std::size_t> hidden{40, 30};
  double noise_variance = 0.05;
  double noise_decay = 0.001;
  double noise_floor = 1e-3;
  double actor_output_init = 1.0;
  std::size_t updates_per_episode = 1;
  bool normalize_critic_action = false;
  ParamRange kp_range{0.0, 10.0};
  ParamRange ti_range{0.2, 15.0};
  ParamRange td_range{0.0, 10.0};

  // Reporting.
  std::size_t moving_average_window = 50;
  double stability_threshold = 15.0;
  double grid_interval = 0.2;
  bool grid_full = false;  // stability-map experiment: 3-D grid instead of the tied 2-D one

  // Adaptivity.
  double drift_from = 0.3;
  double drift_to = 0.5;
  std::size_t drift_episodes = 1000;
  std::size_t settle_episodes = 500;
  double anchor_low_gain = 0.3;
  PidParams anchor_low{2.87, 12.92, 3.99};
  double anchor_high_gain = 0.6;
  PidParams anchor_high{1.44, 12.92, 3.99};
  std::filesystem::path checkpoint;  // optional pre-trained agent

  /// Sets one key from text; throws std::invalid_argument on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Parses `key = value` lines; '#' starts a comment.
  void load_file(const std::filesystem::path& path);
  /// Every key with its resolved value, in a fixed order; feeding it back reproduces the run.
  std::string resolved_text() const;
  static std::vector<std::string> keys();

  /// Cross-field checks (type invariants of the derived configs).
  void validate() const;

  ActuatorBounds bounds() const;
  EpisodeConfig episode_config() const;
  StateExtractorConfig state_config() const;
  AgentConfig agent_config(bool case1_tie) const;
};

}  // namespace pidrl
