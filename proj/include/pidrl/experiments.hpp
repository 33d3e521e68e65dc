#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "pidrl/classical_tuning.hpp"
#include "pidrl/closed_loop.hpp"
#include "pidrl/dpg_agent.hpp"
#include "pidrl/run_config.hpp"
#include "pidrl/stability_map.hpp"

namespace pidrl {

struct EpisodeRecord {
  std::size_t episode = 0;
  double reward = 0.0;
  bool switched = false;
  std::optional<std::size_t> switch_time;
  PidParams explored;
  PidParams implemented;
  double sigma = 0.0;
  double gain = 0.0;
};

/// Episodic training loop: act, run one supervised step test, store the
/// transition, update once. All randomness comes from one generator seeded
/// with the run seed.
class Trainer {
 public:
  Trainer(const RunConfig& cfg, const DiscretePlant& plant, bool case1_tie, bool preserve);

  EpisodeRecord run_episode(const DiscretePlant& plant, EpisodeResult* trajectory = nullptr);

  /// Noise-free policy output for the current state.
  PidParams greedy_params() const;

  const DpgAgent& agent() const { return agent_; }
  const EpisodeConfig& episode_config() const { return episode_cfg_; }
  std::size_t episode() const { return episode_; }
  double benchmark() const { return episode_cfg_.r_bmk; }
  const std::vector<double>& state() const { return state_; }

  void save(const std::filesystem::path& path) const;
  /// Restores agent, generator, state and episode counter from save().
  static Trainer load(const RunConfig& cfg, const std::filesystem::path& path, bool preserve);

 private:
  Trainer(const RunConfig& cfg, EpisodeConfig ep, DpgAgent agent, std::mt19937_64 rng,
          std::vector<double> state, std::size_t episode);

  StateExtractorConfig state_cfg_;
  EpisodeConfig episode_cfg_;
  std::mt19937_64 rng_;
  DpgAgent agent_;
  std::vector<double> state_;
  std::size_t episode_ = 0;
};

struct TrainingRun {
  std::vector<EpisodeRecord> log;
  std::vector<StabilityVerdict> explored_verdicts;
  std::vector<StabilityVerdict> implemented_verdicts;
  EpisodeResult worst_episode;
  EpisodeResult final_episode;
  PidParams final_greedy;
  double final_greedy_mse = 0.0;
  double benchmark = 0.0;
  EpisodeConfig episode_config;
};

/// Trains for cfg.episodes and classifies every explored/implemented triple.
TrainingRun train(const RunConfig& cfg, bool case1_tie, bool preserve,
                  const std::filesystem::path& checkpoint_out = {});

/// Trailing moving average with the given window (shorter at the start).
std::vector<double> moving_average(const std::vector<double>& values, std::size_t window);

struct Case1Result {
  TrainingRun run;
  std::vector<StabilityVerdict> map;
  StabilityVerdict grid_optimum;
  nlohmann::json summary;
};

struct Case2Result {
  TrainingRun preserved;
  TrainingRun unpreserved;
  nlohmann::json summary;
};

struct AdaptivityRow {
  std::size_t episode = 0;
  double gain = 0.0;
  double rl_reward = 0.0;
  double scheduled_reward = 0.0;
  double fixed_reward = 0.0;
};

struct AdaptivityResult {
  std::vector<AdaptivityRow> rows;
  double rl_pre_drift_mse = 0.0;
  double rl_settled_mse = 0.0;
  double scheduled_pre_drift_mse = 0.0;
  double scheduled_settled_mse = 0.0;
  double fixed_pre_drift_mse = 0.0;
  double fixed_settled_mse = 0.0;
  nlohmann::json summary;
};

struct BenchmarkEntry {
  std::string method;
  PidParams params;
  double mse = 0.0;
  EpisodeResult episode;
};

struct BenchmarkResult {
  std::vector<BenchmarkEntry> entries;  // rl, imc_pid, imc_mac, closed_loop_specified
  nlohmann::json summary;
};

struct MapResult {
  std::vector<StabilityVerdict> verdicts;
  nlohmann::json summary;
};

struct BaselineResult {
  EpisodeResult episode;
  std::vector<double> state;
  nlohmann::json summary;
};

// Each runner writes its artifacts under cfg.out_dir (created if missing)
// together with summary.json and resolved-config.txt.
Case1Result run_case1(const RunConfig& cfg);
Case2Result run_case2(const RunConfig& cfg);
AdaptivityResult run_adaptivity(const RunConfig& cfg);
BenchmarkResult run_benchmark(const RunConfig& cfg);
MapResult run_stability_map(const RunConfig& cfg);
BaselineResult run_baseline_episode(const RunConfig& cfg);

/// Dispatches on cfg.experiment and returns the summary.
nlohmann::json run_experiment(const RunConfig& cfg);

/// Grid of the action box used by the tied (2-D) or full (3-D) stability map.
GridSpec grid_for(const RunConfig& cfg, bool case1_tie);

}  // namespace pidrl
