#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "pidrl/pid_controller.hpp"
#include "pidrl/process_sim.hpp"

namespace pidrl {

enum class BenchmarkMode { fixed, from_baseline };

struct EpisodeConfig {
  std::size_t horizon = 200;  // T; trajectories hold T + 1 samples
  double setpoint = 7.5;
  ActuatorBounds bounds{0.0, 100.0};
  double lambda = 1.0;
  double r_bmk = 15.0;
  BenchmarkMode r_bmk_mode = BenchmarkMode::fixed;
  PidParams baseline{4.56, 8.85, 5.90};
  bool supervisor = true;

  void validate() const;
  double threshold() const { return lambda * r_bmk; }
};

struct EpisodeResult {
  std::vector<double> y;
  std::vector<double> u;
  std::vector<double> sp;
  std::vector<double> rr;  // running reward after each sample
  double reward = 0.0;
  bool switched = false;
  std::optional<std::size_t> switch_time;
  PidParams explored;
  PidParams implemented;
};

struct StateExtractorConfig {
  std::size_t n_s = 30;
  std::size_t interval = 20;

  std::size_t points_per_signal() const { return n_s / 3; }
  /// Throws unless n_s splits evenly over (y, u, sp) and every index fits in T + 1 samples.
  void validate(std::size_t horizon) const;
};

/// One step test from rest under `explored`, with the running-reward supervisor
/// swapping in the baseline the first time RR(t) > lambda * R_bmk (when enabled).
EpisodeResult run_episode(const DiscretePlant& plant, const PidParams& explored,
                          const EpisodeConfig& config);

/// Same loop as run_episode but simulated for `steps` samples after t = 0.
/// RR stays normalized by the configured horizon; the reward covers only the
/// first horizon + 1 samples.
EpisodeResult simulate_closed_loop(const DiscretePlant& plant, const PidParams& explored,
                                   const EpisodeConfig& config, std::size_t steps);

/// -(1 / N) * sum (sp_t - y_t)^2 over all N samples.
double compute_reward(std::span<const double> y, std::span<const double> sp);

/// (1 / (T + 1)) * sum_{s <= t} e_s^2 for the supplied errors e_0..e_t.
double running_reward(std::span<const double> errors, std::size_t horizon);

/// Subsampled [y~, u~, sp~] at indices 0, i, 2i, ...
std::vector<double> extract_state(const EpisodeResult& result, const StateExtractorConfig& cfg);

/// R_bmk: the configured constant in fixed mode, otherwise the mean squared
/// tracking error of one unsupervised baseline episode.
double compute_benchmark(const DiscretePlant& plant, const EpisodeConfig& config);

/// Columns t,y,u,sp,rr,switched.
void write_episode_csv(const std::filesystem::path& path, const EpisodeResult& result);

}  // namespace pidrl
