#include "pidrl/closed_loop.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pidrl/csv_writer.hpp"

namespace pidrl {

void EpisodeConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("episode horizon must be at least 1");
  if (!(lambda >= 1.0)) throw std::invalid_argument("lambda must be >= 1");
  if (!(r_bmk > 0.0)) throw std::invalid_argument("R_bmk must be positive");
  if (!std::isfinite(setpoint)) throw std::invalid_argument("setpoint must be finite");
  bounds.validate();
  if (!(baseline.tau_i > 0.0)) throw std::invalid_argument("baseline tau_i must be positive");
}

void StateExtractorConfig::validate(std::size_t horizon) const {
  if (interval == 0) throw std::invalid_argument("state interval must be positive");
  if (n_s == 0 || n_s % 3 != 0)
    throw std::invalid_argument("state dimension must be a positive multiple of 3");
  if ((points_per_signal() - 1) * interval > horizon)
    throw std::invalid_argument("state subsampling runs past the episode horizon");
}

EpisodeResult simulate_closed_loop(const DiscretePlant& plant, const PidParams& explored,
                                   const EpisodeConfig& config, std::size_t steps) {
  config.validate();
  if (!(explored.tau_i > 0.0)) throw std::invalid_argument("explored tau_i must be positive");

  DiscretePlant process = plant;
  process.reset();
  const double dt = process.sample_time();
  const double norm = static_cast<double>(config.horizon + 1);
  const double threshold = config.threshold();

  EpisodeResult r;
  r.explored = explored;
  r.implemented = explored;
  r.y.reserve(steps + 1);
  r.u.reserve(steps + 1);
  r.sp.reserve(steps + 1);
  r.rr.reserve(steps + 1);

  PidParams active = explored;
  double y = process.output();
  PidState pid = reset(PidState{}, y);
  double sq_sum = 0.0;
  double horizon_sq_sum = 0.0;

  for (std::size_t t = 0; t <= steps; ++t) {
    const double e = config.setpoint - y;
    sq_sum += e * e;
    if (t <= config.horizon) horizon_sq_sum = sq_sum;
    const double rr = sq_sum / norm;
    if (config.supervisor && !r.switched && rr > threshold) {
      r.switched = true;
      r.switch_time = t;
      // Bumpless transfer: the accumulator is rescaled so the integral
      // contribution survives the parameter change, limited to the actuator
      // range. prev_y carries over unchanged.
      const double ki_new = config.baseline.kp / config.baseline.tau_i;
      const double contribution = config.bounds.clamp(active.kp / active.tau_i * pid.integral_sum);
      pid.integral_sum = ki_new != 0.0 ? contribution / ki_new : 0.0;
      active = config.baseline;
      r.implemented = config.baseline;
    }
    const ControlOutput out = compute_control(active, pid, config.setpoint, y, dt, config.bounds);
    pid = out.state;

    r.y.push_back(y);
    r.u.push_back(out.u);
    r.sp.push_back(config.setpoint);
    r.rr.push_back(rr);

    if (t < steps) {
      y = process.step(out.u);
      if (!std::isfinite(y)) throw std::runtime_error("closed-loop trajectory diverged");
    }
  }
  r.reward = -(horizon_sq_sum / norm);
  return r;
}

EpisodeResult run_episode(const DiscretePlant& plant, const PidParams& explored,
                          const EpisodeConfig& config) {
  return simulate_closed_loop(plant, explored, config, config.horizon);
}

double compute_reward(std::span<const double> y, std::span<const double> sp) {
  if (y.empty()) throw std::invalid_argument("reward of an empty trajectory");
  if (y.size() != sp.size()) throw std::invalid_argument("trajectory lengths differ");
  double sum = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double e = sp[t] - y[t];
    sum += e * e;
  }
  return -(sum / static_cast<double>(y.size()));
}

double running_reward(std::span<const double> errors, std::size_t horizon) {
  double sum = 0.0;
  for (double e : errors) sum += e * e;
  return sum / static_cast<double>(horizon + 1);
}

std::vector<double> extract_state(const EpisodeResult& result, const StateExtractorConfig& cfg) {
  if (result.y.empty() || result.u.size() != result.y.size() ||
      result.sp.size() != result.y.size())
    throw std::invalid_argument("episode trajectories are inconsistent");
  cfg.validate(result.y.size() - 1);
  const std::size_t points = cfg.points_per_signal();
  std::vector<double> state;
  state.reserve(cfg.n_s);
  for (const auto* signal : {&result.y, &result.u, &result.sp}) {
    for (std::size_t k = 0; k < points; ++k) state.push_back((*signal)[k * cfg.interval]);
  }
  return state;
}

double compute_benchmark(const DiscretePlant& plant, const EpisodeConfig& config) {
  if (config.r_bmk_mode == BenchmarkMode::fixed) return config.r_bmk;
  EpisodeConfig probe = config;
  probe.supervisor = false;
  const EpisodeResult r = run_episode(plant, config.baseline, probe);
  const double bmk = -r.reward;
  if (!std::isfinite(bmk)) throw std::runtime_error("baseline episode is not finite");
  if (!(bmk > 0.0)) throw std::runtime_error("baseline tracking error must be positive");
  return bmk;
}

void write_episode_csv(const std::filesystem::path& path, const EpisodeResult& result) {
  CsvWriter csv(path, {"t", "y", "u", "sp", "rr", "switched"});
  for (std::size_t t = 0; t < result.y.size(); ++t) {
    const bool on = result.switch_time && t >= *result.switch_time;
    csv.row({static_cast<double>(t), result.y[t], result.u[t], result.sp[t], result.rr[t],
             on ? 1.0 : 0.0});
  }
}

}  // namespace pidrl
