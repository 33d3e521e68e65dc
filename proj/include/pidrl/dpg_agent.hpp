#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <vector>

#include "pidrl/neural.hpp"
#include "pidrl/pid_controller.hpp"

namespace pidrl {

struct AgentConfig {
  double actor_lr = 0.0002;
  double critic_lr = 0.0002;
  double gamma = 0.99;
  double rho = 0.999;
  std::size_t buffer_capacity = 1000;
  std::size_t batch_size = 32;
  double noise_variance = 0.05;  // sigma_0^2, in normalized action units
  double noise_decay = 0.001;
  double noise_floor = 1e-3;
  std::size_t state_dim = 30;
  std::vector<std::size_t> hidden{40, 30};
  // Action box. Two entries (kp, tau_i) with case1_tie, three (kp, tau_i, tau_d) otherwise.
  std::vector<double> action_low{0.0, 0.2, 0.0};
  std::vector<double> action_high{10.0, 15.0, 10.0};
  bool case1_tie = false;  // tau_d = 2 tau_i / 3
  // Networks see state / state_scale and reward / reward_scale.
  double state_scale = 7.5;
  double reward_scale = 15.0;
  // Multiplies the actor's output-layer weights and biases after initialization.
  double actor_output_init = 1.0;
  // When false the action inputs bypass the critic's first layernorm, so the
  // state statistics do not rescale them.
  bool normalize_critic_action = false;
  // Gradient steps per stored transition.
  std::size_t updates_per_episode = 1;

  std::size_t action_dim() const { return action_low.size(); }
  void validate() const;
};

struct Transition {
  std::vector<double> s;
  std::vector<double> a;  // action in PID units (kp, tau_i[, tau_d])
  double r = 0.0;
  std::vector<double> s_next;

  bool operator==(const Transition&) const = default;
};

/// Fixed-capacity FIFO of transitions; the oldest entry is overwritten first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1000);

  void store(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t insertions() const { return insertions_; }
  /// i = 0 is the oldest retained transition.
  const Transition& at(std::size_t i) const;

  /// B distinct indices drawn uniformly (partial Fisher-Yates).
  std::vector<std::size_t> sample_indices(std::size_t batch, std::mt19937_64& rng) const;

  void save(std::ostream& os) const;
  static ReplayBuffer load(std::istream& is);

 private:
  std::size_t capacity_;
  std::size_t insertions_ = 0;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::vector<Transition> data_;
};

struct AgentNets {
  Mlp actor;
  Mlp critic;
  Mlp actor_target;
  Mlp critic_target;
};

struct ActionChoice {
  std::vector<double> normalized;  // in [-1, 1]^d after noise and clipping
  std::vector<double> action;      // PID units
  PidParams params;
};

struct UpdateDiagnostics {
  bool performed = false;
  double critic_loss = 0.0;      // mean (Q - y)^2 before the step
  double actor_objective = 0.0;  // mean Q(s, mu(s)) before the step
};

/// Exploration standard deviation sigma_k = max(sigma_0 exp(-decay k), floor).
double noise_sigma(const AgentConfig& cfg, std::size_t episode);

class DpgAgent {
 public:
  DpgAgent(AgentConfig cfg, std::mt19937_64& rng);

  /// clip(mu(s) + N(0, sigma_k^2), -1, 1) mapped onto the action box.
  ActionChoice select_action(const std::vector<double>& state, std::size_t episode,
                             std::mt19937_64& rng) const;
  /// Noise-free policy output.
  ActionChoice greedy_action(const std::vector<double>& state) const;

  void store(Transition t);

  /// One critic step, one actor step, then Polyak averaging of both targets.
  /// No-op until the buffer holds a full batch.
  UpdateDiagnostics update(std::mt19937_64& rng);

  std::vector<double> normalize_action(const std::vector<double>& action) const;
  std::vector<double> denormalize_action(const std::vector<double>& normalized) const;
  PidParams to_pid(const std::vector<double>& action) const;

  double critic_value(const std::vector<double>& state, const std::vector<double>& action) const;

  const AgentConfig& config() const { return cfg_; }
  const AgentNets& nets() const { return nets_; }
  AgentNets& nets() { return nets_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::size_t updates() const { return updates_; }

  void save(std::ostream& os) const;
  static DpgAgent load(std::istream& is, AgentConfig cfg);

 private:
  DpgAgent(AgentConfig cfg, AgentNets nets);

  std::vector<double> scaled_state(const std::vector<double>& s) const;
  std::vector<double> critic_input(const std::vector<double>& scaled_s,
                                   const std::vector<double>& normalized_a) const;

  AgentConfig cfg_;
  AgentNets nets_;
  AdamOptimizer actor_opt_;
  AdamOptimizer critic_opt_;
  ReplayBuffer buffer_;
  std::size_t updates_ = 0;
};

}  // namespace pidrl
