#include "pidrl/dpg_agent.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "pidrl/random.hpp"

namespace pidrl {

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
  if (buffer_capacity == 0) throw std::invalid_argument("buffer capacity must be positive");
  if (batch_size == 0 || batch_size > buffer_capacity)
    throw std::invalid_argument("batch size must lie in [1, buffer capacity]");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw std::invalid_argument("learning rates must be positive");
  if (!(noise_variance >= 0.0)) throw std::invalid_argument("noise variance must be non-negative");
  if (!(noise_decay >= 0.0)) throw std::invalid_argument("noise decay must be non-negative");
  if (state_dim == 0) throw std::invalid_argument("state dimension must be positive");
  if (action_low.size() != action_high.size()) throw std::invalid_argument("action bounds differ in size");
  const std::size_t expected = case1_tie ? 2 : 3;
  if (action_low.size() != expected)
    throw std::invalid_argument("action bounds must have " + std::to_string(expected) + " entries");
  for (std::size_t i = 0; i < action_low.size(); ++i)
    if (!(action_low[i] < action_high[i])) throw std::invalid_argument("action bounds require low < high");
  if (!(action_low[1] > 0.0)) throw std::invalid_argument("tau_i lower bound must be positive");
  if (!(state_scale > 0.0) || !(reward_scale > 0.0)) throw std::invalid_argument("scales must be positive");
  if (!(actor_output_init > 0.0)) throw std::invalid_argument("actor output init scale must be positive");
  if (updates_per_episode == 0) throw std::invalid_argument("updates per episode must be positive");
}

// ---------------------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  data_.reserve(capacity);
}

void ReplayBuffer::store(Transition t) {
  if (!data_.empty()) {
    const Transition& ref = data_.front();
    if (t.s.size() != ref.s.size() || t.s_next.size() != ref.s_next.size() || t.a.size() != ref.a.size())
      throw std::invalid_argument("transition dimensions do not match the buffer");
  }
  if (t.s.size() != t.s_next.size()) throw std::invalid_argument("state and next state differ in size");
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
  ++insertions_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw std::out_of_range("replay buffer index");
  return data_.size() < capacity_ ? data_[i] : data_[(head_ + i) % capacity_];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, std::mt19937_64& rng) const {
  if (batch > data_.size()) throw std::invalid_argument("batch larger than buffer");
  std::vector<std::size_t> idx(data_.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t j = i + uniform_index(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(batch);
  return idx;
}

void ReplayBuffer::save(std::ostream& os) const {
  os << "buffer " << capacity_ << ' ' << insertions_ << ' ' << data_.size() << '\n';
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const Transition& t = at(i);
    os << "transition " << t.s.size() << ' ' << t.a.size() << '\n';
    write_doubles(os, t.s);
    write_doubles(os, t.a);
    write_doubles(os, std::span<const double>(&t.r, 1));
    write_doubles(os, t.s_next);
  }
}

ReplayBuffer ReplayBuffer::load(std::istream& is) {
  std::string tag;
  std::size_t capacity = 0, insertions = 0, count = 0;
  if (!(is >> tag >> capacity >> insertions >> count) || tag != "buffer")
    throw std::runtime_error("expected 'buffer' header");
  ReplayBuffer buf(capacity);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t ns = 0, na = 0;
    if (!(is >> tag >> ns >> na) || tag != "transition") throw std::runtime_error("expected 'transition'");
    Transition t;
    t.s = read_doubles(is, ns);
    t.a = read_doubles(is, na);
    t.r = read_doubles(is, 1)[0];
    t.s_next = read_doubles(is, ns);
    buf.store(std::move(t));
  }
  buf.insertions_ = insertions;
  return buf;
}

// ---------------------------------------------------------------------------

double noise_sigma(const AgentConfig& cfg, std::size_t episode) {
  const double sigma = std::sqrt(cfg.noise_variance) *
                       std::exp(-cfg.noise_decay * static_cast<double>(episode));
  return std::max(sigma, cfg.noise_floor);
}

namespace {

AgentNets make_nets(const AgentConfig& cfg, std::mt19937_64& rng) {
  std::vector<std::size_t> actor_widths{cfg.state_dim};
  actor_widths.insert(actor_widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  actor_widths.push_back(cfg.action_dim());
  std::vector<std::size_t> critic_widths{cfg.state_dim + cfg.action_dim()};
  critic_widths.insert(critic_widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  critic_widths.push_back(1);

  AgentNets nets;
  nets.actor = Mlp::build(actor_widths, Activation::relu, Activation::tanh);
  nets.critic = Mlp::build(critic_widths, Activation::relu, Activation::linear);
  if (!cfg.normalize_critic_action) {
    auto shapes = nets.critic.shapes();
    shapes.front().passthrough = cfg.action_dim();
    nets.critic = Mlp(shapes);
  }
  nets.actor.initialize(rng);
  nets.critic.initialize(rng);
  const std::size_t last = actor_widths.size() - 2;
  auto p = nets.actor.params();
  for (std::size_t i = nets.actor.weight_offset(last); i < p.size(); ++i) p[i] *= cfg.actor_output_init;
  nets.actor_target = nets.actor;
  nets.critic_target = nets.critic;
  return nets;
}

}  // namespace

DpgAgent::DpgAgent(AgentConfig cfg, std::mt19937_64& rng) : DpgAgent(cfg, make_nets(cfg, rng)) {}

DpgAgent::DpgAgent(AgentConfig cfg, AgentNets nets)
    : cfg_(std::move(cfg)),
      nets_(std::move(nets)),
      actor_opt_(nets_.actor.param_count(), AdamConfig{cfg_.actor_lr}),
      critic_opt_(nets_.critic.param_count(), AdamConfig{cfg_.critic_lr}),
      buffer_(cfg_.buffer_capacity) {
  cfg_.validate();
  if (nets_.actor.input_dim() != cfg_.state_dim || nets_.actor.output_dim() != cfg_.action_dim())
    throw std::invalid_argument("actor shape does not match the agent configuration");
  if (nets_.critic.input_dim() != cfg_.state_dim + cfg_.action_dim() || nets_.critic.output_dim() != 1)
    throw std::invalid_argument("critic shape does not match the agent configuration");
}

std::vector<double> DpgAgent::normalize_action(const std::vector<double>& action) const {
  std::vector<double> n(action.size());
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double lo = cfg_.action_low[i];
    const double hi = cfg_.action_high[i];
    n[i] = 2.0 * (action[i] - lo) / (hi - lo) - 1.0;
  }
  return n;
}

std::vector<double> DpgAgent::denormalize_action(const std::vector<double>& normalized) const {
  std::vector<double> a(normalized.size());
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    const double lo = cfg_.action_low[i];
    const double hi = cfg_.action_high[i];
    a[i] = std::clamp(lo + (normalized[i] + 1.0) * 0.5 * (hi - lo), lo, hi);
  }
  return a;
}

PidParams DpgAgent::to_pid(const std::vector<double>& action) const {
  if (cfg_.case1_tie) return PidParams{action[0], action[1], 2.0 * action[1] / 3.0};
  return PidParams{action[0], action[1], action[2]};
}

std::vector<double> DpgAgent::scaled_state(const std::vector<double>& s) const {
  if (s.size() != cfg_.state_dim) throw std::invalid_argument("state dimension mismatch");
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] / cfg_.state_scale;
  return out;
}

std::vector<double> DpgAgent::critic_input(const std::vector<double>& scaled_s,
                                           const std::vector<double>& normalized_a) const {
  std::vector<double> x = scaled_s;
  x.insert(x.end(), normalized_a.begin(), normalized_a.end());
  return x;
}

ActionChoice DpgAgent::select_action(const std::vector<double>& state, std::size_t episode,
                                     std::mt19937_64& rng) const {
  std::vector<double> raw = nets_.actor.forward(scaled_state(state));
  const double sigma = noise_sigma(cfg_, episode);
  for (double& v : raw) v = std::clamp(v + sigma * standard_normal(rng), -1.0, 1.0);
  ActionChoice c;
  c.action = denormalize_action(raw);
  c.normalized = normalize_action(c.action);
  c.params = to_pid(c.action);
  return c;
}

ActionChoice DpgAgent::greedy_action(const std::vector<double>& state) const {
  const std::vector<double> raw = nets_.actor.forward(scaled_state(state));
  ActionChoice c;
  c.action = denormalize_action(raw);
  c.normalized = normalize_action(c.action);
  c.params = to_pid(c.action);
  return c;
}

void DpgAgent::store(Transition t) {
  if (t.s.size() != cfg_.state_dim || t.s_next.size() != cfg_.state_dim || t.a.size() != cfg_.action_dim())
    throw std::invalid_argument("transition dimensions do not match the agent");
  buffer_.store(std::move(t));
}

double DpgAgent::critic_value(const std::vector<double>& state, const std::vector<double>& action) const {
  return nets_.critic.forward(critic_input(scaled_state(state), normalize_action(action)))[0];
}

UpdateDiagnostics DpgAgent::update(std::mt19937_64& rng) {
  UpdateDiagnostics diag;
  const std::size_t batch = cfg_.batch_size;
  if (buffer_.size() < batch) return diag;
  diag.performed = true;
  const auto idx = buffer_.sample_indices(batch, rng);
  const double inv_b = 1.0 / static_cast<double>(batch);

  std::vector<std::vector<double>> states(batch);
  std::vector<double> targets(batch);
  for (std::size_t j = 0; j < batch; ++j) {
    const Transition& t = buffer_.at(idx[j]);
    states[j] = scaled_state(t.s);
    const auto next = scaled_state(t.s_next);
    const auto next_action = nets_.actor_target.forward(next);
    const double q_next = nets_.critic_target.forward(critic_input(next, next_action))[0];
    targets[j] = t.r / cfg_.reward_scale + cfg_.gamma * q_next;
  }

  // Critic: minimize mean (Q(s, a) - y)^2.
  Gradients critic_grads;
  ForwardCache cache;
  for (std::size_t j = 0; j < batch; ++j) {
    const Transition& t = buffer_.at(idx[j]);
    const double q = nets_.critic.forward(critic_input(states[j], normalize_action(t.a)), cache)[0];
    const double diff = q - targets[j];
    diag.critic_loss += diff * diff * inv_b;
    const double upstream = 2.0 * diff * inv_b;
    nets_.critic.backward(cache, std::span<const double>(&upstream, 1), critic_grads);
  }
  critic_opt_.step(nets_.critic.params(), critic_grads.params);

  // Actor: ascend mean Q(s, mu(s)) through dQ/da * dmu/dtheta.
  Gradients actor_grads;
  Gradients scratch;
  ForwardCache actor_cache;
  const std::size_t a_dim = cfg_.action_dim();
  for (std::size_t j = 0; j < batch; ++j) {
    const auto mu = nets_.actor.forward(states[j], actor_cache);
    const double q = nets_.critic.forward(critic_input(states[j], mu), cache)[0];
    diag.actor_objective += q * inv_b;
    const double upstream = -inv_b;  // descent on -Q
    scratch.params.clear();
    nets_.critic.backward(cache, std::span<const double>(&upstream, 1), scratch);
    const std::span<const double> dq_da(scratch.input.data() + cfg_.state_dim, a_dim);
    nets_.actor.backward(actor_cache, dq_da, actor_grads);
  }
  actor_opt_.step(nets_.actor.params(), actor_grads.params);

  polyak_update(nets_.critic_target.params(), nets_.critic.params(), cfg_.rho);
  polyak_update(nets_.actor_target.params(), nets_.actor.params(), cfg_.rho);
  ++updates_;
  return diag;
}

void DpgAgent::save(std::ostream& os) const {
  os << "dpg_agent " << updates_ << '\n';
  nets_.actor.save(os);
  nets_.critic.save(os);
  nets_.actor_target.save(os);
  nets_.critic_target.save(os);
  actor_opt_.save(os);
  critic_opt_.save(os);
  buffer_.save(os);
}

DpgAgent DpgAgent::load(std::istream& is, AgentConfig cfg) {
  std::string tag;
  std::size_t updates = 0;
  if (!(is >> tag >> updates) || tag != "dpg_agent") throw std::runtime_error("expected 'dpg_agent' header");
  AgentNets nets;
  nets.actor = Mlp::load(is);
  nets.critic = Mlp::load(is);
  nets.actor_target = Mlp::load(is);
  nets.critic_target = Mlp::load(is);
  DpgAgent agent(std::move(cfg), std::move(nets));
  agent.actor_opt_ = AdamOptimizer::load(is);
  agent.critic_opt_ = AdamOptimizer::load(is);
  agent.buffer_ = ReplayBuffer::load(is);
  agent.updates_ = updates;
  return agent;
}

}  // namespace pidrl
