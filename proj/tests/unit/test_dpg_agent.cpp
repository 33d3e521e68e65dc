#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "pidrl/dpg_agent.hpp"

using namespace pidrl;

namespace {

AgentConfig small_config() {
  AgentConfig c;
  c.state_dim = 6;
  c.hidden = {5};
  c.batch_size = 4;
  c.buffer_capacity = 10;
  return c;
}

Transition make_transition(std::mt19937_64& rng, std::size_t state_dim, double r) {
  std::uniform_real_distribution<double> d(0.0, 10.0);
  Transition t;
  for (std::size_t i = 0; i < state_dim; ++i) {
    t.s.push_back(d(rng));
    t.s_next.push_back(d(rng));
  }
  t.a = {d(rng), 0.2 + d(rng), d(rng)};
  t.r = r;
  return t;
}

double sign_step(double lr, double g) { return lr * g / (std::abs(g) + 1e-8); }

}  // namespace

TEST_CASE("noise standard deviation decays exponentially to its floor") {
  AgentConfig c;
  CHECK(noise_sigma(c, 0) == doctest::Approx(std::sqrt(0.05)).epsilon(1e-15));
  CHECK(noise_sigma(c, 1000) == doctest::Approx(std::sqrt(0.05) * std::exp(-1.0)).epsilon(1e-15));
  CHECK(noise_sigma(c, 1000) == doctest::Approx(0.08226).epsilon(1e-4));
  for (std::size_t k = 0; k < 5000; k += 250) CHECK(noise_sigma(c, k + 1) < noise_sigma(c, k));
  CHECK(noise_sigma(c, 100000) == c.noise_floor);
}

TEST_CASE("zero actor with no noise picks the middle of the box") {
  AgentConfig c = small_config();
  c.noise_variance = 0.0;
  c.noise_floor = 0.0;
  std::mt19937_64 rng(1);
  DpgAgent agent(c, rng);
  for (auto& p : agent.nets().actor.params()) p = 0.0;
  const auto choice = agent.select_action(std::vector<double>(6, 1.0), 0, rng);
  CHECK(choice.params.kp == 5.0);
  CHECK(choice.params.tau_i == doctest::Approx(7.6));
  CHECK(choice.params.tau_d == 5.0);
}

TEST_CASE("noisy actions are clipped onto the box") {
  AgentConfig c = small_config();
  c.noise_variance = 100.0;
  std::mt19937_64 rng(2);
  DpgAgent agent(c, rng);
  bool hit_high = false, hit_low = false;
  for (int i = 0; i < 200; ++i) {
    const auto a = agent.select_action(std::vector<double>(6, 0.5), 0, rng);
    for (std::size_t d = 0; d < 3; ++d) {
      CHECK(a.action[d] >= c.action_low[d]);
      CHECK(a.action[d] <= c.action_high[d]);
      hit_high = hit_high || a.action[d] == c.action_high[d];
      hit_low = hit_low || a.action[d] == c.action_low[d];
    }
  }
  CHECK(hit_high);
  CHECK(hit_low);
}

TEST_CASE("tied mode derives tau_d from tau_i") {
  AgentConfig c = small_config();
  c.case1_tie = true;
  c.action_low = {0.0, 0.2};
  c.action_high = {10.0, 15.0};
  std::mt19937_64 rng(3);
  DpgAgent agent(c, rng);
  const auto a = agent.greedy_action(std::vector<double>(6, 2.0));
  REQUIRE(a.action.size() == 2);
  CHECK(a.params.tau_d == doctest::Approx(2.0 * a.params.tau_i / 3.0).epsilon(1e-15));
  c.action_low = {0.0, 0.2, 0.0};
  CHECK_THROWS(c.validate());
}

TEST_CASE("replay buffer evicts the oldest transition first") {
  std::mt19937_64 rng(4);
  ReplayBuffer buf(1000);
  std::vector<Transition> all;
  for (int i = 0; i < 1001; ++i) {
    all.push_back(make_transition(rng, 3, -i));
    buf.store(all.back());
  }
  CHECK(buf.size() == 1000);
  CHECK(buf.insertions() == 1001);
  CHECK(buf.at(0) == all[1]);
  CHECK(buf.at(999) == all[1000]);
  Transition wrong = all[0];
  wrong.s.push_back(1.0);
  CHECK_THROWS(buf.store(wrong));
}

TEST_CASE("batch sampling draws distinct indices") {
  std::mt19937_64 rng(5);
  ReplayBuffer buf(50);
  for (int i = 0; i < 40; ++i) buf.store(make_transition(rng, 2, 0.0));
  for (int rep = 0; rep < 20; ++rep) {
    auto idx = buf.sample_indices(32, rng);
    std::sort(idx.begin(), idx.end());
    CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
    CHECK(idx.back() < 40);
  }
  CHECK_THROWS(buf.sample_indices(41, rng));
}

TEST_CASE("update is a no-op until the buffer holds a batch") {
  AgentConfig c = small_config();
  std::mt19937_64 rng(6);
  DpgAgent agent(c, rng);
  const AgentNets before = agent.nets();
  for (int i = 0; i < 3; ++i) {
    agent.store(make_transition(rng, 6, -1.0));
    CHECK_FALSE(agent.update(rng).performed);
  }
  CHECK(agent.nets().actor == before.actor);
  CHECK(agent.nets().critic == before.critic);
  CHECK(agent.nets().critic_target == before.critic_target);
  agent.store(make_transition(rng, 6, -1.0));
  CHECK(agent.update(rng).performed);
  CHECK_FALSE(agent.nets().critic == before.critic);
}

// Single-layer nets, one transition, batch of one: every quantity of the
// update can be written out by hand. Adam's first step moves each parameter by
// lr * g / (|g| + eps).
TEST_CASE("one update step matches a hand-worked oracle") {
  AgentConfig c;
  c.state_dim = 2;
  c.hidden = {};
  c.case1_tie = true;
  c.action_low = {0.0, 0.2};
  c.action_high = {10.0, 15.0};
  c.batch_size = 1;
  c.buffer_capacity = 4;
  c.gamma = 0.9;
  c.rho = 0.75;
  c.actor_lr = 0.01;
  c.critic_lr = 0.02;
  c.reward_scale = 15.0;
  c.state_scale = 7.5;
  std::mt19937_64 rng(7);
  DpgAgent agent(c, rng);

  // actor: [ln_g(2), ln_b(2), W(2x2), b(2)]; critic: [ln_g(4), ln_b(4), W(1x4), b(1)]
  const std::vector<double> actor{1.0, 1.0, 0.0, 0.0, 0.3, -0.2, 0.1, 0.4, 0.05, -0.1};
  const std::vector<double> critic{1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.2, -0.3, 0.5, 0.7, 0.1};
  auto& nets = agent.nets();
  std::copy(actor.begin(), actor.end(), nets.actor.params().begin());
  std::copy(critic.begin(), critic.end(), nets.critic.params().begin());
  nets.actor_target = nets.actor;
  nets.critic_target = nets.critic;

  // s = (15, 0) -> scaled (2, 0) -> layernormed (+n, -n); s' = (0, 15) -> (-n, +n).
  const double n = 1.0 / std::sqrt(1.0 + 1e-5);
  Transition t{{15.0, 0.0}, {2.5, 11.5}, -6.0, {0.0, 15.0}};
  agent.store(t);

  auto actor_out = [&](const std::vector<double>& p, double z0, double z1) {
    return std::vector<double>{std::tanh(p[4] * z0 + p[5] * z1 + p[8]), std::tanh(p[6] * z0 + p[7] * z1 + p[9])};
  };
  auto q = [&](const std::vector<double>& p, double z0, double z1, double a0, double a1) {
    return p[8] * z0 + p[9] * z1 + p[10] * a0 + p[11] * a1 + p[12];
  };

  // Target: r / 15 + gamma Q'(s', mu'(s')).
  const auto mu_next = actor_out(actor, -n, n);
  const double y = -6.0 / 15.0 + 0.9 * q(critic, -n, n, mu_next[0], mu_next[1]);
  // Normalized stored action: kp 2.5 -> -0.5, tau_i 11.5 -> 2 (11.3 / 14.8) - 1.
  const double a0 = -0.5, a1 = 2.0 * 11.3 / 14.8 - 1.0;
  const double diff = q(critic, n, -n, a0, a1) - y;

  // Critic gradients of (Q - y)^2. LN gains/biases of the state half see z,
  // the action half is passed through unnormalized.
  std::vector<double> gc(13, 0.0);
  const double z[4] = {n, -n, a0, a1};
  for (int i = 0; i < 4; ++i) {
    gc[8 + i] = 2.0 * diff * z[i];
    gc[i] = 2.0 * diff * critic[8 + i] * z[i];
    gc[4 + i] = 2.0 * diff * critic[8 + i];
  }
  gc[12] = 2.0 * diff;
  // Layernorm over the two state features maps (n, -n) back to itself, and its
  // Jacobian there is zero along the direction the bias gradient pushes, so
  // the state-half LN bias gradients cancel.
  std::vector<double> c1 = critic;
  for (int i = 0; i < 13; ++i) c1[i] -= sign_step(0.02, gc[i]);

  // Actor: ascend Q(s, mu(s)) on the updated critic.
  const auto mu = actor_out(actor, n, -n);
  const double dq_da0 = c1[10] * c1[2], dq_da1 = c1[11] * c1[3];
  std::vector<double> ga(10, 0.0);
  const double d0 = -dq_da0 * (1.0 - mu[0] * mu[0]);
  const double d1 = -dq_da1 * (1.0 - mu[1] * mu[1]);
  ga[4] = d0 * n;
  ga[5] = d0 * -n;
  ga[6] = d1 * n;
  ga[7] = d1 * -n;
  ga[8] = d0;
  ga[9] = d1;
  ga[0] = (d0 * actor[4] + d1 * actor[6]) * n;
  ga[1] = (d0 * actor[5] + d1 * actor[7]) * -n;
  std::vector<double> a1p = actor;
  for (int i = 0; i < 10; ++i) a1p[i] -= sign_step(0.01, ga[i]);

  const UpdateDiagnostics diag = agent.update(rng);
  REQUIRE(diag.performed);
  CHECK(diag.critic_loss == doctest::Approx(diff * diff).epsilon(1e-12));

  const auto pc = agent.nets().critic.params();
  // The state-half LN bias gradients are ~1e-17 rather than exactly zero, so
  // their first Adam step is not pinned down; everything else is.
  for (int i : {0, 1, 2, 3, 6, 7, 8, 9, 10, 11, 12}) {
    CAPTURE(i);
    CHECK(pc[i] == doctest::Approx(c1[i]).epsilon(1e-12));
  }
  const auto pa = agent.nets().actor.params();
  for (int i : {4, 5, 6, 7, 8, 9}) {
    CAPTURE(i);
    CHECK(pa[i] == doctest::Approx(a1p[i]).epsilon(1e-12));
  }
  // Targets moved a (1 - rho) fraction of the way.
  const auto tc = agent.nets().critic_target.params();
  for (int i = 0; i < 13; ++i) CHECK(tc[i] == doctest::Approx(0.75 * critic[i] + 0.25 * pc[i]).epsilon(1e-14));
  const auto ta = agent.nets().actor_target.params();
  for (int i = 0; i < 10; ++i) CHECK(ta[i] == doctest::Approx(0.75 * actor[i] + 0.25 * pa[i]).epsilon(1e-14));
}

TEST_CASE("small-step sanity on fixed targets and a frozen critic") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    CAPTURE(seed);
    AgentConfig c = small_config();
    c.actor_lr = 1e-6;
    c.critic_lr = 1e-6;
    std::mt19937_64 rng(seed);
    DpgAgent agent(c, rng);
    std::vector<Transition> batch;
    for (int i = 0; i < 4; ++i) {
      batch.push_back(make_transition(rng, 6, -3.0 - i));
      agent.store(batch.back());
    }
    const DpgAgent before = agent;

    // Targets from the pre-update target networks.
    auto scaled = [&](const std::vector<double>& s) {
      std::vector<double> out;
      for (double v : s) out.push_back(v / c.state_scale);
      return out;
    };
    std::vector<double> y;
    for (const auto& t : batch) {
      auto x = scaled(t.s_next);
      const auto mu = before.nets().actor_target.forward(x);
      x.insert(x.end(), mu.begin(), mu.end());
      y.push_back(t.r / c.reward_scale + c.gamma * before.nets().critic_target.forward(x)[0]);
    }
    auto loss = [&](const DpgAgent& a) {
      double l = 0.0;
      for (std::size_t j = 0; j < batch.size(); ++j) {
        const double d = a.critic_value(batch[j].s, batch[j].a) - y[j];
        l += d * d / batch.size();
      }
      return l;
    };

    std::mt19937_64 r(99);  // batch == buffer, so every sample is used
    agent.update(r);
    CHECK(loss(agent) <= loss(before));

    // The actor stepped on the updated critic; hold that critic fixed.
    double q_old = 0.0, q_new = 0.0;
    for (const auto& t : batch) {
      q_old += agent.critic_value(t.s, before.greedy_action(t.s).action);
      q_new += agent.critic_value(t.s, agent.greedy_action(t.s).action);
    }
    CHECK(q_new >= q_old);
  }
}

TEST_CASE("targets never overshoot the online networks") {
  AgentConfig c = small_config();
  std::mt19937_64 rng(12);
  DpgAgent agent(c, rng);
  const AgentNets start = agent.nets();
  for (int i = 0; i < 10; ++i) agent.store(make_transition(rng, 6, -2.0));
  for (int k = 0; k < 30; ++k) agent.update(rng);
  auto dist = [](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };
  const auto& nets = agent.nets();
  CHECK(dist(nets.critic_target.params(), start.critic.params()) <=
        dist(nets.critic.params(), start.critic.params()));
  CHECK(dist(nets.actor_target.params(), start.actor.params()) <=
        dist(nets.actor.params(), start.actor.params()));
}

TEST_CASE("agent checkpoint round trip restores networks, buffer and counters") {
  AgentConfig c = small_config();
  std::mt19937_64 rng(13);
  DpgAgent agent(c, rng);
  for (int i = 0; i < 6; ++i) agent.store(make_transition(rng, 6, -1.5 * i));
  agent.update(rng);
  std::stringstream ss;
  agent.save(ss);
  DpgAgent back = DpgAgent::load(ss, c);
  CHECK(back.nets().actor == agent.nets().actor);
  CHECK(back.nets().critic_target == agent.nets().critic_target);
  CHECK(back.buffer().size() == agent.buffer().size());
  CHECK(back.buffer().at(5) == agent.buffer().at(5));
  CHECK(back.updates() == agent.updates());
  // Identical continuation.
  std::mt19937_64 r1(5), r2(5);
  agent.update(r1);
  back.update(r2);
  CHECK(back.nets().actor == agent.nets().actor);
}
