#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "pidrl/run_config.hpp"

using namespace pidrl;

TEST_CASE("defaults follow the hyper-parameter table") {
  const RunConfig c;
  CHECK(c.episodes == 2000);
  CHECK(c.actor_lr == 0.0002);
  CHECK(c.critic_lr == 0.0002);
  CHECK(c.gamma == 0.99);
  CHECK(c.rho == 0.999);
  CHECK(c.buffer_size == 1000);
  CHECK(c.batch_size == 32);
  CHECK(c.state_dim == 30);
  CHECK(c.state_interval == 20);
  CHECK(c.lambda == 1.0);
  CHECK(c.r_bmk == 15.0);
  CHECK(c.noise_variance == 0.05);
  CHECK(c.noise_decay == 0.001);
  CHECK(c.hidden == std::vector<std::size_t>{40, 30});
  CHECK(c.baseline == PidParams{4.56, 8.85, 5.90});
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("actuator bounds default per experiment") {
  RunConfig c;
  for (auto e : {Experiment::case1, Experiment::stability_map, Experiment::baseline_episode}) {
    c.experiment = e;
    CHECK(c.bounds().u_min == 0.0);
    CHECK(c.bounds().u_max == 100.0);
  }
  for (auto e : {Experiment::case2, Experiment::adaptivity, Experiment::benchmark}) {
    c.experiment = e;
    CHECK(c.bounds().u_min == -20.0);
    CHECK(c.bounds().u_max == 100.0);
  }
  c.set("mv_min", "-5");
  CHECK(c.bounds().u_min == -5.0);
}

TEST_CASE("set parses typed values") {
  RunConfig c;
  c.set("episodes", "12");
  c.set(" gamma ", " 0.5 ");
  c.set("baseline", "1,2,3");
  c.set("kp_range", "0,5");
  c.set("preserve", "false");
  c.set("hidden", "8,4,2");
  c.set("experiment", "benchmark");
  CHECK(c.episodes == 12);
  CHECK(c.gamma == 0.5);
  CHECK(c.baseline == PidParams{1, 2, 3});
  CHECK(c.kp_range.hi == 5.0);
  CHECK_FALSE(c.preserve);
  CHECK(c.hidden == std::vector<std::size_t>{8, 4, 2});
  CHECK(c.experiment == Experiment::benchmark);
}

TEST_CASE("set rejects bad keys and values") {
  RunConfig c;
  CHECK_THROWS_AS(c.set("no_such_key", "1"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("episodes", "-3"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("episodes", "ten"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("gamma", "0.5x"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("baseline", "1,2"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("preserve", "maybe"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("experiment", "case3"), std::invalid_argument);
}

TEST_CASE("validate catches cross-field violations") {
  auto bad = [](const char* key, const char* value) {
    RunConfig c;
    c.set(key, value);
    return c;
  };
  CHECK_THROWS_AS(bad("gamma", "1.5").validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad("state_dim", "31").validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad("mv_min", "200").validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad("ti_range", "0,15").validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad("batch_size", "0").validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad("plant_a2", "-1").validate(), std::invalid_argument);
}

TEST_CASE("config file loading and resolved round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "pidrl_cfg_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "a.cfg");
    f << "# comment line\n\nepisodes = 7   # trailing\nseed=42\ncritic_lr = 0.001\nbaseline = 3, 9, 4\n";
  }
  RunConfig c;
  c.load_file(dir / "a.cfg");
  CHECK(c.episodes == 7);
  CHECK(c.seed == 42);
  CHECK(c.critic_lr == 0.001);
  CHECK(c.baseline == PidParams{3, 9, 4});

  c.set("setpoint", "0.1");
  c.set("experiment", "case2");
  {
    std::ofstream f(dir / "resolved.cfg");
    f << c.resolved_text();
  }
  RunConfig d;
  d.load_file(dir / "resolved.cfg");
  CHECK(d.resolved_text() == c.resolved_text());
  CHECK(d.setpoint == c.setpoint);
  CHECK(d.bounds().u_min == -20.0);

  {
    std::ofstream f(dir / "bad.cfg");
    f << "episodes 7\n";
  }
  CHECK_THROWS_AS(RunConfig{}.load_file(dir / "bad.cfg"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig{}.load_file(dir / "missing.cfg"), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("every key appears once in the resolved text") {
  const RunConfig c;
  const std::string text = "\n" + c.resolved_text();
  for (const auto& k : RunConfig::keys()) {
    const std::string needle = "\n" + k + " = ";
    const auto first = text.find(needle);
    CHECK(first != std::string::npos);
    CHECK(text.find(needle, first + 1) == std::string::npos);
  }
}

TEST_CASE("derived configs carry the knobs") {
  RunConfig c;
  c.set("critic_lr", "0.003");
  const AgentConfig a2 = c.agent_config(false);
  CHECK(a2.critic_lr == 0.003);
  CHECK(a2.action_low.size() == 3);
  const AgentConfig a1 = c.agent_config(true);
  CHECK(a1.action_low.size() == 2);
  CHECK(a1.state_scale == 7.5);
  CHECK(c.episode_config().supervisor);
  c.set("preserve", "false");
  CHECK_FALSE(c.episode_config().supervisor);
}
