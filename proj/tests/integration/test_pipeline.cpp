#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>

#include "pidrl/experiments.hpp"

using namespace pidrl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pidrl_it_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

int run_tune(const std::string& args) {
  const std::string cmd = std::string(PIDRL_TUNE_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("same seed gives bit-identical artifacts") {
  for (auto e : {Experiment::case1, Experiment::case2}) {
    RunConfig cfg;
    cfg.experiment = e;
    cfg.episodes = 25;
    cfg.grid_interval = 1.0;
    cfg.seed = 11;
    cfg.out_dir = scratch("det_a");
    run_experiment(cfg);
    const auto a = tree(cfg.out_dir);
    cfg.out_dir = scratch("det_b");
    run_experiment(cfg);
    const auto b = tree(cfg.out_dir);
    REQUIRE(a.size() == b.size());
    for (const auto& [name, content] : a) {
      INFO(name);
      REQUIRE(b.count(name) == 1);
      CHECK(b.at(name) == content);
    }

    cfg.seed = 12;
    cfg.out_dir = scratch("det_c");
    run_experiment(cfg);
    const auto c = tree(cfg.out_dir);
    const std::string log = e == Experiment::case1 ? "training_log.csv" : "preserve/training_log.csv";
    CHECK(c.at(log) != a.at(log));
  }
}

TEST_CASE("zero episodes leaves header-only training artifacts") {
  RunConfig cfg;
  cfg.experiment = Experiment::case1;
  cfg.episodes = 0;
  cfg.grid_interval = 1.0;
  cfg.out_dir = scratch("zero");
  run_experiment(cfg);
  for (const char* f : {"learning_curve.csv", "parameter_trail.csv", "training_log.csv", "final_episode.csv",
                        "worst_episode.csv"}) {
    INFO(f);
    CHECK(line_count(cfg.out_dir / f) == 1);
  }
  CHECK(line_count(cfg.out_dir / "stability_map.csv") == 1 + grid_for(cfg, true).size());
}

TEST_CASE("resolved config reproduces the run") {
  RunConfig cfg;
  cfg.experiment = Experiment::case2;
  cfg.episodes = 15;
  cfg.seed = 5;
  cfg.critic_lr = 0.0005;
  cfg.out_dir = scratch("resolved_a");
  run_experiment(cfg);

  RunConfig again;
  again.load_file(cfg.out_dir / "resolved-config.txt");
  again.out_dir = scratch("resolved_b");
  run_experiment(again);
  CHECK(slurp(cfg.out_dir / "preserve/training_log.csv") == slurp(again.out_dir / "preserve/training_log.csv"));
  CHECK(slurp(cfg.out_dir / "summary.json") == slurp(again.out_dir / "summary.json"));
}

TEST_CASE("checkpoint resume continues the same trajectory") {
  RunConfig cfg;
  cfg.experiment = Experiment::case2;
  cfg.seed = 9;
  const DiscretePlant plant = discretize_zoh(cfg.plant);
  const fs::path ckpt = scratch("ckpt") / "agent.ckpt";

  Trainer straight(cfg, plant, false, true);
  for (int i = 0; i < 40; ++i) straight.run_episode(plant);
  straight.save(ckpt);
  std::ostringstream expected;
  for (int i = 0; i < 10; ++i) {
    const EpisodeRecord r = straight.run_episode(plant);
    expected << r.episode << ' ' << r.reward << ' ' << r.explored.kp << ' ' << r.explored.tau_i << ' '
             << r.explored.tau_d << '\n';
  }

  Trainer resumed = Trainer::load(cfg, ckpt, true);
  CHECK(resumed.episode() == 40);
  std::ostringstream got;
  for (int i = 0; i < 10; ++i) {
    const EpisodeRecord r = resumed.run_episode(plant);
    got << r.episode << ' ' << r.reward << ' ' << r.explored.kp << ' ' << r.explored.tau_i << ' '
        << r.explored.tau_d << '\n';
  }
  CHECK(got.str() == expected.str());
}

TEST_CASE("benchmark and baseline experiments report consistent numbers") {
  RunConfig cfg;
  cfg.experiment = Experiment::baseline_episode;
  cfg.out_dir = scratch("baseline");
  const auto base = run_experiment(cfg);
  CHECK(base.dump().find("9.36016644") != std::string::npos);

  cfg.experiment = Experiment::benchmark;
  cfg.episodes = 5;
  cfg.out_dir = scratch("bench");
  const BenchmarkResult b = run_benchmark(cfg);
  REQUIRE(b.entries.size() == 4);
  CHECK(b.entries[1].method == "imc_pid");
  CHECK(b.entries[1].mse == doctest::Approx(4.6477).epsilon(1e-4));
  CHECK(b.entries[2].mse == doctest::Approx(4.6736).epsilon(1e-4));
  CHECK(b.entries[3].mse == doctest::Approx(6.1409).epsilon(1e-4));
  CHECK(line_count(cfg.out_dir / "benchmark_bars.csv") == 5);
}

TEST_CASE("tune command line exit codes") {
  const fs::path out = scratch("cli");
  CHECK(run_tune("baseline-episode --out " + out.string()) == 0);
  CHECK(fs::exists(out / "summary.json"));
  CHECK(run_tune("baseline-episode --out " + out.string() + " --set gamma=2") != 0);
  CHECK(run_tune("baseline-episode --out " + out.string() + " --set nope=1") != 0);
  CHECK(run_tune("baseline-episode --out " + out.string() + " --set horizon") != 0);
  CHECK(run_tune("case7 --out " + out.string()) != 0);
  CHECK(run_tune("baseline-episode --config /nonexistent/file.cfg") != 0);
  CHECK(run_tune("") != 0);
  CHECK(run_tune("rules") == 0);

  {
    std::ofstream f(out / "ok.cfg");
    f << "setpoint = 5\n";
  }
  CHECK(run_tune("baseline-episode --config " + (out / "ok.cfg").string() + " --seed 3 --out " + out.string()) == 0);
  CHECK(slurp(out / "resolved-config.txt").find("setpoint = 5\n") != std::string::npos);
  CHECK(slurp(out / "resolved-config.txt").find("seed = 3\n") != std::string::npos);
}
