#include "pidrl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "pidrl/csv_writer.hpp"

namespace pidrl {

namespace {

using nlohmann::json;

// JSON numbers carry 9 significant digits like the CSV files.
double num(double v) { return std::stod(format_number(v)); }

json to_json(const PidParams& p) { return json::array({num(p.kp), num(p.tau_i), num(p.tau_d)}); }

void prepare_dir(const std::filesystem::path& dir) {
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_summary(const RunConfig& cfg, const json& summary) {
  write_text(cfg.out_dir / "summary.json", summary.dump(2) + "\n");
  write_text(cfg.out_dir / "resolved-config.txt", cfg.resolved_text());
}

void write_training_log(const std::filesystem::path& path, const std::vector<EpisodeRecord>& log) {
  CsvWriter csv(path, {"episode", "reward", "switched", "kp", "ti", "td", "sigma"});
  for (const auto& r : log)
    csv.row({static_cast<double>(r.episode), r.reward, r.switched ? 1.0 : 0.0, r.explored.kp,
             r.explored.tau_i, r.explored.tau_d, r.sigma});
}

void write_learning_curve(const std::filesystem::path& path, const std::vector<EpisodeRecord>& log,
                          std::size_t window) {
  std::vector<double> rewards;
  for (const auto& r : log) rewards.push_back(r.reward);
  const auto avg = moving_average(rewards, window);
  CsvWriter csv(path, {"episode", "reward", "moving_average"});
  for (std::size_t i = 0; i < log.size(); ++i) csv.row({static_cast<double>(log[i].episode), rewards[i], avg[i]});
}

void write_parameter_trail(const std::filesystem::path& path, const TrainingRun& run) {
  CsvWriter csv(path, {"episode", "explored_kp", "explored_ti", "explored_td", "implemented_kp",
                       "implemented_ti", "implemented_td", "switched", "switch_time", "explored_label",
                       "implemented_label"});
  for (std::size_t i = 0; i < run.log.size(); ++i) {
    const auto& r = run.log[i];
    csv.row({format_number(static_cast<double>(r.episode)), format_number(r.explored.kp),
             format_number(r.explored.tau_i), format_number(r.explored.tau_d),
             format_number(r.implemented.kp), format_number(r.implemented.tau_i),
             format_number(r.implemented.tau_d), r.switched ? "1" : "0",
             r.switch_time ? std::to_string(*r.switch_time) : "",
             to_string(run.explored_verdicts[i].label), to_string(run.implemented_verdicts[i].label)});
  }
}

void write_training_artifacts(const RunConfig& cfg, const std::filesystem::path& dir, const TrainingRun& run) {
  prepare_dir(dir);
  write_training_log(dir / "training_log.csv", run.log);
  write_learning_curve(dir / "learning_curve.csv", run.log, cfg.moving_average_window);
  write_parameter_trail(dir / "parameter_trail.csv", run);
  write_episode_csv(dir / "final_episode.csv", run.final_episode);
  write_episode_csv(dir / "worst_episode.csv", run.worst_episode);
}

json training_summary(const RunConfig& cfg, const TrainingRun& run) {
  std::size_t switches = 0, explored_unstable = 0, implemented_unstable = 0;
  double min_reward = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < run.log.size(); ++i) {
    switches += run.log[i].switched ? 1 : 0;
    explored_unstable += run.explored_verdicts[i].label == StabilityLabel::unstable ? 1 : 0;
    implemented_unstable += run.implemented_verdicts[i].label == StabilityLabel::unstable ? 1 : 0;
    min_reward = std::min(min_reward, run.log[i].reward);
  }
  std::vector<double> rewards;
  for (const auto& r : run.log) rewards.push_back(r.reward);
  const auto avg = moving_average(rewards, cfg.moving_average_window);
  json s;
  s["episodes"] = run.log.size();
  s["benchmark_reward"] = num(run.benchmark);
  s["switch_count"] = switches;
  s["explored_unstable"] = explored_unstable;
  s["implemented_unstable"] = implemented_unstable;
  s["min_reward"] = run.log.empty() ? json(nullptr) : json(num(min_reward));
  s["final_reward"] = run.log.empty() ? json(nullptr) : json(num(run.log.back().reward));
  s["final_moving_average"] = avg.empty() ? json(nullptr) : json(num(avg.back()));
  s["final_explored"] = run.log.empty() ? json(nullptr) : to_json(run.log.back().explored);
  s["final_implemented"] = run.log.empty() ? json(nullptr) : to_json(run.log.back().implemented);
  s["final_greedy"] = to_json(run.final_greedy);
  s["final_greedy_mse"] = num(run.final_greedy_mse);
  return s;
}

double mean_tail_mse(const std::vector<double>& rewards, std::size_t count) {
  if (rewards.empty()) return 0.0;
  const std::size_t n = std::min(count, rewards.size());
  double sum = 0.0;
  for (std::size_t i = rewards.size() - n; i < rewards.size(); ++i) sum += -rewards[i];
  return sum / static_cast<double>(n);
}

}  // namespace

// ---------------------------------------------------------------------------

Trainer::Trainer(const RunConfig& cfg, const DiscretePlant& plant, bool case1_tie, bool preserve)
    : state_cfg_(cfg.state_config()),
      episode_cfg_(cfg.episode_config()),
      rng_(cfg.seed),
      agent_([&] {
        AgentConfig a = cfg.agent_config(case1_tie);
        EpisodeConfig ep = cfg.episode_config();
        a.reward_scale = compute_benchmark(plant, ep);
        return DpgAgent(a, rng_);
      }()) {
  episode_cfg_.r_bmk = compute_benchmark(plant, episode_cfg_);
  episode_cfg_.supervisor = preserve;
  EpisodeConfig probe = episode_cfg_;
  probe.supervisor = false;
  state_ = extract_state(pidrl::run_episode(plant, episode_cfg_.baseline, probe), state_cfg_);
}

Trainer::Trainer(const RunConfig& cfg, EpisodeConfig ep, DpgAgent agent, std::mt19937_64 rng,
                 std::vector<double> state, std::size_t episode)
    : state_cfg_(cfg.state_config()),
      episode_cfg_(std::move(ep)),
      rng_(rng),
      agent_(std::move(agent)),
      state_(std::move(state)),
      episode_(episode) {}

EpisodeRecord Trainer::run_episode(const DiscretePlant& plant, EpisodeResult* trajectory) {
  const ActionChoice choice = agent_.select_action(state_, episode_, rng_);
  EpisodeResult r = pidrl::run_episode(plant, choice.params, episode_cfg_);
  std::vector<double> next = extract_state(r, state_cfg_);
  agent_.store(Transition{state_, choice.action, r.reward, next});
  for (std::size_t i = 0; i < agent_.config().updates_per_episode; ++i) agent_.update(rng_);

  EpisodeRecord rec;
  rec.episode = episode_;
  rec.reward = r.reward;
  rec.switched = r.switched;
  rec.switch_time = r.switch_time;
  rec.explored = r.explored;
  rec.implemented = r.implemented;
  rec.sigma = noise_sigma(agent_.config(), episode_);
  rec.gain = plant.gain();

  state_ = std::move(next);
  ++episode_;
  if (trajectory) *trajectory = std::move(r);
  return rec;
}

PidParams Trainer::greedy_params() const { return agent_.greedy_action(state_).params; }

void Trainer::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  os << "pidrl-trainer 1\n";
  os << "episode " << episode_ << '\n';
  os << "tie " << (agent_.config().case1_tie ? 1 : 0) << '\n';
  os << "r_bmk\n";
  write_doubles(os, std::span<const double>(&episode_cfg_.r_bmk, 1));
  os << "rng " << rng_ << '\n';
  os << "state " << state_.size() << '\n';
  write_doubles(os, state_);
  agent_.save(os);
}

Trainer Trainer::load(const RunConfig& cfg, const std::filesystem::path& path, bool preserve) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("missing checkpoint " + path.string());
  std::string tag;
  int version = 0;
  std::size_t episode = 0;
  int tie = 0;
  if (!(is >> tag >> version) || tag != "pidrl-trainer" || version != 1)
    throw std::runtime_error("not a trainer checkpoint: " + path.string());
  if (!(is >> tag >> episode) || tag != "episode") throw std::runtime_error("checkpoint: expected episode");
  if (!(is >> tag >> tie) || tag != "tie") throw std::runtime_error("checkpoint: expected tie");
  if (!(is >> tag) || tag != "r_bmk") throw std::runtime_error("checkpoint: expected r_bmk");
  const double r_bmk = read_doubles(is, 1)[0];
  std::mt19937_64 rng;
  if (!(is >> tag >> rng) || tag != "rng") throw std::runtime_error("checkpoint: expected rng");
  std::size_t n = 0;
  if (!(is >> tag >> n) || tag != "state") throw std::runtime_error("checkpoint: expected state");
  std::vector<double> state = read_doubles(is, n);

  AgentConfig a = cfg.agent_config(tie != 0);
  a.reward_scale = r_bmk;
  DpgAgent agent = DpgAgent::load(is, a);
  EpisodeConfig ep = cfg.episode_config();
  ep.r_bmk = r_bmk;
  ep.supervisor = preserve;
  return Trainer(cfg, ep, std::move(agent), rng, std::move(state), episode);
}

// ---------------------------------------------------------------------------

std::vector<double> moving_average(const std::vector<double>& values, std::size_t window) {
  if (window == 0) throw std::invalid_argument("moving average window must be positive");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out[i] = sum / static_cast<double>(std::min(window, i + 1));
  }
  return out;
}

GridSpec grid_for(const RunConfig& cfg, bool case1_tie) {
  GridSpec g;
  g.kp = cfg.kp_range;
  g.tau_i = cfg.ti_range;
  g.tau_d = cfg.td_range;
  g.interval = cfg.grid_interval;
  g.case1_tie = case1_tie;
  return g;
}

TrainingRun train(const RunConfig& cfg, bool case1_tie, bool preserve,
                  const std::filesystem::path& checkpoint_out) {
  cfg.validate();
  const DiscretePlant plant = discretize_zoh(cfg.plant);
  Trainer trainer(cfg, plant, case1_tie, preserve);

  TrainingRun run;
  run.benchmark = trainer.benchmark();
  run.episode_config = trainer.episode_config();
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < cfg.episodes; ++k) {
    EpisodeResult ep;
    run.log.push_back(trainer.run_episode(plant, &ep));
    if (ep.reward < worst) {
      worst = ep.reward;
      run.worst_episode = ep;
    }
    if (k + 1 == cfg.episodes) run.final_episode = std::move(ep);
  }

  const StabilityVerdict baseline_verdict =
      classify(plant, run.episode_config.baseline, run.episode_config, cfg.stability_threshold);
  for (const auto& r : run.log) {
    run.explored_verdicts.push_back(classify(plant, r.explored, run.episode_config, cfg.stability_threshold));
    run.implemented_verdicts.push_back(r.switched ? baseline_verdict
                                                  : classify(plant, r.implemented, run.episode_config,
                                                             cfg.stability_threshold));
  }
  run.final_greedy = trainer.greedy_params();
  run.final_greedy_mse = classify(plant, run.final_greedy, run.episode_config, cfg.stability_threshold).mse;
  if (!checkpoint_out.empty()) trainer.save(checkpoint_out);
  return run;
}

// ---------------------------------------------------------------------------

Case1Result run_case1(const RunConfig& in) {
  RunConfig cfg = in;
  cfg.experiment = Experiment::case1;
  cfg.validate();
  prepare_dir(cfg.out_dir);
  Case1Result res;
  res.run = train(cfg, true, cfg.preserve, cfg.out_dir / "agent.ckpt");

  const DiscretePlant plant = discretize_zoh(cfg.plant);
  res.map = grid_map(plant, grid_for(cfg, true), res.run.episode_config, cfg.stability_threshold);
  res.grid_optimum = *std::min_element(res.map.begin(), res.map.end(),
                                       [](const auto& a, const auto& b) { return a.mse < b.mse; });

  write_training_artifacts(cfg, cfg.out_dir, res.run);
  write_stability_csv(cfg.out_dir / "stability_map.csv", res.map);

  std::size_t unstable_cells = 0;
  for (const auto& v : res.map) unstable_cells += v.label == StabilityLabel::unstable ? 1 : 0;
  res.summary = training_summary(cfg, res.run);
  res.summary["experiment"] = "case1";
  res.summary["seed"] = cfg.seed;
  res.summary["grid_points"] = res.map.size();
  res.summary["grid_unstable"] = unstable_cells;
  res.summary["grid_optimum"] = to_json(res.grid_optimum.params);
  res.summary["grid_optimum_mse"] = num(res.grid_optimum.mse);
  write_summary(cfg, res.summary);
  return res;
}

Case2Result run_case2(const RunConfig& in) {
  RunConfig cfg = in;
  cfg.experiment = Experiment::case2;
  cfg.validate();
  prepare_dir(cfg.out_dir);
  Case2Result res;
  res.preserved = train(cfg, false, true, cfg.out_dir / "preserve" / "agent.ckpt");
  res.unpreserved = train(cfg, false, false, cfg.out_dir / "no_preserve" / "agent.ckpt");
  write_training_artifacts(cfg, cfg.out_dir / "preserve", res.preserved);
  write_training_artifacts(cfg, cfg.out_dir / "no_preserve", res.unpreserved);

  res.summary["experiment"] = "case2";
  res.summary["seed"] = cfg.seed;
  res.summary["preserve"] = training_summary(cfg, res.preserved);
  res.summary["no_preserve"] = training_summary(cfg, res.unpreserved);
  write_summary(cfg, res.summary);
  return res;
}

AdaptivityResult run_adaptivity(const RunConfig& in) {
  RunConfig cfg = in;
  cfg.experiment = Experiment::adaptivity;
  cfg.validate();
  prepare_dir(cfg.out_dir);

  DiscretePlant plant = discretize_zoh(cfg.plant);
  plant.set_gain(cfg.drift_from);
  std::optional<Trainer> trainer;
  std::vector<double> rl_rewards;
  if (!cfg.checkpoint.empty()) {
    trainer.emplace(Trainer::load(cfg, cfg.checkpoint, cfg.preserve));
  } else {
    trainer.emplace(cfg, plant, false, cfg.preserve);
    for (std::size_t k = 0; k < cfg.episodes; ++k) rl_rewards.push_back(trainer->run_episode(plant).reward);
  }

  EpisodeConfig comparator = trainer->episode_config();
  comparator.supervisor = false;
  const std::vector<GainScheduleAnchor> anchors{{cfg.anchor_low_gain, cfg.anchor_low},
                                                {cfg.anchor_high_gain, cfg.anchor_high}};

  AdaptivityResult res;
  res.rl_pre_drift_mse = mean_tail_mse(rl_rewards, cfg.moving_average_window);
  res.scheduled_pre_drift_mse = -run_episode(plant, gain_schedule(anchors, plant.gain()), comparator).reward;
  res.fixed_pre_drift_mse = -run_episode(plant, cfg.baseline, comparator).reward;

  const long start = static_cast<long>(trainer->episode());
  const GainDrift drift{cfg.drift_from, cfg.drift_to, start, start + static_cast<long>(cfg.drift_episodes)};
  const std::size_t total = cfg.drift_episodes + cfg.settle_episodes;
  std::vector<double> post_rewards;
  EpisodeResult rl_final, scheduled_final, fixed_final;
  for (std::size_t k = 0; k < total; ++k) {
    const long episode = start + static_cast<long>(k) + 1;
    plant.set_gain(drift.gain_at(episode));
    AdaptivityRow row;
    row.episode = static_cast<std::size_t>(episode);
    row.gain = plant.gain();
    EpisodeResult rl_ep;
    row.rl_reward = trainer->run_episode(plant, &rl_ep).reward;
    EpisodeResult sched = run_episode(plant, gain_schedule(anchors, plant.gain()), comparator);
    EpisodeResult fixed = run_episode(plant, cfg.baseline, comparator);
    row.scheduled_reward = sched.reward;
    row.fixed_reward = fixed.reward;
    res.rows.push_back(row);
    post_rewards.push_back(row.rl_reward);
    if (k + 1 == total) {
      rl_final = std::move(rl_ep);
      scheduled_final = std::move(sched);
      fixed_final = std::move(fixed);
    }
  }
  res.rl_settled_mse = mean_tail_mse(post_rewards, cfg.moving_average_window);
  res.scheduled_settled_mse = res.rows.empty() ? res.scheduled_pre_drift_mse : -res.rows.back().scheduled_reward;
  res.fixed_settled_mse = res.rows.empty() ? res.fixed_pre_drift_mse : -res.rows.back().fixed_reward;

  {
    CsvWriter csv(cfg.out_dir / "adaptivity_curve.csv",
                  {"episode", "gain", "rl_reward", "scheduled_reward", "fixed_reward"});
    for (const auto& r : res.rows)
      csv.row({static_cast<double>(r.episode), r.gain, r.rl_reward, r.scheduled_reward, r.fixed_reward});
  }
  write_episode_csv(cfg.out_dir / "final_rl.csv", rl_final);
  write_episode_csv(cfg.out_dir / "final_scheduled.csv", scheduled_final);
  write_episode_csv(cfg.out_dir / "final_fixed.csv", fixed_final);
  trainer->save(cfg.out_dir / "agent.ckpt");

  res.summary["experiment"] = "adaptivity";
  res.summary["seed"] = cfg.seed;
  res.summary["start_episode"] = start;
  res.summary["final_gain"] = num(plant.gain());
  res.summary["rl_pre_drift_mse"] = num(res.rl_pre_drift_mse);
  res.summary["rl_settled_mse"] = num(res.rl_settled_mse);
  res.summary["scheduled_pre_drift_mse"] = num(res.scheduled_pre_drift_mse);
  res.summary["scheduled_settled_mse"] = num(res.scheduled_settled_mse);
  res.summary["fixed_pre_drift_mse"] = num(res.fixed_pre_drift_mse);
  res.summary["fixed_settled_mse"] = num(res.fixed_settled_mse);
  res.summary["final_rl_params"] = to_json(trainer->greedy_params());
  write_summary(cfg, res.summary);
  return res;
}

BenchmarkResult run_benchmark(const RunConfig& in) {
  RunConfig cfg = in;
  cfg.experiment = Experiment::benchmark;
  cfg.validate();
  prepare_dir(cfg.out_dir);
  const DiscretePlant plant = discretize_zoh(cfg.plant);

  PidParams rl;
  if (!cfg.checkpoint.empty()) {
    rl = Trainer::load(cfg, cfg.checkpoint, cfg.preserve).greedy_params();
  } else {
    rl = train(cfg, false, true).final_greedy;
  }
  const ClassicalTriples rules = classical_rules(cfg.plant);
  EpisodeConfig ep = cfg.episode_config();
  ep.supervisor = false;

  BenchmarkResult res;
  for (const auto& [name, params] : std::vector<std::pair<std::string, PidParams>>{
           {"rl", rl},
           {"imc_pid", rules.imc_pid},
           {"imc_mac", rules.imc_mac},
           {"closed_loop_specified", rules.closed_loop_specified}}) {
    BenchmarkEntry e;
    e.method = name;
    e.params = params;
    e.episode = run_episode(plant, params, ep);
    e.mse = -e.episode.reward;
    res.entries.push_back(std::move(e));
  }

  {
    CsvWriter csv(cfg.out_dir / "benchmark_bars.csv", {"method", "kp", "ti", "td", "mse"});
    for (const auto& e : res.entries)
      csv.row({e.method, format_number(e.params.kp), format_number(e.params.tau_i),
               format_number(e.params.tau_d), format_number(e.mse)});
  }
  {
    CsvWriter csv(cfg.out_dir / "benchmark_trajectories.csv",
                  {"t", "sp", "y_rl", "y_imc_pid", "y_imc_mac", "y_closed_loop_specified", "u_rl",
                   "u_imc_pid", "u_imc_mac", "u_closed_loop_specified"});
    const auto& E = res.entries;
    for (std::size_t t = 0; t < E[0].episode.y.size(); ++t)
      csv.row({static_cast<double>(t), E[0].episode.sp[t], E[0].episode.y[t], E[1].episode.y[t],
               E[2].episode.y[t], E[3].episode.y[t], E[0].episode.u[t], E[1].episode.u[t],
               E[2].episode.u[t], E[3].episode.u[t]});
  }

  res.summary["experiment"] = "benchmark";
  res.summary["seed"] = cfg.seed;
  for (const auto& e : res.entries) {
    res.summary["methods"][e.method]["params"] = to_json(e.params);
    res.summary["methods"][e.method]["mse"] = num(e.mse);
  }
  const auto best = std::min_element(res.entries.begin(), res.entries.end(),
                                     [](const auto& a, const auto& b) { return a.mse < b.mse; });
  res.summary["best_method"] = best->method;
  write_summary(cfg, res.summary);
  return res;
}

MapResult run_stability_map(const RunConfig& in) {
  RunConfig cfg = in;
  cfg.experiment = Experiment::stability_map;
  cfg.validate();
  prepare_dir(cfg.out_dir);
  const DiscretePlant plant = discretize_zoh(cfg.plant);
  MapResult res;
  res.verdicts = grid_map(plant, grid_for(cfg, !cfg.grid_full), cfg.episode_config(), cfg.stability_threshold);
  write_stability_csv(cfg.out_dir / "stability_map.csv", res.verdicts);
  std::size_t unstable = 0;
  for (const auto& v : res.verdicts) unstable += v.label == StabilityLabel::unstable ? 1 : 0;
  const auto best = std::min_element(res.verdicts.begin(), res.verdicts.end(),
                                     [](const auto& a, const auto& b) { return a.mse < b.mse; });
  res.summary["experiment"] = "stability-map";
  res.summary["grid_points"] = res.verdicts.size();
  res.summary["unstable"] = unstable;
  res.summary["optimum"] = to_json(best->params);
  res.summary["optimum_mse"] = num(best->mse);
  write_summary(cfg, res.summary);
  return res;
}

BaselineResult run_baseline_episode(const RunConfig& in) {
  RunConfig cfg = in;
  cfg.experiment = Experiment::baseline_episode;
  cfg.validate();
  prepare_dir(cfg.out_dir);
  const DiscretePlant plant = discretize_zoh(cfg.plant);
  EpisodeConfig ep = cfg.episode_config();
  ep.supervisor = false;
  BaselineResult res;
  res.episode = run_episode(plant, cfg.baseline, ep);
  res.state = extract_state(res.episode, cfg.state_config());
  write_episode_csv(cfg.out_dir / "baseline_episode.csv", res.episode);

  EpisodeConfig from_baseline = ep;
  from_baseline.r_bmk_mode = BenchmarkMode::from_baseline;
  res.summary["experiment"] = "baseline-episode";
  res.summary["baseline"] = to_json(cfg.baseline);
  res.summary["reward"] = num(res.episode.reward);
  res.summary["benchmark_from_baseline"] = num(compute_benchmark(plant, from_baseline));
  res.summary["benchmark"] = num(compute_benchmark(plant, ep));
  json state = json::array();
  for (double v : res.state) state.push_back(num(v));
  res.summary["state"] = state;
  write_summary(cfg, res.summary);
  return res;
}

json run_experiment(const RunConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::case1: return run_case1(cfg).summary;
    case Experiment::case2: return run_case2(cfg).summary;
    case Experiment::adaptivity: return run_adaptivity(cfg).summary;
    case Experiment::benchmark: return run_benchmark(cfg).summary;
    case Experiment::stability_map: return run_stability_map(cfg).summary;
    case Experiment::baseline_episode: return run_baseline_episode(cfg).summary;
  }
  throw std::logic_error("unhandled experiment");
}

}  // namespace pidrl
