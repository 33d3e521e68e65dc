#include "pidrl/run_config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace pidrl {

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::case1: return "case1";
    case Experiment::case2: return "case2";
    case Experiment::adaptivity: return "adaptivity";
    case Experiment::benchmark: return "benchmark";
    case Experiment::stability_map: return "stability-map";
    case Experiment::baseline_episode: return "baseline-episode";
  }
  return "case1";
}

Experiment parse_experiment(const std::string& name) {
  for (auto e : {Experiment::case1, Experiment::case2, Experiment::adaptivity, Experiment::benchmark,
                 Experiment::stability_map, Experiment::baseline_episode})
    if (to_string(e) == name) return e;
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
    throw std::invalid_argument(key + ": expected a number, got '" + text + "'");
  return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  if (t.empty() || t[0] == '-') throw std::invalid_argument(key + ": expected a non-negative integer");
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || errno == ERANGE)
    throw std::invalid_argument(key + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw std::invalid_argument(key + ": expected true/false, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  return out;
}

PidParams parse_triple(const std::string& key, const std::string& text) {
  const auto v = parse_list(key, text);
  if (v.size() != 3) throw std::invalid_argument(key + ": expected kp,tau_i,tau_d");
  return PidParams{v[0], v[1], v[2]};
}

ParamRange parse_range(const std::string& key, const std::string& text) {
  const auto v = parse_list(key, text);
  if (v.size() != 2) throw std::invalid_argument(key + ": expected lo,hi");
  return ParamRange{v[0], v[1]};
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const PidParams& p) { return fmt(p.kp) + "," + fmt(p.tau_i) + "," + fmt(p.tau_d); }
std::string fmt(const ParamRange& r) { return fmt(r.lo) + "," + fmt(r.hi); }

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define PIDRL_DOUBLE(name, member)                                                      \
  Field {                                                                               \
    name, [](const RunConfig& c) { return fmt(c.member); },                             \
        [](RunConfig& c, const std::string& v) { c.member = parse_double(name, v); }    \
  }
#define PIDRL_SIZE(name, member)                                                        \
  Field {                                                                               \
    name, [](const RunConfig& c) { return std::to_string(c.member); },                  \
        [](RunConfig& c, const std::string& v) { c.member = parse_unsigned(name, v); }  \
  }
#define PIDRL_BOOL(name, member)                                                        \
  Field {                                                                               \
    name, [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); },  \
        [](RunConfig& c, const std::string& v) { c.member = parse_bool(name, v); }      \
  }
#define PIDRL_TRIPLE(name, member)                                                      \
  Field {                                                                               \
    name, [](const RunConfig& c) { return fmt(c.member); },                             \
        [](RunConfig& c, const std::string& v) { c.member = parse_triple(name, v); }    \
  }
#define PIDRL_RANGE(name, member)                                                       \
  Field {                                                                               \
    name, [](const RunConfig& c) { return fmt(c.member); },                             \
        [](RunConfig& c, const std::string& v) { c.member = parse_range(name, v); }     \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"experiment", [](const RunConfig& c) { return to_string(c.experiment); },
            [](RunConfig& c, const std::string& v) { c.experiment = parse_experiment(trim(v)); }},
      PIDRL_SIZE("seed", seed),
      PIDRL_SIZE("episodes", episodes),
      PIDRL_DOUBLE("plant_gain", plant.gain),
      PIDRL_DOUBLE("plant_a2", plant.a2),
      PIDRL_DOUBLE("plant_a1", plant.a1),
      PIDRL_DOUBLE("plant_a0", plant.a0),
      PIDRL_DOUBLE("dead_time", plant.dead_time),
      PIDRL_DOUBLE("sample_time", plant.sample_time),
      PIDRL_SIZE("horizon", horizon),
      PIDRL_DOUBLE("setpoint", setpoint),
      Field{"mv_min", [](const RunConfig& c) { return fmt(c.bounds().u_min); },
            [](RunConfig& c, const std::string& v) { c.mv_min = parse_double("mv_min", v); }},
      Field{"mv_max", [](const RunConfig& c) { return fmt(c.bounds().u_max); },
            [](RunConfig& c, const std::string& v) { c.mv_max = parse_double("mv_max", v); }},
      PIDRL_DOUBLE("lambda", lambda),
      PIDRL_DOUBLE("r_bmk", r_bmk),
      Field{"r_bmk_mode",
            [](const RunConfig& c) {
              return std::string(c.r_bmk_mode == BenchmarkMode::fixed ? "fixed" : "from-baseline");
            },
            [](RunConfig& c, const std::string& v) {
              const auto t = trim(v);
              if (t == "fixed") c.r_bmk_mode = BenchmarkMode::fixed;
              else if (t == "from-baseline") c.r_bmk_mode = BenchmarkMode::from_baseline;
              else throw std::invalid_argument("r_bmk_mode: expected fixed or from-baseline");
            }},
      PIDRL_TRIPLE("baseline", baseline),
      PIDRL_BOOL("preserve", preserve),
      PIDRL_SIZE("state_dim", state_dim),
      PIDRL_SIZE("state_interval", state_interval),
      PIDRL_DOUBLE("actor_lr", actor_lr),
      PIDRL_DOUBLE("critic_lr", critic_lr),
      PIDRL_DOUBLE("gamma", gamma),
      PIDRL_DOUBLE("rho", rho),
      PIDRL_SIZE("buffer_size", buffer_size),
      PIDRL_SIZE("batch_size", batch_size),
      Field{"hidden",
            [](const RunConfig& c) {
              std::string s;
              for (std::size_t i = 0; i < c.hidden.size(); ++i) s += (i ? "," : "") + std::to_string(c.hidden[i]);
              return s;
            },
            [](RunConfig& c, const std::string& v) {
              std::vector<std::size_t> h;
              std::stringstream ss(v);
              std::string item;
              while (std::getline(ss, item, ',')) h.push_back(parse_unsigned("hidden", item));
              c.hidden = h;
            }},
      PIDRL_DOUBLE("noise_variance", noise_variance),
      PIDRL_DOUBLE("noise_decay", noise_decay),
      PIDRL_DOUBLE("noise_floor", noise_floor),
      PIDRL_DOUBLE("actor_output_init", actor_output_init),
      PIDRL_SIZE("updates_per_episode", updates_per_episode),
      PIDRL_BOOL("normalize_critic_action", normalize_critic_action),
      PIDRL_RANGE("kp_range", kp_range),
      PIDRL_RANGE("ti_range", ti_range),
      PIDRL_RANGE("td_range", td_range),
      PIDRL_SIZE("moving_average_window", moving_average_window),
      PIDRL_DOUBLE("stability_threshold", stability_threshold),
      PIDRL_DOUBLE("grid_interval", grid_interval),
      PIDRL_BOOL("grid_full", grid_full),
      PIDRL_DOUBLE("drift_from", drift_from),
      PIDRL_DOUBLE("drift_to", drift_to),
      PIDRL_SIZE("drift_episodes", drift_episodes),
      PIDRL_SIZE("settle_episodes", settle_episodes),
      PIDRL_DOUBLE("anchor_low_gain", anchor_low_gain),
      PIDRL_TRIPLE("anchor_low", anchor_low),
      PIDRL_DOUBLE("anchor_high_gain", anchor_high_gain),
      PIDRL_TRIPLE("anchor_high", anchor_high),
      Field{"checkpoint", [](const RunConfig& c) { return c.checkpoint.string(); },
            [](RunConfig& c, const std::string& v) { c.checkpoint = trim(v); }},
  };
  return table;
}

#undef PIDRL_DOUBLE
#undef PIDRL_SIZE
#undef PIDRL_BOOL
#undef PIDRL_TRIPLE
#undef PIDRL_RANGE

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string k = trim(key);
  for (const auto& f : fields()) {
    if (k == f.key) {
      f.set(*this, value);
      return;
    }
  }
  throw std::invalid_argument("unknown config key '" + k + "'");
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    set(line.substr(0, eq), line.substr(eq + 1));
  }
}

std::string RunConfig::resolved_text() const {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(*this) + "\n";
  return out;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> k;
  for (const auto& f : fields()) k.emplace_back(f.key);
  return k;
}

ActuatorBounds RunConfig::bounds() const {
  const bool wide = experiment == Experiment::case2 || experiment == Experiment::adaptivity ||
                    experiment == Experiment::benchmark;
  return ActuatorBounds{mv_min.value_or(wide ? -20.0 : 0.0), mv_max.value_or(100.0)};
}

EpisodeConfig RunConfig::episode_config() const {
  EpisodeConfig e;
  e.horizon = horizon;
  e.setpoint = setpoint;
  e.bounds = bounds();
  e.lambda = lambda;
  e.r_bmk = r_bmk;
  e.r_bmk_mode = r_bmk_mode;
  e.baseline = baseline;
  e.supervisor = preserve;
  return e;
}

StateExtractorConfig RunConfig::state_config() const { return StateExtractorConfig{state_dim, state_interval}; }

AgentConfig RunConfig::agent_config(bool case1_tie) const {
  AgentConfig a;
  a.actor_lr = actor_lr;
  a.critic_lr = critic_lr;
  a.gamma = gamma;
  a.rho = rho;
  a.buffer_capacity = buffer_size;
  a.batch_size = batch_size;
  a.noise_variance = noise_variance;
  a.noise_decay = noise_decay;
  a.noise_floor = noise_floor;
  a.actor_output_init = actor_output_init;
  a.updates_per_episode = updates_per_episode;
  a.normalize_critic_action = normalize_critic_action;
  a.state_dim = state_dim;
  a.hidden = hidden;
  a.case1_tie = case1_tie;
  a.action_low = {kp_range.lo, ti_range.lo};
  a.action_high = {kp_range.hi, ti_range.hi};
  if (!case1_tie) {
    a.action_low.push_back(td_range.lo);
    a.action_high.push_back(td_range.hi);
  }
  a.state_scale = std::abs(setpoint) > 0.0 ? std::abs(setpoint) : 1.0;
  a.reward_scale = r_bmk;
  return a;
}

void RunConfig::validate() const {
  plant.validate();
  episode_config().validate();
  state_config().validate(horizon);
  agent_config(false).validate();
  if (hidden.empty()) throw std::invalid_argument("hidden: at least one hidden layer required");
  for (auto h : hidden)
    if (h == 0) throw std::invalid_argument("hidden: widths must be positive");
  if (moving_average_window == 0) throw std::invalid_argument("moving_average_window must be positive");
  if (!(grid_interval > 0.0)) throw std::invalid_argument("grid_interval must be positive");
  if (!(stability_threshold > 0.0)) throw std::invalid_argument("stability_threshold must be positive");
  if (!(anchor_low_gain < anchor_high_gain)) throw std::invalid_argument("anchor gains must increase");
  if (!(ti_range.lo > 0.0)) throw std::invalid_argument("ti_range must start above 0");
}

}  // namespace pidrl
