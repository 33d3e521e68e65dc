#include "pidrl/stability_map.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pidrl/csv_writer.hpp"

namespace pidrl {

void GridSpec::validate() const {
  if (!(interval > 0.0)) throw std::invalid_argument("grid interval must be positive");
  for (const ParamRange* r : {&kp, &tau_i, &tau_d})
    if (!(r->lo <= r->hi)) throw std::invalid_argument("grid range requires lo <= hi");
  if (!(tau_i.lo > 0.0)) throw std::invalid_argument("tau_i grid must start above 0");
}

std::size_t GridSpec::count(const ParamRange& r) const {
  return static_cast<std::size_t>(std::floor((r.hi - r.lo) / interval + 1e-9)) + 1;
}

std::size_t GridSpec::size() const {
  return count(kp) * count(tau_i) * (case1_tie ? 1 : count(tau_d));
}

PidParams GridSpec::point(std::size_t index) const {
  const std::size_t nd = case1_tie ? 1 : count(tau_d);
  const std::size_t ni = count(tau_i);
  const std::size_t id = index % nd;
  const std::size_t ii = (index / nd) % ni;
  const std::size_t ik = index / (nd * ni);
  PidParams p;
  p.kp = kp.lo + static_cast<double>(ik) * interval;
  p.tau_i = tau_i.lo + static_cast<double>(ii) * interval;
  p.tau_d = case1_tie ? 2.0 * p.tau_i / 3.0 : tau_d.lo + static_cast<double>(id) * interval;
  return p;
}

std::string to_string(StabilityLabel label) {
  return label == StabilityLabel::unstable ? "unstable" : "stable";
}

StabilityVerdict classify(const DiscretePlant& plant, const PidParams& params,
                          const EpisodeConfig& config, double threshold) {
  EpisodeConfig raw = config;
  raw.supervisor = false;
  const EpisodeResult r = run_episode(plant, params, raw);
  StabilityVerdict v;
  v.params = params;
  v.mse = -r.reward;
  v.overshoot = *std::max_element(r.y.begin(), r.y.end()) - config.setpoint;
  v.label = (v.mse > threshold && v.overshoot > 0.0) ? StabilityLabel::unstable : StabilityLabel::stable;
  return v;
}

std::vector<StabilityVerdict> grid_map(const DiscretePlant& plant, const GridSpec& spec,
                                       const EpisodeConfig& config, double threshold) {
  spec.validate();
  config.validate();
  const long n = static_cast<long>(spec.size());
  std::vector<StabilityVerdict> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = classify(plant, spec.point(k), config, threshold);
  }
  return out;
}

std::vector<StabilityVerdict> grid_map_serial(const DiscretePlant& plant, const GridSpec& spec,
                                              const EpisodeConfig& config, double threshold) {
  spec.validate();
  config.validate();
  std::vector<StabilityVerdict> out;
  out.reserve(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) out.push_back(classify(plant, spec.point(i), config, threshold));
  return out;
}

void write_stability_csv(const std::filesystem::path& path, std::span<const StabilityVerdict> verdicts) {
  CsvWriter csv(path, {"kp", "ti", "td", "mse", "overshoot", "label"});
  for (const auto& v : verdicts) {
    csv.row({format_number(v.params.kp), format_number(v.params.tau_i), format_number(v.params.tau_d),
             format_number(v.mse), format_number(v.overshoot), to_string(v.label)});
  }
}

ExponentialEnvelope fit_envelope(std::span<const double> y, std::span<const double> sp, std::size_t t1) {
  if (y.size() != sp.size()) throw std::invalid_argument("trajectory lengths differ");
  if (y.size() < 10 || t1 + 20 > y.size())
    throw std::invalid_argument("envelope fit needs at least 20 post-switch samples");

  ExponentialEnvelope env;
  env.t1 = t1;
  double tail_mean = 0.0;
  for (std::size_t t = y.size() - 10; t < y.size(); ++t) tail_mean += y[t];
  env.y_ss = tail_mean / 10.0;

  const std::size_t n = y.size() - t1;
  std::vector<double> dev(n);
  for (std::size_t k = 0; k < n; ++k) dev[k] = std::abs(y[t1 + k] - env.y_ss);
  std::vector<double> upper(n);
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    running = std::max(running, dev[k]);
    upper[k] = running;
  }

  // Least squares of log(upper) against k over the first half of the tail,
  // skipping samples at the noise floor. The second half is held out for
  // envelope_ratio.
  const std::size_t fit_len = n / 2;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < fit_len; ++k) {
    if (upper[k] <= 1e-9) continue;
    const double x = static_cast<double>(k);
    const double ly = std::log(upper[k]);
    sx += x;
    sy += ly;
    sxx += x * x;
    sxy += x * ly;
    ++used;
  }
  if (used < 2) throw std::runtime_error("envelope fit: tail sits at steady state");
  const double un = static_cast<double>(used);
  const double slope = (un * sxy - sx * sy) / (un * sxx - sx * sx);
  env.alpha = -slope;
  if (!(env.alpha > 0.0)) throw std::runtime_error("envelope fit: tail does not decay");

  env.initial_deviation = dev[0];
  if (!(env.initial_deviation > 1e-9)) throw std::runtime_error("envelope fit: zero deviation at the switch");
  double m = 0.0;
  for (std::size_t k = 0; k < fit_len; ++k)
    m = std::max(m, dev[k] * std::exp(env.alpha * static_cast<double>(k)) / env.initial_deviation);
  env.m = m;
  return env;
}

double envelope_ratio(const ExponentialEnvelope& env, std::span<const double> y) {
  double worst = 0.0;
  for (std::size_t t = env.t1; t < y.size(); ++t) {
    // Same noise floor as the fit.
    if (std::abs(y[t] - env.y_ss) <= 1e-9) continue;
    const double bound = env.m * std::exp(-env.alpha * static_cast<double>(t - env.t1)) * env.initial_deviation;
    worst = std::max(worst, std::abs(y[t] - env.y_ss) / bound);
  }
  return worst;
}

EnvelopeCheck check_switched_envelope(const DiscretePlant& plant, const PidParams& explored,
                                      const EpisodeConfig& config, std::size_t extra_steps, double slack) {
  const EpisodeResult r = simulate_closed_loop(plant, explored, config, config.horizon + extra_steps);
  if (!r.switch_time) throw std::invalid_argument("episode did not switch to the baseline");
  EnvelopeCheck c;
  c.envelope = fit_envelope(r.y, r.sp, *r.switch_time);
  c.ratio = envelope_ratio(c.envelope, r.y);
  c.holds = c.ratio <= 1.0 + slack;
  return c;
}

}  // namespace pidrl
