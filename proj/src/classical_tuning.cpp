#include "pidrl/classical_tuning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pidrl {

FopdtModel fopdt_approx(double gain, double tau, double dead_time) {
  if (!(tau > 0.0)) throw std::invalid_argument("FOPDT approximation needs tau > 0");
  return FopdtModel{gain, 1.641 * tau, 0.505 * tau + dead_time};
}

double imc_lambda(double dead_time, double tau) {
  return std::max(0.25 * dead_time, 0.2 * tau);
}

PidParams imc_pid(const FopdtModel& m, double lambda) {
  if (!(lambda + m.dead_time > 0.0) || m.gain == 0.0)
    throw std::invalid_argument("IMC-PID: lambda + D_m must be positive and K_m non-zero");
  const double two_tau_plus_d = 2.0 * m.time_constant + m.dead_time;
  if (two_tau_plus_d == 0.0) throw std::invalid_argument("IMC-PID: 2 tau_m + D_m is zero");
  PidParams p;
  p.kp = two_tau_plus_d / (2.0 * m.gain * (lambda + m.dead_time));
  p.tau_i = m.time_constant + 0.5 * m.dead_time;
  p.tau_d = m.time_constant * m.dead_time / two_tau_plus_d;
  return p;
}

PidParams imc_mac(double gain, double tau, double dead_time, double lambda) {
  const double denom = 2.0 * lambda + dead_time;
  if (!(denom > 0.0) || gain == 0.0)
    throw std::invalid_argument("IMC-MAC: 2 lambda + D must be positive and K non-zero");
  PidParams p;
  p.tau_i = 2.0 * tau - (2.0 * lambda * lambda - dead_time * dead_time) / (2.0 * denom);
  if (p.tau_i == 0.0) throw std::invalid_argument("IMC-MAC: tau_i evaluates to zero");
  p.kp = p.tau_i / (gain * denom);
  const double d3 = dead_time * dead_time * dead_time;
  p.tau_d = p.tau_i - 2.0 * tau + (tau * tau - d3 / (6.0 * denom)) / p.tau_i;
  return p;
}

PidParams closed_loop_specified(double gain, double tau, double dead_time) {
  if (gain * dead_time == 0.0) throw std::invalid_argument("closed-loop-specified rule needs K D != 0");
  return PidParams{tau / (2.0 * gain * dead_time), tau, tau};
}

double repeated_pole_time_constant(const SopdtModel& model) {
  model.validate();
  const double lhs = model.a1 * model.a1;
  const double rhs = 4.0 * model.a2 * model.a0;
  if (std::abs(lhs - rhs) > 1e-9 * rhs)
    throw std::invalid_argument("tuning rules need a repeated-pole denominator");
  return std::sqrt(model.a2 / model.a0);
}

ClassicalTriples classical_rules(const SopdtModel& model) {
  const double tau = repeated_pole_time_constant(model);
  // Rules expect a unit-DC-gain denominator (tau s + 1)^2.
  const double gain = model.gain / model.a0;
  const double d = model.dead_time;
  const FopdtModel fopdt = fopdt_approx(gain, tau, d);
  ClassicalTriples out;
  out.imc_pid = imc_pid(fopdt, imc_lambda(fopdt.dead_time, fopdt.time_constant));
  out.imc_mac = imc_mac(gain, tau, d, imc_lambda(d, tau));
  out.closed_loop_specified = closed_loop_specified(gain, tau, d);
  return out;
}

PidParams gain_schedule(const std::vector<GainScheduleAnchor>& anchors, double gain) {
  if (anchors.size() < 2) throw std::invalid_argument("gain schedule needs at least two anchors");
  for (std::size_t i = 1; i < anchors.size(); ++i)
    if (!(anchors[i - 1].gain < anchors[i].gain))
      throw std::invalid_argument("gain schedule anchors must be strictly increasing");
  if (gain <= anchors.front().gain) return anchors.front().params;
  if (gain >= anchors.back().gain) return anchors.back().params;
  std::size_t hi = 1;
  while (anchors[hi].gain < gain) ++hi;
  const auto& a = anchors[hi - 1];
  const auto& b = anchors[hi];
  if (gain == b.gain) return b.params;
  const double w = (gain - a.gain) / (b.gain - a.gain);
  auto lerp = [w](double x, double y) { return x + w * (y - x); };
  return PidParams{lerp(a.params.kp, b.params.kp), lerp(a.params.tau_i, b.params.tau_i),
                   lerp(a.params.tau_d, b.params.tau_d)};
}

}  // namespace pidrl
