#include "pidrl/pid_controller.hpp"

#include <cmath>
#include <stdexcept>

namespace pidrl {

void ActuatorBounds::validate() const {
  if (!std::isfinite(u_min) || !std::isfinite(u_max) || !(u_min < u_max))
    throw std::invalid_argument("actuator bounds require finite u_min < u_max");
}

ControlOutput compute_control(const PidParams& params, const PidState& state, double setpoint,
                              double measurement, double dt, const ActuatorBounds& bounds) {
  if (!(dt > 0.0)) throw std::invalid_argument("PID: dt must be positive");
  if (!std::isfinite(params.kp) || !std::isfinite(params.tau_i) || !std::isfinite(params.tau_d) ||
      !std::isfinite(setpoint) || !std::isfinite(measurement) ||
      !std::isfinite(state.integral_sum) || !std::isfinite(state.prev_y))
    throw std::domain_error("PID: non-finite input");
  if (params.tau_i == 0.0) throw std::invalid_argument("PID: tau_i must be non-zero");

  const double error = setpoint - measurement;
  const double derivative = params.tau_d * (state.prev_y - measurement) / dt;
  auto evaluate = [&](double integral) {
    PidTerms t;
    t.proportional = params.kp * error;
    t.integral = params.kp * integral / params.tau_i;
    t.derivative = params.kp * derivative;
    return t;
  };

  const double candidate = state.integral_sum + error * dt;
  PidTerms terms = evaluate(candidate);
  double raw = terms.proportional + terms.integral + terms.derivative;

  ControlOutput out;
  out.state.prev_y = measurement;
  if (bounds.contains(raw)) {
    out.state.integral_sum = candidate;
    out.state.saturated_last_step = false;
  } else {
    // Conditional integration: the accumulator keeps its previous value.
    out.state.integral_sum = state.integral_sum;
    out.state.saturated_last_step = true;
    terms = evaluate(state.integral_sum);
    raw = terms.proportional + terms.integral + terms.derivative;
  }
  out.terms = terms;
  out.unsaturated = raw;
  out.u = bounds.clamp(raw);
  return out;
}

PidState reset(const PidState&, double measurement) {
  return PidState{0.0, measurement, false};
}

}  // namespace pidrl
