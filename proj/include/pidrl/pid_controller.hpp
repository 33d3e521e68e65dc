#pragma once

namespace pidrl {

/// Position-form PID tuning triple. Doubles as the agent's action.
struct PidParams {
  double kp = 0.0;
  double tau_i = 1.0;  // seconds
  double tau_d = 0.0;  // seconds

  bool operator==(const PidParams&) const = default;
};

struct ActuatorBounds {
  double u_min = 0.0;
  double u_max = 100.0;

  double clamp(double u) const { return u < u_min ? u_min : (u > u_max ? u_max : u); }
  bool contains(double u) const { return u >= u_min && u <= u_max; }
  void validate() const;
};

struct PidState {
  double integral_sum = 0.0;  // sum of e * dt over committed steps
  double prev_y = 0.0;
  bool saturated_last_step = false;
};

struct PidTerms {
  double proportional = 0.0;
  double integral = 0.0;
  double derivative = 0.0;
};

struct ControlOutput {
  double u = 0.0;         // saturated control
  double unsaturated = 0.0;
  PidTerms terms;         // contributions making up `unsaturated`
  PidState state;
};

/// One sample of the digital PID
///   u = sat(Kp [e + I / tau_i + tau_d (y_prev - y) / dt])
/// with the integral frozen whenever the pre-saturation output (including the
/// current error in I) leaves the actuator bounds. The derivative acts on the
/// measurement, so setpoint steps produce no derivative kick.
ControlOutput compute_control(const PidParams& params, const PidState& state, double setpoint,
                              double measurement, double dt, const ActuatorBounds& bounds);

/// Clears the integral and the saturation flag; prev_y is set to the current measurement.
PidState reset(const PidState& state, double measurement);

}  // namespace pidrl
