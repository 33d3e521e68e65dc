#pragma once

#include <vector>

#include "pidrl/pid_controller.hpp"
#include "pidrl/process_sim.hpp"

namespace pidrl {

struct FopdtModel {
  double gain = 0.0;        // K_m
  double time_constant = 0.0;  // tau_m, seconds
  double dead_time = 0.0;   // D_m, seconds
};

/// K_m = K_c, tau_m = 1.641 tau, D_m = 0.505 tau + D.
FopdtModel fopdt_approx(double gain, double tau, double dead_time);

/// IMC filter constant max(0.25 D, 0.2 tau).
double imc_lambda(double dead_time, double tau);

/// IMC-PID on a FOPDT model.
PidParams imc_pid(const FopdtModel& fopdt, double lambda);

/// IMC with Maclaurin expansion, applied to the repeated-pole SOPDT directly.
PidParams imc_mac(double gain, double tau, double dead_time, double lambda);

/// Closed-loop-specified rule: Kp = tau / (2 K D), tau_i = tau_d = tau.
PidParams closed_loop_specified(double gain, double tau, double dead_time);

/// tau for a denominator a2 s^2 + a1 s + a0 == a0 (tau s + 1)^2. Throws when the
/// poles are not repeated (relative tolerance 1e-9 on a1^2 = 4 a2 a0).
double repeated_pole_time_constant(const SopdtModel& model);

struct ClassicalTriples {
  PidParams imc_pid;
  PidParams imc_mac;
  PidParams closed_loop_specified;
};

/// All three rules for a repeated-pole SOPDT. IMC-PID takes its lambda from the
/// FOPDT approximation, IMC-MAC from the original (D, tau).
ClassicalTriples classical_rules(const SopdtModel& model);

struct GainScheduleAnchor {
  double gain = 0.0;
  PidParams params;
};

/// Element-wise linear interpolation between the bracketing anchors (sorted by
/// gain, at least two); gains outside the anchor range are clamped.
PidParams gain_schedule(const std::vector<GainScheduleAnchor>& anchors, double gain);

}  // namespace pidrl
