#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace pidrl {

/// Second-order plus dead-time process
///   G(s) = gain / (a2 s^2 + a1 s + a0) * exp(-dead_time s)
/// sampled every sample_time seconds.
struct SopdtModel {
  double gain = 0.3;
  double a2 = 25.0;
  double a1 = 10.0;
  double a0 = 1.0;
  double dead_time = 10.0;
  double sample_time = 1.0;

  /// Throws std::invalid_argument when the model cannot be simulated.
  void validate() const;
};

/// The reference plant used throughout the experiments: 0.3/(25s^2+10s+1) e^{-10s}, dt = 1 s.
SopdtModel reference_sopdt();

/// Exactly discretized (zero-order hold) linear plant with an integer-step
/// input delay line. Output is the first state scaled by the process gain, so
/// a gain change rescales the output without touching the dynamics.
class DiscretePlant {
 public:
  using Mat2 = std::array<std::array<double, 2>, 2>;
  using Vec2 = std::array<double, 2>;

  DiscretePlant(const Mat2& phi, const Vec2& gamma, double gain,
                std::size_t delay_steps, double sample_time);

  /// Push u into the delay line, advance one sample, return the new output.
  double step(double u);

  /// Current output y = C x.
  double output() const { return gain_ * state_[0]; }

  /// Zero state and zero input history.
  void reset();

  void set_gain(double gain);
  double gain() const { return gain_; }

  std::size_t delay_steps() const { return delay_line_.size(); }
  double sample_time() const { return sample_time_; }
  const Mat2& phi() const { return phi_; }
  const Vec2& gamma() const { return gamma_; }
  const Vec2& state() const { return state_; }

 private:
  Mat2 phi_;
  Vec2 gamma_;
  double gain_;
  double sample_time_;
  Vec2 state_{0.0, 0.0};
  std::vector<double> delay_line_;
  std::size_t head_ = 0;
};

/// Zero-order-hold discretization of a SOPDT model. Non-integer
/// dead_time/sample_time is rounded to the nearest step (with a warning on stderr).
DiscretePlant discretize_zoh(const SopdtModel& model);

/// Continuous-time unit-step response of a repeated-pole SOPDT
/// K/(tau s + 1)^2 e^{-D s}, evaluated at time t.
double repeated_pole_step_response(double gain, double tau, double dead_time, double t);

/// Linear gain drift: `from` before `start_episode`, `to` after `end_episode`,
/// linearly interpolated in between.
struct GainDrift {
  double from = 0.3;
  double to = 0.5;
  long start_episode = 0;
  long end_episode = 1000;

  double gain_at(long episode) const;
};

}  // namespace pidrl
