#include "pidrl/process_sim.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace pidrl {

void SopdtModel::validate() const {
  if (!(a2 > 0.0)) throw std::invalid_argument("SOPDT: a2 must be positive");
  if (!(a0 > 0.0)) throw std::invalid_argument("SOPDT: a0 must be positive");
  if (!std::isfinite(a1)) throw std::invalid_argument("SOPDT: a1 must be finite");
  if (!std::isfinite(gain)) throw std::invalid_argument("SOPDT: gain must be finite");
  if (!(sample_time > 0.0)) throw std::invalid_argument("SOPDT: sample_time must be positive");
  if (!(dead_time >= 0.0) || !std::isfinite(dead_time))
    throw std::invalid_argument("SOPDT: dead_time must be non-negative");
}

SopdtModel reference_sopdt() { return SopdtModel{}; }

DiscretePlant::DiscretePlant(const Mat2& phi, const Vec2& gamma, double gain,
                             std::size_t delay_steps, double sample_time)
    : phi_(phi), gamma_(gamma), gain_(gain), sample_time_(sample_time),
      delay_line_(delay_steps, 0.0) {}

double DiscretePlant::step(double u) {
  if (!std::isfinite(u)) throw std::domain_error("plant input is not finite");
  double applied = u;
  if (!delay_line_.empty()) {
    applied = delay_line_[head_];
    delay_line_[head_] = u;
    head_ = (head_ + 1) % delay_line_.size();
  }
  const Vec2 x = state_;
  state_[0] = phi_[0][0] * x[0] + phi_[0][1] * x[1] + gamma_[0] * applied;
  state_[1] = phi_[1][0] * x[0] + phi_[1][1] * x[1] + gamma_[1] * applied;
  return output();
}

void DiscretePlant::reset() {
  state_ = {0.0, 0.0};
  std::fill(delay_line_.begin(), delay_line_.end(), 0.0);
  head_ = 0;
}

void DiscretePlant::set_gain(double gain) {
  if (!std::isfinite(gain)) throw std::invalid_argument("plant gain must be finite");
  gain_ = gain;
}

namespace {

// cosh(sqrt(z)) and sinh(sqrt(z))/sqrt(z), continued analytically to z <= 0.
struct HyperbolicPair {
  double c;
  double s;
};

HyperbolicPair hyperbolic_pair(double z) {
  if (std::abs(z) < 1e-6) {
    return {1.0 + z / 2.0 + z * z / 24.0 + z * z * z / 720.0,
            1.0 + z / 6.0 + z * z / 120.0 + z * z * z / 5040.0};
  }
  if (z > 0.0) {
    const double r = std::sqrt(z);
    return {std::cosh(r), std::sinh(r) / r};
  }
  const double r = std::sqrt(-z);
  return {std::cos(r), std::sin(r) / r};
}

}  // namespace

DiscretePlant discretize_zoh(const SopdtModel& model) {
  model.validate();
  const double dt = model.sample_time;
  // Companion form: x1' = x2, x2' = -p x1 - q x2 + u / a2.
  const double p = model.a0 / model.a2;
  const double q = model.a1 / model.a2;
  const double mean_eig = -q / 2.0;
  const double disc = q * q / 4.0 - p;

  // exp(A dt) = exp(m dt) [c I + s dt (A - m I)] since (A - m I)^2 = disc I.
  const auto [c, s_unit] = hyperbolic_pair(disc * dt * dt);
  const double s = s_unit * dt;
  const double scale = std::exp(mean_eig * dt);
  DiscretePlant::Mat2 phi{};
  phi[0][0] = scale * (c + s * (0.0 - mean_eig));
  phi[0][1] = scale * s;
  phi[1][0] = scale * s * (-p);
  phi[1][1] = scale * (c + s * (-q - mean_eig));

  // Gamma = A^{-1} (Phi - I) B with B = (0, 1/a2); A^{-1} = [[-q, -1], [p, 0]] / p.
  const double b2 = 1.0 / model.a2;
  const double m01 = phi[0][1] * b2;
  const double m11 = (phi[1][1] - 1.0) * b2;
  DiscretePlant::Vec2 gamma{(-q * m01 - m11) / p, m01};

  const double ratio = model.dead_time / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9) {
    std::cerr << "warning: dead time " << model.dead_time
              << " s is not a multiple of the sample time; using " << rounded * dt << " s\n";
  }
  return DiscretePlant(phi, gamma, model.gain, static_cast<std::size_t>(rounded), dt);
}

double repeated_pole_step_response(double gain, double tau, double dead_time, double t) {
  if (t <= dead_time) return 0.0;
  const double x = (t - dead_time) / tau;
  return gain * (1.0 - std::exp(-x) * (1.0 + x));
}

double GainDrift::gain_at(long episode) const {
  if (episode <= start_episode) return from;
  if (episode >= end_episode) return to;
  const double frac = static_cast<double>(episode - start_episode) /
                      static_cast<double>(end_episode - start_episode);
  return from + (to - from) * frac;
}

}  // namespace pidrl
