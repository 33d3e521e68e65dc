#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pidrl/closed_loop.hpp"
#include "pidrl/pid_controller.hpp"
#include "pidrl/process_sim.hpp"

namespace pidrl {

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct GridSpec {
  ParamRange kp{0.0, 10.0};
  ParamRange tau_i{0.2, 15.0};
  ParamRange tau_d{0.0, 10.0};
  double interval = 0.2;
  bool case1_tie = false;  // tau_d = 2 tau_i / 3; tau_d range ignored

  void validate() const;
  std::size_t count(const ParamRange& r) const;
  std::size_t size() const;
  /// Row-major over (kp, tau_i[, tau_d]).
  PidParams point(std::size_t index) const;
};

enum class StabilityLabel { stable, unstable };

struct StabilityVerdict {
  PidParams params;
  StabilityLabel label = StabilityLabel::stable;
  double mse = 0.0;
  double overshoot = 0.0;  // max_t y_t - setpoint

  bool operator==(const StabilityVerdict&) const = default;
};

inline constexpr double kStabilityThreshold = 15.0;

/// Unsupervised step test; unstable iff mse > threshold and the CV overshoots.
StabilityVerdict classify(const DiscretePlant& plant, const PidParams& params,
                          const EpisodeConfig& config, double threshold = kStabilityThreshold);

/// Classifies every grid point, fanned out over OpenMP threads.
std::vector<StabilityVerdict> grid_map(const DiscretePlant& plant, const GridSpec& spec,
                                       const EpisodeConfig& config,
                                       double threshold = kStabilityThreshold);

/// Single-threaded reference for grid_map; identical output.
std::vector<StabilityVerdict> grid_map_serial(const DiscretePlant& plant, const GridSpec& spec,
                                              const EpisodeConfig& config,
                                              double threshold = kStabilityThreshold);

/// Columns kp,ti,td,mse,overshoot,label.
void write_stability_csv(const std::filesystem::path& path, std::span<const StabilityVerdict> verdicts);

std::string to_string(StabilityLabel label);

/// ||y(t) - y_ss|| <= m exp(-alpha (t - t1)) ||y(t1) - y_ss||.
struct ExponentialEnvelope {
  double m = 0.0;
  double alpha = 0.0;
  std::size_t t1 = 0;
  double y_ss = 0.0;
  double initial_deviation = 0.0;  // ||y(t1) - y_ss||
};

/// Decay rate from a least-squares line through log of the running upper
/// envelope max_{s >= t} |y_s - y_ss|, fitted on the first half of the tail
/// t >= t1; m is the smallest amplitude that covers that half at the fitted
/// rate. The second half is left for envelope_ratio to test. y_ss is the mean
/// of the final 10 samples. Throws when fewer than 20 tail samples exist, when
/// every sample sits within 1e-9 of y_ss, or when the fitted rate is not positive.
ExponentialEnvelope fit_envelope(std::span<const double> y, std::span<const double> sp, std::size_t t1);

/// max over t >= t1 (samples within 1e-9 of y_ss skipped) of |y_t - y_ss| / (m exp(-alpha (t - t1)) ||y(t1) - y_ss||).
double envelope_ratio(const ExponentialEnvelope& env, std::span<const double> y);

struct EnvelopeCheck {
  ExponentialEnvelope envelope;
  double ratio = 0.0;
  bool holds = false;
};

/// Re-runs a supervised episode for `extra_steps` samples beyond the horizon,
/// fits the post-switch envelope and tests it with (1 + slack) tolerance.
EnvelopeCheck check_switched_envelope(const DiscretePlant& plant, const PidParams& explored,
                                      const EpisodeConfig& config, std::size_t extra_steps = 3000,
                                      double slack = 0.1);

}  // namespace pidrl
