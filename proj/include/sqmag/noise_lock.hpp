#pragma once

// Quantum noise locking: a discrete dither-and-difference servo on the LO
// phase that parks it at the minimum or maximum of the detected noise power.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "sqmag/polarization.hpp"

namespace sqmag {

enum class LockTarget { Min, Max };

struct LockConfig {
  double dither_amplitude_rad = 0.05;
  /// Dither rate of the physical servo; the discrete model is rate-free and
  /// only carries it for reporting.
  double dither_freq_hz = 20e3;
  /// Phase correction (rad) per unit of normalized error.
  double loop_gain = 0.5;
  LockTarget target = LockTarget::Min;
  double settle_tolerance_rad = 0.01;
  std::size_t max_steps = 2000;
  /// Consecutive in-tolerance steps required to declare lock.
  std::size_t consecutive_to_lock = 10;
  /// Steps kept running after lock is declared (for residual statistics).
  std::size_t post_lock_steps = 0;
  double initial_phase_rad = 0.3;

  void validate() const;
};

struct LockSample {
  std::size_t step = 0;
  double phase_rad = 0.0;
  double noise_power = 0.0;
};

struct LockState {
  double phase_estimate = 0.0;
  double error_integrator = 0.0;
  double last_error = 0.0;
  bool locked = false;
  /// Step index at which the lock criterion was first met.
  std::size_t lock_step = 0;
  std::vector<LockSample> history;
};

using NoiseMeasurement = std::function<double(double phase_rad)>;

/// One servo iteration: measures at phase +- dither, forms the normalized
/// error s (P- - P+)/(P- + P+) with s = +1 for Min and -1 for Max, and moves
/// the phase by loop_gain * error. Throws MeasurementFailure when the
/// measurement is non-finite or negative; exceptions from the callable
/// propagate unchanged.
LockState lock_step(const LockState& state, const NoiseMeasurement& measure, const LockConfig& cfg);

/// Phase of the nearest lock point for the given target.
double nearest_target_phase(const QuadratureNoiseState& q, LockTarget target, double phase) noexcept;

/// Signed distance (rad) from phase to the nearest lock point.
double phase_error(const QuadratureNoiseState& q, LockTarget target, double phase) noexcept;

/// Linearized loop gain per step at the lock point divided into 2: the loop
/// contracts for loop_gain below this value.
double stability_bound(const QuadratureNoiseState& q, const LockConfig& cfg);

/// Runs lock_step against quad_variance(q, .) with multiplicative Gaussian
/// measurement noise of relative size noise_level. Throws LockNotAcquired if
/// the landscape is flat or max_steps is exhausted.
LockState run_lock(const QuadratureNoiseState& q, double noise_level, const LockConfig& cfg, std::uint64_t seed);

/// RMS phase error over the history entries from `from_step` onward.
double residual_phase_rms(const LockState& state, const QuadratureNoiseState& q, LockTarget target,
                          std::size_t from_step);

/// CSV with columns step,phase_rad,noise_power_linear.
void write_history_csv(const LockState& state, std::ostream& out);

}  // namespace sqmag
