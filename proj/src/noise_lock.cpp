#include "sqmag/noise_lock.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "sqmag/errors.hpp"
#include "sqmag/random.hpp"

namespace sqmag {

namespace {

constexpr double kPi = std::numbers::pi;

double checked(double p) {
  if (!std::isfinite(p) || p < 0.0) {
    std::ostringstream msg;
    msg << "noise measurement returned " << p;
    throw Error(ErrorCode::MeasurementFailure, msg.str());
  }
  return p;
}

}  // namespace

void LockConfig::validate() const {
  if (!(dither_amplitude_rad > 0.0)) throw Error(ErrorCode::InvalidParameter, "dither amplitude must be positive");
  if (!(loop_gain > 0.0)) throw Error(ErrorCode::InvalidParameter, "loop gain must be positive");
  if (!(settle_tolerance_rad > 0.0)) throw Error(ErrorCode::InvalidParameter, "settle tolerance must be positive");
  if (consecutive_to_lock == 0) throw Error(ErrorCode::InvalidParameter, "lock criterion needs at least one step");
}

LockState lock_step(const LockState& state, const NoiseMeasurement& measure, const LockConfig& cfg) {
  const double d = cfg.dither_amplitude_rad;
  const double p_plus = checked(measure(state.phase_estimate + d));
  const double p_minus = checked(measure(state.phase_estimate - d));
  const double sum = p_plus + p_minus;
  const double sign = cfg.target == LockTarget::Min ? 1.0 : -1.0;
  const double error = sum > 0.0 ? sign * (p_minus - p_plus) / sum : 0.0;
  const double correction = cfg.loop_gain * error;

  LockState next = state;
  next.last_error = error;
  next.error_integrator += correction;
  next.phase_estimate = wrap_angle(state.phase_estimate + correction);
  next.history.push_back({state.history.size(), next.phase_estimate, 0.5 * sum});
  return next;
}

double nearest_target_phase(const QuadratureNoiseState& q, LockTarget target, double phase) noexcept {
  return phase - phase_error(q, target, phase);
}

double phase_error(const QuadratureNoiseState& q, LockTarget target, double phase) noexcept {
  const double anchor = q.theta_min() + (target == LockTarget::Max ? kPi / 2.0 : 0.0);
  // Lock points repeat every pi; fold into (-pi/2, pi/2].
  double delta = std::remainder(phase - anchor, kPi);
  if (delta <= -kPi / 2.0) delta += kPi;
  return delta;
}

double stability_bound(const QuadratureNoiseState& q, const LockConfig& cfg) {
  cfg.validate();
  const double d = cfg.dither_amplitude_rad;
  const double target = q.theta_min() + (cfg.target == LockTarget::Max ? kPi / 2.0 : 0.0);
  // Near the target, (P- - P+)/(P- + P+) ~ kappa * delta with
  // kappa = (v_max - v_min) sin(2d) / V(target + d).
  const double kappa = (q.v_max() - q.v_min()) * std::sin(2.0 * d) / quad_variance(q, target + d);
  if (!(kappa > 0.0)) return 0.0;
  return 2.0 / kappa;
}

LockState run_lock(const QuadratureNoiseState& q, double noise_level, const LockConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (!(noise_level >= 0.0)) throw Error(ErrorCode::InvalidParameter, "measurement noise must be >= 0");
  if (!(q.v_max() - q.v_min() > 1e-12 * q.v_max())) {
    throw Error(ErrorCode::LockNotAcquired, "noise power does not depend on LO phase; no error signal");
  }

  Engine engine(derive_seed(seed, {stream::kLock}));
  StandardNormal normal;
  const NoiseMeasurement measure = [&](double phase) {
    const double v = quad_variance(q, phase);
    return noise_level > 0.0 ? std::max(0.0, v * (1.0 + noise_level * normal(engine))) : v;
  };

  LockState state;
  state.phase_estimate = wrap_angle(cfg.initial_phase_rad);
  std::size_t in_tolerance = 0;
  std::size_t after_lock = 0;
  for (std::size_t step = 0; step < cfg.max_steps; ++step) {
    state = lock_step(state, measure, cfg);
    if (state.locked) {
      if (++after_lock >= cfg.post_lock_steps) return state;
      continue;
    }
    if (std::abs(phase_error(q, cfg.target, state.phase_estimate)) < cfg.settle_tolerance_rad) {
      if (++in_tolerance >= cfg.consecutive_to_lock) {
        state.locked = true;
        state.lock_step = step + 1;
        if (cfg.post_lock_steps == 0) return state;
      }
    } else {
      in_tolerance = 0;
    }
  }
  if (state.locked) return state;
  std::ostringstream msg;
  msg << "no lock after " << cfg.max_steps << " steps; last phase error "
      << phase_error(q, cfg.target, state.phase_estimate) << " rad";
  throw Error(ErrorCode::LockNotAcquired, msg.str());
}

double residual_phase_rms(const LockState& state, const QuadratureNoiseState& q, LockTarget target,
                          std::size_t from_step) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& s : state.history) {
    if (s.step < from_step) continue;
    const double e = phase_error(q, target, s.phase_rad);
    acc += e * e;
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::InvalidParameter, "no history after the requested step");
  return std::sqrt(acc / static_cast<double>(n));
}

void write_history_csv(const LockState& state, std::ostream& out) {
  out.precision(12);
  out << "step,phase_rad,noise_power_linear\n";
  for (const auto& s : state.history) out << s.step << ',' << s.phase_rad << ',' << s.noise_power << '\n';
}

}  // namespace sqmag
