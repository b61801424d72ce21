#include "sqmag/light_source.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sqmag/errors.hpp"

namespace sqmag {

namespace {

void check_efficiency(double eta, const char* name, bool allow_zero) {
  const bool ok = allow_zero ? (eta >= 0.0 && eta <= 1.0) : (eta > 0.0 && eta <= 1.0);
  if (!ok) {
    std::ostringstream msg;
    msg << name << " must lie in " << (allow_zero ? "[0, 1]" : "(0, 1]") << ", got " << eta;
    throw Error(ErrorCode::EfficiencyOutOfRange, msg.str());
  }
}

// Relative slack when deciding whether a measured pair is reachable.
constexpr double kFitSlack = 1e-9;

}  // namespace

OpoParams::OpoParams(double parametric_gain) : gain_(parametric_gain), x_(0.0) {
  if (!(parametric_gain >= 1.0) || !std::isfinite(parametric_gain)) {
    std::ostringstream msg;
    msg << "parametric gain must be >= 1, got " << parametric_gain;
    throw Error(ErrorCode::GainBelowUnity, msg.str());
  }
  x_ = 1.0 - 1.0 / std::sqrt(parametric_gain);
}

OpoParams OpoParams::from_pump_amplitude(double x) {
  if (!(x >= 0.0 && x < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "pump relative amplitude must lie in [0, 1)");
  }
  return {1.0 / ((1.0 - x) * (1.0 - x)), x};
}

void LossChain::validate() const {
  check_efficiency(escape, "escape efficiency", false);
  check_efficiency(homodyne, "homodyne efficiency", false);
  check_efficiency(cell_transmission, "cell transmission", false);
  check_efficiency(optics, "optics transmission", false);
  check_efficiency(detector_qe, "detector quantum efficiency", false);
  if (mode_overlap) check_efficiency(*mode_overlap, "mode overlap", false);
}

void ProbeParams::validate() const {
  if (!(lo_power_w > 0.0 && waist_m > 0.0 && wavelength_m > 0.0 && detuning_hz > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "probe parameters must be positive");
  }
  if (!(overlap > 0.0 && overlap <= 1.0)) throw Error(ErrorCode::InvalidParameter, "overlap must lie in (0, 1]");
}

QuadratureNoiseState opo_variances(const OpoParams& p) {
  const double x = p.pump_relative_amplitude();
  // 1 - 4x/(1+x)^2 = ((1-x)/(1+x))^2 and 1 + 4x/(1-x)^2 = ((1+x)/(1-x))^2;
  // the factored forms keep v_min * v_max = 1 to rounding.
  const double ratio = (1.0 - x) / (1.0 + x);
  return {ratio * ratio, 1.0 / (ratio * ratio), 0.0};
}

double apply_loss(double variance, double eta) {
  check_efficiency(eta, "efficiency", true);
  if (!(variance > 0.0)) throw Error(ErrorCode::InvalidParameter, "variance must be positive");
  return eta * variance + (1.0 - eta);
}

QuadratureNoiseState apply_loss(const QuadratureNoiseState& q, double eta) {
  return {apply_loss(q.v_min(), eta), apply_loss(q.v_max(), eta), q.theta_min()};
}

double chain_efficiency(const LossChain& chain) {
  chain.validate();
  double total = chain.escape * chain.homodyne * chain.cell_transmission * chain.optics * chain.detector_qe;
  if (chain.mode_overlap) total *= *chain.mode_overlap * *chain.mode_overlap;
  return total;
}

double jitter_weight(double sigma_rad) noexcept { return 0.5 * (1.0 + std::exp(-2.0 * sigma_rad * sigma_rad)); }

QuadratureNoiseState jitter_average(const QuadratureNoiseState& q, const PhaseJitter& jitter) {
  if (!(jitter.sigma_rad >= 0.0)) throw Error(ErrorCode::InvalidParameter, "phase jitter sigma must be >= 0");
  const double c = jitter_weight(jitter.sigma_rad);
  const double lo = c * q.v_min() + (1.0 - c) * q.v_max();
  const double hi = c * q.v_max() + (1.0 - c) * q.v_min();
  return {lo, std::max(lo, hi), q.theta_min()};
}

QuadratureNoiseState detected_noise(const OpoParams& p, double eta, const PhaseJitter& jitter) {
  return jitter_average(apply_loss(opo_variances(p), eta), jitter);
}

SourceFit fit_source_model(double measured_vmin_db, double measured_vmax_db, double eta) {
  check_efficiency(eta, "efficiency", false);
  if (measured_vmin_db == 0.0 && measured_vmax_db == 0.0) {
    return SourceFit{};
  }
  if (!(measured_vmin_db <= measured_vmax_db)) {
    throw Error(ErrorCode::InvalidParameter, "measured v_min exceeds measured v_max");
  }
  if (measured_vmin_db == measured_vmax_db) {
    throw Error(ErrorCode::NoPhysicalSolution, "an isotropic non-vacuum state needs unbounded phase jitter");
  }
  const double m_lo = from_db(measured_vmin_db);
  const double m_hi = from_db(measured_vmax_db);
  if (m_lo * m_hi < 1.0 - kFitSlack) {
    std::ostringstream msg;
    msg << "measured pair violates the uncertainty bound: product=" << m_lo * m_hi;
    throw Error(ErrorCode::NoPhysicalSolution, msg.str());
  }

  // Jitter preserves v_min + v_max, so the sum fixes x alone:
  // pure sum = 2 + 16x^2/(1-x^2)^2  =>  k = 4x/(1-x^2) = sqrt(sum - 2).
  const double lossy_sum = m_lo + m_hi;
  const double pure_sum = (lossy_sum - 2.0 * (1.0 - eta)) / eta;
  if (!(pure_sum >= 2.0)) throw Error(ErrorCode::NoPhysicalSolution, "sum identity has no root in [0, 1)");
  const double k = std::sqrt(pure_sum - 2.0);
  // k x^2 + 4x - k = 0, positive root written to avoid cancellation.
  const double x = k > 0.0 ? k / (2.0 + std::sqrt(4.0 + k * k)) : 0.0;
  if (!(x >= 0.0 && x < 1.0)) throw Error(ErrorCode::NoPhysicalSolution, "pump amplitude outside [0, 1)");

  const auto lossy = apply_loss(opo_variances(OpoParams::from_pump_amplitude(x)), eta);
  const double a = lossy.v_min();
  const double b = lossy.v_max();
  double sigma = 0.0;
  if (b - a > 0.0) {
    double c = (b - m_lo) / (b - a);
    if (c > 1.0 + kFitSlack) {
      std::ostringstream msg;
      msg << "measured squeezing " << measured_vmin_db << " dB exceeds what efficiency " << eta << " allows";
      throw Error(ErrorCode::NoPhysicalSolution, msg.str());
    }
    c = std::min(c, 1.0);
    // c > 1/2 because m_lo < m_hi.
    sigma = std::sqrt(std::max(0.0, -0.5 * std::log(2.0 * c - 1.0)));
  }

  SourceFit fit;
  fit.pump_relative_amplitude = x;
  fit.sigma_rad = sigma;
  fit.implied_gain = 1.0 / ((1.0 - x) * (1.0 - x));
  const auto forward = jitter_average(lossy, PhaseJitter{sigma});
  fit.forward_vmin_db = to_db(forward.v_min());
  fit.forward_vmax_db = to_db(forward.v_max());
  return fit;
}

}  // namespace sqmag
