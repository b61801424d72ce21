#include "sqmag/polarization.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sqmag/errors.hpp"

namespace sqmag {

namespace {

constexpr double kBasisTolerance = 1e-9;

bool close_relative(double a, double b, double tol) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) <= tol * scale;
}

}  // namespace

double StokesVector::polarized_norm() const noexcept { return std::sqrt(sx * sx + sy * sy + sz * sz); }

bool StokesVector::is_physical(double rel_tol) const noexcept {
  if (!(s0 >= 0.0)) return false;
  return polarized_norm() <= s0 * (1.0 + rel_tol) + 1e-300;
}

StokesVector make_stokes(const PolarizationIntensities& in) {
  for (double value : {in.h, in.v, in.d, in.dbar, in.r, in.l}) {
    if (!(value >= 0.0)) throw Error(ErrorCode::NegativeIntensity, "polarization intensities must be >= 0");
  }
  const double total_hv = in.h + in.v;
  const double total_d = in.d + in.dbar;
  const double total_rl = in.r + in.l;
  if (!close_relative(total_hv, total_d, kBasisTolerance) || !close_relative(total_hv, total_rl, kBasisTolerance)) {
    std::ostringstream msg;
    msg << "basis totals disagree: H+V=" << total_hv << " D+Dbar=" << total_d << " R+L=" << total_rl;
    throw Error(ErrorCode::InconsistentBases, msg.str());
  }
  return {total_hv, in.h - in.v, in.d - in.dbar, in.r - in.l};
}

StokesVector faraday_rotate(const StokesVector& s, double theta) noexcept {
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  return {s.s0, s.sx * c - s.sy * sn, s.sx * sn + s.sy * c, s.sz};
}

QuadratureNoiseState::QuadratureNoiseState(double v_min, double v_max, double theta_min)
    : v_min_(v_min), v_max_(v_max), theta_min_(wrap_angle(theta_min, std::numbers::pi)) {
  if (!(v_min > 0.0) || !(v_max >= v_min) || !std::isfinite(v_max)) {
    std::ostringstream msg;
    msg << "require 0 < v_min <= v_max, got v_min=" << v_min << " v_max=" << v_max;
    throw Error(ErrorCode::InvalidParameter, msg.str());
  }
  if (v_min * v_max < 1.0 - 1e-9) {
    std::ostringstream msg;
    msg << "uncertainty bound violated: v_min*v_max=" << v_min * v_max;
    throw Error(ErrorCode::InvalidParameter, msg.str());
  }
}

double quad_variance(const QuadratureNoiseState& q, double theta) noexcept {
  const double mean = 0.5 * (q.v_min() + q.v_max());
  const double half_span = 0.5 * (q.v_max() - q.v_min());
  return mean - half_span * std::cos(2.0 * (theta - q.theta_min()));
}

double to_db(double ratio) {
  if (!(ratio > 0.0)) throw Error(ErrorCode::NonPositiveRatio, "dB conversion needs a positive ratio");
  return 10.0 * std::log10(ratio);
}

double from_db(double db) noexcept { return std::pow(10.0, db / 10.0); }

double wrap_angle(double theta, double period) noexcept {
  double r = std::fmod(theta, period);
  if (r < 0.0) r += period;
  if (r >= period) r = 0.0;
  return r;
}

}  // namespace sqmag
