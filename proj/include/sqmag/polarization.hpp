#pragma once

// Stokes-parameter algebra and the Gaussian quadrature-noise ellipse of the
// Sy-Sz fluctuations. All variances are in shot-noise units: a coherent
// probe at the configured LO power has variance 1 in every quadrature.

#include <numbers>

namespace sqmag {

/// Intensities of the six polarization components (H, V, D, anti-D, R, L).
struct PolarizationIntensities {
  double h = 0.0;
  double v = 0.0;
  double d = 0.0;
  double dbar = 0.0;
  double r = 0.0;
  double l = 0.0;
};

/// Classical polarization state of the probe.
struct StokesVector {
  double s0 = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  double sz = 0.0;

  double polarized_norm() const noexcept;
  /// s0 >= 0 and |(sx, sy, sz)| <= s0 up to a relative tolerance.
  bool is_physical(double rel_tol = 1e-12) const noexcept;
  StokesVector scaled(double factor) const noexcept { return {s0 * factor, sx * factor, sy * factor, sz * factor}; }
};

/// Throws NegativeIntensity or InconsistentBases (the three basis pairs
/// must carry the same total power to 1e-9 relative).
StokesVector make_stokes(const PolarizationIntensities& in);

/// Exact rotation about the Sz axis of the Poincare sphere. For a horizontal
/// probe and |theta| << 1 this reduces to sy' = sx * theta.
StokesVector faraday_rotate(const StokesVector& s, double theta) noexcept;

/// Gaussian noise ellipse of the Sy-Sz fluctuations.
class QuadratureNoiseState {
 public:
  /// Validates 0 < v_min <= v_max and v_min * v_max >= 1 - 1e-9;
  /// theta_min is folded into [0, pi).
  QuadratureNoiseState(double v_min, double v_max, double theta_min = 0.0);

  static QuadratureNoiseState coherent() { return {1.0, 1.0, 0.0}; }

  double v_min() const noexcept { return v_min_; }
  double v_max() const noexcept { return v_max_; }
  double theta_min() const noexcept { return theta_min_; }

 private:
  double v_min_;
  double v_max_;
  double theta_min_;
};

/// V(theta) = v_min cos^2(theta - theta_min) + v_max sin^2(theta - theta_min).
double quad_variance(const QuadratureNoiseState& q, double theta) noexcept;

/// 10 log10(ratio); throws NonPositiveRatio for ratio <= 0.
double to_db(double ratio);
double from_db(double db) noexcept;

/// Folds an angle into [0, period).
double wrap_angle(double theta, double period = 2.0 * std::numbers::pi) noexcept;

}  // namespace sqmag
