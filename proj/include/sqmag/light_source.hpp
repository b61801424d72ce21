#pragma once

// Squeezed-light source: a below-threshold OPO, the loss chain between the
// crystal and the photodiodes, and LO phase jitter.

#include <optional>

#include "sqmag/polarization.hpp"

namespace sqmag {

/// Classical parametric gain G (pump-on over pump-off cavity transmission).
/// The normalized pump amplitude is x = 1 - 1/sqrt(G), so G = 1/(1-x)^2.
class OpoParams {
 public:
  explicit OpoParams(double parametric_gain);
  static OpoParams from_pump_amplitude(double x);

  double parametric_gain() const noexcept { return gain_; }
  double pump_relative_amplitude() const noexcept { return x_; }

 private:
  OpoParams(double gain, double x) : gain_(gain), x_(x) {}
  double gain_;
  double x_;
};

/// Efficiencies between squeezed-vacuum creation and photodetection.
struct LossChain {
  double escape = 0.96;
  double homodyne = 0.98;
  double cell_transmission = 0.97;
  double optics = 0.95;
  double detector_qe = 0.95;
  /// Spatial LO/squeezed-mode overlap, when supplied separately from the
  /// homodyne efficiency. Enters the chain as overlap^2.
  std::optional<double> mode_overlap;

  void validate() const;
};

struct PhaseJitter {
  double sigma_rad = 0.0;
};

struct ProbeParams {
  double lo_power_w = 620e-6;
  double waist_m = 950e-6;
  double wavelength_m = 794.7e-9;
  double detuning_hz = 700e6;
  double overlap = 0.99;

  void validate() const;
};

/// Lossless below-threshold OPO output:
/// v_min = 1 - 4x/(1+x)^2, v_max = 1 + 4x/(1-x)^2, v_min * v_max = 1.
QuadratureNoiseState opo_variances(const OpoParams& p);

/// Beam-splitter loss: v' = eta v + (1 - eta). Throws EfficiencyOutOfRange.
double apply_loss(double variance, double eta);
QuadratureNoiseState apply_loss(const QuadratureNoiseState& q, double eta);

double chain_efficiency(const LossChain& chain);

/// Gaussian average of V(theta + delta) over delta ~ N(0, sigma^2).
QuadratureNoiseState jitter_average(const QuadratureNoiseState& q, const PhaseJitter& jitter);

/// Mixing weight c = (1 + exp(-2 sigma^2)) / 2 used by jitter_average.
double jitter_weight(double sigma_rad) noexcept;

/// opo_variances -> apply_loss -> jitter_average.
QuadratureNoiseState detected_noise(const OpoParams& p, double eta, const PhaseJitter& jitter);

struct SourceFit {
  double pump_relative_amplitude = 0.0;
  double sigma_rad = 0.0;
  double implied_gain = 1.0;
  /// Forward-model values of the fitted parameters, in dB.
  double forward_vmin_db = 0.0;
  double forward_vmax_db = 0.0;
};

/// Inverts the forward model for (x, sigma) given a measured squeezing /
/// anti-squeezing pair. Throws NoPhysicalSolution when no (x, sigma) with
/// x in [0,1) and sigma >= 0 reproduces the pair.
SourceFit fit_source_model(double measured_vmin_db, double measured_vmax_db, double eta);

}  // namespace sqmag
