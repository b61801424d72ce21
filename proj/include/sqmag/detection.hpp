#pragma once

// Balanced polarimeter: half-wave plate at 22.5 deg, PBS and a differential
// photodetector. Synthesizes the differential photocurrent (in volts) as the
// sum of independent shot, signal, atomic and electronic channels.

#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "sqmag/polarization.hpp"
#include "sqmag/time_series.hpp"

namespace sqmag {

namespace constants {
inline constexpr double kPlanck = 6.62607015e-34;
inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kElementaryCharge = 1.602176634e-19;
}  // namespace constants

struct PolarimeterConfig {
  /// pi/8 maps Sy onto the PBS intensity difference.
  double hwp_angle_rad = std::numbers::pi / 8.0;
  double detector_qe = 0.95;
  /// Electronic noise relative to coherent shot noise (upper bound in practice).
  double electronic_noise_db = -13.0;
  double transimpedance_v_per_a = 1e4;

  void validate() const;
};

/// Absolute scales of the detector at a given optical power.
struct DetectorOperatingPoint {
  double detected_power_w = 0.0;
  double responsivity_a_per_w = 0.0;
  /// Volts per unit of the normalized difference (I1 - I2)/(I1 + I2).
  double signal_scale_v = 0.0;
  /// One-sided PSD of coherent-state shot noise, V^2/Hz.
  double shot_psd_v2_per_hz = 0.0;
  /// Shot noise expressed as rotation-angle PSD, rad^2/Hz.
  double shot_psd_rad2_per_hz = 0.0;
};

DetectorOperatingPoint operating_point(const PolarimeterConfig& cfg, double power_at_detector_w, double wavelength_m);

/// (I1 - I2)/(I1 + I2) after the wave plate. With the plate at 22.5 deg this
/// is sy/s0; other angles mix in sx. Throws ZeroPower for s0 <= 0.
double polarimeter_signal(const StokesVector& s, const PolarimeterConfig& cfg = {});

struct PhotocurrentScenario {
  /// Coherent shot-noise PSD (the 0 dB reference), V^2/Hz one-sided.
  double shot_psd_v2_per_hz = 1.0;
  /// Shot-channel variance in shot-noise units; 0 disables the channel.
  double locked_variance = 1.0;
  /// Time-dependent variance (e.g. a scanned LO phase); overrides locked_variance.
  std::function<double(double time_s)> variance_profile;
  /// Volts per tesla applied to b_series.
  double gz_v_per_t = 0.0;
  std::optional<TimeSeries> b_series;
  /// Spin-noise realization and its in-band one-sided PSD (spin^2/Hz); the
  /// channel is scaled to atomic_fraction of the coherent shot PSD.
  std::optional<TimeSeries> spin_series;
  double spin_psd_reference = 0.0;
  double atomic_fraction = 0.0;
  /// Electronic noise relative to coherent shot noise; nullopt disables it.
  std::optional<double> electronic_db;
  /// Highest frequency the output will be analysed at.
  double analysis_bandwidth_hz = 2e6;
  /// Noise is drawn in chunks of this many samples, each from its own derived
  /// seed. Part of the reproducibility contract.
  std::size_t chunk_samples = std::size_t{1} << 20;
};

/// Throws NyquistViolation (fs <= 2 x analysis bandwidth), EmptyDuration
/// (fewer than 2 samples) or InvalidParameter.
TimeSeries synthesize_photocurrent(const PhotocurrentScenario& scenario, double duration_s, double sample_rate_hz,
                                   std::uint64_t seed);

struct SubtractionResult {
  std::vector<double> values;
  std::vector<bool> clamped;
  std::size_t n_clamped = 0;
};

/// Linear-power subtraction of the electronic floor. Results below epsilon
/// are clamped to epsilon and flagged. A non-positive epsilon selects
/// 1e-12 of the trace's full scale.
SubtractionResult subtract_electronic(std::span<const double> power_trace, double electronic_floor,
                                      double epsilon = 0.0);

}  // namespace sqmag
