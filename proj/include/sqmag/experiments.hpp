#pragma once

// End-to-end scenarios: the LO-phase squeezing scan, field calibration and
// the squeezed/coherent magnetometry comparison.

#include <cstdint>
#include <optional>
#include <string>

#include "sqmag/atomic_medium.hpp"
#include "sqmag/detection.hpp"
#include "sqmag/light_source.hpp"
#include "sqmag/noise_lock.hpp"
#include "sqmag/spectrum_analyzer.hpp"

namespace sqmag {

enum class SourceMode { Gain, Fit };
enum class ProbeKind { Coherent, Squeezed };

std::string_view to_string(ProbeKind p) noexcept;

struct SourceConfig {
  SourceMode mode = SourceMode::Fit;
  double parametric_gain = 4.8;
  /// Gain mode only; fit mode solves for the jitter.
  double phase_jitter_rad = 0.0;
  double measured_vmin_db = -3.6;
  double measured_vmax_db = 7.4;
};

struct FieldDrive {
  double freq_hz = 120e3;
  /// Applied amplitude; unset means the reference amplitude below.
  std::optional<double> amplitude_t;
  /// RMS of (I1 - I2)/(I1 + I2) produced by the reference amplitude.
  double reference_rotation_rad = 1.2e-6;
};

struct ExperimentConfig {
  SourceConfig source;
  LossChain loss_chain;
  ProbeParams probe;
  EnsembleParams ensemble;
  MediumCoupling coupling;
  /// When set, the Verdet constant is chosen so the coherent-probe floor
  /// (shot + atomic noise) equals this density.
  std::optional<double> target_coherent_floor_t_per_rthz = 4.6e-8;
  double spin_correlation_time_s = 10e-9;
  /// Atomic spin-noise PSD relative to coherent shot noise at the signal frequency.
  double atomic_fraction = 0.05;
  PolarimeterConfig polarimeter;

  SAConfig scan_sa;
  double scan_phase_start_rad = 0.0;
  double scan_phase_span_rad = 0.0;

  SAConfig magnetometry_sa;
  /// Floor estimator excludes +- guard_rbw * RBW around the signal.
  double guard_rbw = 3.0;
  FieldDrive field;

  LockConfig lock;
  double lock_measurement_noise = 0.0;
  bool ideal_lock = false;

  double sample_rate_hz = 10e6;
  std::uint64_t seed = 1;

  /// The published operating point: 620 uW LO, 82% detection chain,
  /// -3.6/+7.4 dB squeezing, zero-span scan at 1 MHz and an 80 kHz-2 MHz sweep.
  static ExperimentConfig published_defaults();
  void validate() const;
};

/// Quantities derived from a configuration before any stochastic run.
struct ModelPoint {
  double efficiency = 0.0;
  QuadratureNoiseState detected = QuadratureNoiseState::coherent();
  std::optional<SourceFit> fit;
  DetectorOperatingPoint detector;
  double verdet_rad_per_t_m = 0.0;
  double effective_verdet_rad_per_t_m = 0.0;
  double gz_v_per_t = 0.0;
  double reference_amplitude_t = 0.0;
  double applied_amplitude_t = 0.0;
  SpinNoiseModel spin;
  double spin_psd_reference = 0.0;
  double alpha_rad_per_spin_m = 0.0;
  double electronic_psd_v2_per_hz = 0.0;
};

ModelPoint resolve(const ExperimentConfig& cfg);

struct ScanResult {
  PowerTrace squeezed_db;
  PowerTrace coherent_db;
  double min_db = 0.0;
  double max_db = 0.0;
  double coherent_min_db = 0.0;
  double coherent_max_db = 0.0;
  double reference_power_v2 = 0.0;
  QuadratureNoiseState model = QuadratureNoiseState::coherent();
};

ScanResult run_squeezing_scan(const ExperimentConfig& cfg);

struct CalibrationConstant {
  double volts_per_tesla = 0.0;
};

/// Noise-free tone measurement: volts_per_tesla = V_rms / B_rms read through
/// a zero-span measurement at the tone frequency. Throws ToneNotFound.
CalibrationConstant measure_tone_calibration(double gz_v_per_t, double freq_hz, double reference_b_amplitude_t,
                                             double sample_rate_hz, const SAConfig& sa);

CalibrationConstant calibrate_field(const ExperimentConfig& cfg, double reference_b_amplitude_t);

struct SensitivityReport {
  double noise_floor_t_per_rthz = 0.0;
  double signal_freq_hz = 0.0;
  /// Tone power above the floor at the signal bin, V^2.
  double signal_power_v2 = 0.0;
  double floor_power_v2 = 0.0;
  double improvement_db = 0.0;
  double squeezing_at_lock_db = 0.0;
  double volts_per_tesla = 0.0;
  double enbw_hz = 0.0;
  std::size_t n_floor_bins = 0;
  std::string probe;
  std::uint64_t seed = 0;
  std::size_t n_averages = 0;
};

/// Floor = median linear power outside +- guard_hz of signal_freq;
/// density = sqrt(floor / ENBW) / volts_per_tesla. Throws InsufficientBins.
SensitivityReport estimate_sensitivity(const PowerTrace& linear, const CalibrationConstant& cal, double signal_freq_hz,
                                       double guard_hz);

/// Median-floor density restricted to [f_lo, f_hi] (signal guard still applied).
double band_sensitivity(const PowerTrace& linear, const CalibrationConstant& cal, double signal_freq_hz,
                        double guard_hz, double f_lo, double f_hi);

struct MagnetometryResult {
  PowerTrace trace_db;      // relative to coherent shot noise
  PowerTrace trace_linear;  // V^2, electronic floor removed
  SensitivityReport report;
  CalibrationConstant calibration;
  double locked_variance = 1.0;
  std::optional<LockState> lock;
};

/// Swept measurement of the calibrated field noise. For a squeezed probe the
/// improvement is computed against `coherent_reference`, or against a
/// coherent run on the same seed stream when none is given.
MagnetometryResult run_magnetometry(const ExperimentConfig& cfg, ProbeKind probe,
                                    const MagnetometryResult* coherent_reference = nullptr);

}  // namespace sqmag
