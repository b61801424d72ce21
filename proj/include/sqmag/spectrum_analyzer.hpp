#pragma once

// Swept and zero-span spectrum-analyzer emulation with a Gaussian RBW
// filter, a single-pole video filter and an RMS (power-averaging) detector.
//
// Power convention: a tone A cos(2 pi f t) at the filter centre reads A^2/2,
// and white noise of one-sided PSD S reads S * ENBW.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "sqmag/time_series.hpp"

namespace sqmag {

enum class SweepMode { ZeroSpan, Swept };

/// ENBW / RBW(-3 dB) of a Gaussian filter, sqrt(pi) / (2 sqrt(ln 2)).
inline constexpr double kGaussianEnbwRatio = 1.0644670194312262;

struct SAConfig {
  SweepMode mode = SweepMode::Swept;
  double center_hz = 1e6;
  double start_hz = 80e3;
  double stop_hz = 2e6;
  double rbw_hz = 3e3;
  double vbw_hz = 30.0;
  double sweep_time_s = 8.0;
  std::size_t n_averages = 1;
  /// Zero span: number of trace points (0 selects 1001).
  std::size_t n_points = 0;
  /// Swept: frequency step (0 selects rbw/2). Must not exceed rbw/2.
  double bin_spacing_hz = 0.0;
  /// Linear power floor reported in place of smaller readings.
  double power_floor = 1e-30;

  void validate() const;

  static SAConfig zero_span_at(double center_hz, double rbw_hz, double vbw_hz, double sweep_time_s);
  static SAConfig swept_over(double start_hz, double stop_hz, double rbw_hz, double vbw_hz, double sweep_time_s,
                             std::size_t n_averages);
};

struct PowerTrace {
  SweepMode mode = SweepMode::Swept;
  /// Frequency (Hz, swept) or time (s, zero span).
  std::vector<double> abscissa;
  std::vector<double> values;
  bool in_db = false;
  double enbw_hz = 0.0;

  std::size_t size() const noexcept { return values.size(); }
  double mean() const;
};

double enbw(double rbw_hz);

/// Swept-mode frequency grid: start, start + step, ..., covering stop.
std::vector<double> swept_grid(const SAConfig& cfg);

/// Record length per realization that swept() consumes at the given rate.
double swept_record_duration(const SAConfig& cfg, double sample_rate_hz);

/// Produces the input realization for a given average index.
using RealizationSource = std::function<TimeSeries(std::size_t average_index)>;

/// Throws ConfigModeMismatch, NyquistViolation or InsufficientRecord.
PowerTrace zero_span(const TimeSeries& ts, const SAConfig& cfg);
/// Power-averages cfg.n_averages realizations point by point.
PowerTrace zero_span(const RealizationSource& source, const SAConfig& cfg);

/// Stepped-frequency sweep: every grid point is a zero-span measurement whose
/// RMS detector integrates the dwell time sweep_time / n_bins after the video
/// filter has settled. All bins read the same realization.
PowerTrace swept(const TimeSeries& ts, const SAConfig& cfg);
PowerTrace swept(const RealizationSource& source, const SAConfig& cfg);

/// Converts linear power to dB relative to reference_power.
PowerTrace to_db(const PowerTrace& linear, double reference_power);

/// CSV with a "# enbw_hz=..." header and columns
/// frequency_hz|time_s,<value_label>.
void write_csv(const PowerTrace& trace, std::ostream& out, std::string_view value_label = "power_db_rel_shot");

}  // namespace sqmag
