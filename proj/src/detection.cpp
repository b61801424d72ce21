#include "sqmag/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "sqmag/errors.hpp"
#include "sqmag/random.hpp"

namespace sqmag {

void PolarimeterConfig::validate() const {
  if (!(detector_qe > 0.0 && detector_qe <= 1.0)) {
    throw Error(ErrorCode::EfficiencyOutOfRange, "detector quantum efficiency must lie in (0, 1]");
  }
  if (!(electronic_noise_db < 0.0)) throw Error(ErrorCode::InvalidParameter, "electronic noise must be below shot noise");
  if (!(transimpedance_v_per_a > 0.0)) throw Error(ErrorCode::InvalidParameter, "transimpedance must be positive");
}

DetectorOperatingPoint operating_point(const PolarimeterConfig& cfg, double power_at_detector_w, double wavelength_m) {
  cfg.validate();
  if (!(power_at_detector_w > 0.0)) throw Error(ErrorCode::ZeroPower, "no optical power at the detector");
  if (!(wavelength_m > 0.0)) throw Error(ErrorCode::InvalidParameter, "wavelength must be positive");
  using namespace constants;
  DetectorOperatingPoint op;
  op.detected_power_w = power_at_detector_w;
  op.responsivity_a_per_w = cfg.detector_qe * kElementaryCharge * wavelength_m / (kPlanck * kSpeedOfLight);
  const double photocurrent = op.responsivity_a_per_w * power_at_detector_w;
  op.signal_scale_v = cfg.transimpedance_v_per_a * photocurrent;
  op.shot_psd_v2_per_hz = cfg.transimpedance_v_per_a * cfg.transimpedance_v_per_a * 2.0 * kElementaryCharge * photocurrent;
  op.shot_psd_rad2_per_hz = op.shot_psd_v2_per_hz / (op.signal_scale_v * op.signal_scale_v);
  return op;
}

double polarimeter_signal(const StokesVector& s, const PolarimeterConfig& cfg) {
  if (!(s.s0 > 0.0)) throw Error(ErrorCode::ZeroPower, "polarimeter needs s0 > 0");
  // Wave plate at angle h rotates the linear Stokes components by 4h; the
  // deviation from the nominal 22.5 deg mixes sx into the reading.
  const double mixing = 4.0 * cfg.hwp_angle_rad - std::numbers::pi / 2.0;
  if (mixing == 0.0) return s.sy / s.s0;
  return (s.sy * std::cos(mixing) - s.sx * std::sin(mixing)) / s.s0;
}

namespace {

void check_companion(const TimeSeries& ts, double fs, std::size_t n, const char* name) {
  if (std::abs(ts.sample_rate_hz - fs) > 1e-9 * fs) {
    std::ostringstream msg;
    msg << name << " sample rate " << ts.sample_rate_hz << " differs from synthesis rate " << fs;
    throw Error(ErrorCode::InvalidParameter, msg.str());
  }
  if (ts.size() < n) {
    std::ostringstream msg;
    msg << name << " has " << ts.size() << " samples, need " << n;
    throw Error(ErrorCode::InvalidParameter, msg.str());
  }
}

}  // namespace

TimeSeries synthesize_photocurrent(const PhotocurrentScenario& sc, double duration_s, double sample_rate_hz,
                                   std::uint64_t seed) {
  if (!(sample_rate_hz > 2.0 * sc.analysis_bandwidth_hz)) {
    std::ostringstream msg;
    msg << "sample rate " << sample_rate_hz << " Hz does not cover " << sc.analysis_bandwidth_hz << " Hz";
    throw Error(ErrorCode::NyquistViolation, msg.str());
  }
  const double n_real = std::floor(duration_s * sample_rate_hz + 0.5);
  if (!(n_real >= 2.0)) throw Error(ErrorCode::EmptyDuration, "synthesis needs at least two samples");
  if (!(sc.shot_psd_v2_per_hz > 0.0)) throw Error(ErrorCode::InvalidParameter, "shot-noise PSD must be positive");
  if (!(sc.locked_variance >= 0.0)) throw Error(ErrorCode::InvalidParameter, "locked variance must be >= 0");
  if (!(sc.atomic_fraction >= 0.0)) throw Error(ErrorCode::InvalidParameter, "atomic fraction must be >= 0");
  if (sc.chunk_samples == 0) throw Error(ErrorCode::InvalidParameter, "chunk size must be positive");
  const auto n = static_cast<std::size_t>(n_real);

  if (sc.b_series) check_companion(*sc.b_series, sample_rate_hz, n, "field series");
  const bool atomic_on = sc.atomic_fraction > 0.0 && sc.spin_series.has_value();
  double atomic_scale = 0.0;
  if (atomic_on) {
    check_companion(*sc.spin_series, sample_rate_hz, n, "spin series");
    if (!(sc.spin_psd_reference > 0.0)) {
      throw Error(ErrorCode::InvalidParameter, "atomic channel needs a positive spin PSD reference");
    }
    atomic_scale = std::sqrt(sc.atomic_fraction * sc.shot_psd_v2_per_hz / sc.spin_psd_reference);
  }

  // White noise of one-sided PSD S sampled at fs has variance S fs / 2.
  const double shot_sigma_unit = std::sqrt(sc.shot_psd_v2_per_hz * sample_rate_hz / 2.0);
  const bool shot_on = sc.variance_profile || sc.locked_variance > 0.0;
  const double shot_sigma_locked = shot_sigma_unit * std::sqrt(sc.locked_variance);
  const double elec_sigma = sc.electronic_db ? shot_sigma_unit * std::sqrt(from_db(*sc.electronic_db)) : 0.0;

  TimeSeries out;
  out.sample_rate_hz = sample_rate_hz;
  out.units = Units::Volts;
  out.seed_provenance = {seed};
  out.samples.assign(n, 0.0);

  StandardNormal normal;
  const std::size_t n_chunks = (n + sc.chunk_samples - 1) / sc.chunk_samples;
  for (std::size_t chunk = 0; chunk < n_chunks; ++chunk) {
    const std::size_t begin = chunk * sc.chunk_samples;
    const std::size_t end = std::min(n, begin + sc.chunk_samples);
    if (shot_on) {
      Engine engine(derive_seed(seed, {stream::kShot, chunk}));
      normal.reset();
      if (sc.variance_profile) {
        for (std::size_t i = begin; i < end; ++i) {
          const double v = sc.variance_profile(static_cast<double>(i) / sample_rate_hz);
          out.samples[i] += shot_sigma_unit * std::sqrt(std::max(v, 0.0)) * normal(engine);
        }
      } else {
        for (std::size_t i = begin; i < end; ++i) out.samples[i] += shot_sigma_locked * normal(engine);
      }
    }
    if (elec_sigma > 0.0) {
      Engine engine(derive_seed(seed, {stream::kElectronic, chunk}));
      normal.reset();
      for (std::size_t i = begin; i < end; ++i) out.samples[i] += elec_sigma * normal(engine);
    }
  }
  if (sc.b_series && sc.gz_v_per_t != 0.0) {
    const auto& b = sc.b_series->samples;
    for (std::size_t i = 0; i < n; ++i) out.samples[i] += sc.gz_v_per_t * b[i];
  }
  if (atomic_on) {
    const auto& f = sc.spin_series->samples;
    for (std::size_t i = 0; i < n; ++i) out.samples[i] += atomic_scale * f[i];
  }
  return out;
}

SubtractionResult subtract_electronic(std::span<const double> power_trace, double electronic_floor, double epsilon) {
  if (!(electronic_floor >= 0.0)) throw Error(ErrorCode::InvalidParameter, "electronic floor must be >= 0");
  if (!(epsilon > 0.0)) {
    double full_scale = 0.0;
    for (double v : power_trace) full_scale = std::max(full_scale, v);
    epsilon = full_scale > 0.0 ? 1e-12 * full_scale : std::numeric_limits<double>::min();
  }
  SubtractionResult result;
  result.values.resize(power_trace.size());
  result.clamped.assign(power_trace.size(), false);
  for (std::size_t i = 0; i < power_trace.size(); ++i) {
    const double v = power_trace[i] - electronic_floor;
    if (v < epsilon) {
      result.values[i] = epsilon;
      result.clamped[i] = true;
      ++result.n_clamped;
    } else {
      result.values[i] = v;
    }
  }
  return result;
}

}  // namespace sqmag
