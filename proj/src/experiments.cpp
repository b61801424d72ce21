#include "sqmag/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sqmag/errors.hpp"
#include "sqmag/random.hpp"

namespace sqmag {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> sine_samples(double amplitude, double freq_hz, double fs, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = amplitude * std::sin(kTwoPi * freq_hz * static_cast<double>(i) / fs);
  return out;
}

std::size_t sample_count(double duration_s, double fs) {
  return static_cast<std::size_t>(std::floor(duration_s * fs + 0.5));
}

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

std::string_view to_string(ProbeKind p) noexcept { return p == ProbeKind::Coherent ? "coherent" : "squeezed"; }

ExperimentConfig ExperimentConfig::published_defaults() {
  ExperimentConfig cfg;
  // Atom number of the F=2 probe volume is not published; it only sets the
  // spin-noise variance, which atomic_fraction normalizes.
  cfg.ensemble.n_atoms = 4e9;

  cfg.scan_sa = SAConfig::zero_span_at(1e6, 30e3, 30.0, 2.0);
  cfg.scan_sa.n_points = 1001;
  cfg.scan_sa.n_averages = 24;
  cfg.scan_phase_start_rad = 0.0;
  cfg.scan_phase_span_rad = 2.0 * std::numbers::pi;

  cfg.magnetometry_sa = SAConfig::swept_over(80e3, 2e6, 3e3, 30.0, 8.0, 130);
  // 1 kHz steps (<= RBW/2) put the 120 kHz tone on a grid point.
  cfg.magnetometry_sa.bin_spacing_hz = 1e3;
  return cfg;
}

void ExperimentConfig::validate() const {
  loss_chain.validate();
  probe.validate();
  ensemble.validate();
  coupling.validate();
  polarimeter.validate();
  lock.validate();
  if (scan_sa.mode != SweepMode::ZeroSpan) throw Error(ErrorCode::ConfigModeMismatch, "scan needs a zero-span analyzer");
  if (magnetometry_sa.mode != SweepMode::Swept) {
    throw Error(ErrorCode::ConfigModeMismatch, "magnetometry needs a swept analyzer");
  }
  scan_sa.validate();
  magnetometry_sa.validate();
  if (!(sample_rate_hz > 0.0)) throw Error(ErrorCode::InvalidParameter, "sample rate must be positive");
  if (!(atomic_fraction >= 0.0)) throw Error(ErrorCode::InvalidParameter, "atomic fraction must be >= 0");
  if (!(spin_correlation_time_s > 0.0)) throw Error(ErrorCode::InvalidParameter, "spin correlation time must be positive");
  if (!(field.freq_hz >= magnetometry_sa.start_hz && field.freq_hz <= magnetometry_sa.stop_hz)) {
    throw Error(ErrorCode::InvalidParameter, "field frequency lies outside the analyzer span");
  }
  if (field.amplitude_t && !(*field.amplitude_t >= 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "field amplitude must be >= 0");
  }
  if (!(field.reference_rotation_rad > 0.0)) throw Error(ErrorCode::InvalidParameter, "reference rotation must be positive");
  if (target_coherent_floor_t_per_rthz && !(*target_coherent_floor_t_per_rthz > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "target floor must be positive");
  }
  if (!(guard_rbw > 0.0)) throw Error(ErrorCode::InvalidParameter, "guard band must be positive");
  if (source.mode == SourceMode::Gain && !(source.phase_jitter_rad >= 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "phase jitter must be >= 0");
  }
}

ModelPoint resolve(const ExperimentConfig& cfg) {
  cfg.validate();
  ModelPoint m;
  m.efficiency = chain_efficiency(cfg.loss_chain);
  if (cfg.source.mode == SourceMode::Gain) {
    m.detected = detected_noise(OpoParams(cfg.source.parametric_gain), m.efficiency, {cfg.source.phase_jitter_rad});
  } else {
    m.fit = fit_source_model(cfg.source.measured_vmin_db, cfg.source.measured_vmax_db, m.efficiency);
    m.detected = detected_noise(OpoParams::from_pump_amplitude(m.fit->pump_relative_amplitude), m.efficiency,
                                {m.fit->sigma_rad});
  }

  const double power_at_detector = cfg.probe.lo_power_w * cfg.coupling.transmission * cfg.loss_chain.optics;
  m.detector = operating_point(cfg.polarimeter, power_at_detector, cfg.probe.wavelength_m);
  const double length = cfg.ensemble.length_m;
  const double nmor = nmor_rotation_gain(cfg.probe.lo_power_w, cfg.coupling.nmor_coefficient_per_w2);

  if (cfg.target_coherent_floor_t_per_rthz) {
    // Coherent floor after electronic subtraction: shot * (1 + atomic fraction).
    const double floor_rad = std::sqrt(m.detector.shot_psd_rad2_per_hz * (1.0 + cfg.atomic_fraction));
    if (!(nmor > 0.0)) throw Error(ErrorCode::InvalidParameter, "NMOR gain vanishes; cannot pin the Verdet constant");
    m.verdet_rad_per_t_m = floor_rad / (*cfg.target_coherent_floor_t_per_rthz * length * nmor);
  } else {
    m.verdet_rad_per_t_m = cfg.coupling.verdet_rad_per_t_m;
  }
  m.effective_verdet_rad_per_t_m = m.verdet_rad_per_t_m * nmor;
  MediumCoupling pinned = cfg.coupling;
  pinned.verdet_rad_per_t_m = m.verdet_rad_per_t_m;
  // S_x = 1 in normalized units; the detector scale converts to volts.
  m.gz_v_per_t = m.detector.signal_scale_v * field_gain(pinned, 1.0, length) * nmor;

  const double rotation_per_tesla = m.effective_verdet_rad_per_t_m * length;
  m.reference_amplitude_t =
      rotation_per_tesla > 0.0 ? std::sqrt(2.0) * cfg.field.reference_rotation_rad / rotation_per_tesla : 0.0;
  m.applied_amplitude_t = cfg.field.amplitude_t.value_or(m.reference_amplitude_t);

  m.spin = SpinNoiseModel{spin_variance(cfg.ensemble), cfg.spin_correlation_time_s};
  if (m.spin.variance > 0.0) {
    m.spin_psd_reference = sampled_spin_psd(m.spin, cfg.sample_rate_hz, cfg.field.freq_hz);
    m.alpha_rad_per_spin_m =
        std::sqrt(cfg.atomic_fraction * m.detector.shot_psd_rad2_per_hz / m.spin_psd_reference) / length;
  }
  m.electronic_psd_v2_per_hz = m.detector.shot_psd_v2_per_hz * from_db(cfg.polarimeter.electronic_noise_db);
  return m;
}

ScanResult run_squeezing_scan(const ExperimentConfig& cfg) {
  const ModelPoint m = resolve(cfg);
  const SAConfig& sa = cfg.scan_sa;
  const double duration = sa.sweep_time_s;
  const double start = cfg.scan_phase_start_rad;
  const double rate = cfg.scan_phase_span_rad / duration;
  const QuadratureNoiseState q = m.detected;

  auto make_source = [&](bool squeezed) -> RealizationSource {
    return [&, squeezed](std::size_t i) {
      PhotocurrentScenario sc;
      sc.shot_psd_v2_per_hz = m.detector.shot_psd_v2_per_hz;
      if (squeezed) {
        sc.variance_profile = [q, start, rate](double t) { return quad_variance(q, start + rate * t); };
      }
      sc.electronic_db = cfg.polarimeter.electronic_noise_db;
      sc.analysis_bandwidth_hz = sa.center_hz + sa.rbw_hz;
      // Coherent and squeezed runs share the seed stream.
      return synthesize_photocurrent(sc, duration, cfg.sample_rate_hz, derive_seed(cfg.seed, {stream::kScan, i}));
    };
  };

  const double elec_floor = m.electronic_psd_v2_per_hz * enbw(sa.rbw_hz);
  auto measure = [&](bool squeezed) {
    PowerTrace t = zero_span(make_source(squeezed), sa);
    t.values = subtract_electronic(t.values, elec_floor).values;
    return t;
  };
  const PowerTrace coherent = measure(false);
  const PowerTrace squeezed = measure(true);

  ScanResult r;
  r.model = q;
  r.reference_power_v2 = coherent.mean();
  r.coherent_db = to_db(coherent, r.reference_power_v2);
  r.squeezed_db = to_db(squeezed, r.reference_power_v2);
  const auto [smin, smax] = std::minmax_element(r.squeezed_db.values.begin(), r.squeezed_db.values.end());
  const auto [cmin, cmax] = std::minmax_element(r.coherent_db.values.begin(), r.coherent_db.values.end());
  r.min_db = *smin;
  r.max_db = *smax;
  r.coherent_min_db = *cmin;
  r.coherent_max_db = *cmax;
  return r;
}

CalibrationConstant measure_tone_calibration(double gz_v_per_t, double freq_hz, double reference_b_amplitude_t,
                                             double sample_rate_hz, const SAConfig& sa) {
  if (!(reference_b_amplitude_t > 0.0)) throw Error(ErrorCode::InvalidParameter, "reference amplitude must be positive");
  SAConfig zs = SAConfig::zero_span_at(freq_hz, sa.rbw_hz, sa.vbw_hz, 1.0);
  zs.n_points = 16;
  // Long enough for the RBW filter support plus a few video time constants.
  const double duration = 6.0 / sa.rbw_hz + 3.0 / (kTwoPi * sa.vbw_hz);
  zs.sweep_time_s = duration;
  const std::size_t n = sample_count(duration, sample_rate_hz);

  PhotocurrentScenario sc;
  sc.locked_variance = 0.0;
  sc.gz_v_per_t = gz_v_per_t;
  sc.analysis_bandwidth_hz = freq_hz + sa.rbw_hz;
  sc.b_series = TimeSeries{sample_rate_hz, sine_samples(reference_b_amplitude_t, freq_hz, sample_rate_hz, n), {}, Units::Tesla};
  const TimeSeries ts = synthesize_photocurrent(sc, duration, sample_rate_hz, 0);
  const double power = zero_span(ts, zs).mean();
  if (!std::isfinite(power) || power <= 10.0 * zs.power_floor) {
    std::ostringstream msg;
    msg << "no tone at " << freq_hz << " Hz (power " << power << " V^2)";
    throw Error(ErrorCode::ToneNotFound, msg.str());
  }
  return {std::sqrt(power) / (reference_b_amplitude_t / std::sqrt(2.0))};
}

CalibrationConstant calibrate_field(const ExperimentConfig& cfg, double reference_b_amplitude_t) {
  const ModelPoint m = resolve(cfg);
  return measure_tone_calibration(m.gz_v_per_t, cfg.field.freq_hz, reference_b_amplitude_t, cfg.sample_rate_hz,
                                  cfg.magnetometry_sa);
}

SensitivityReport estimate_sensitivity(const PowerTrace& linear, const CalibrationConstant& cal, double signal_freq_hz,
                                       double guard_hz) {
  if (linear.in_db) throw Error(ErrorCode::InvalidParameter, "sensitivity needs a linear trace");
  if (!(cal.volts_per_tesla > 0.0)) throw Error(ErrorCode::InvalidParameter, "calibration constant must be positive");
  if (!(linear.enbw_hz > 0.0)) throw Error(ErrorCode::InvalidParameter, "trace carries no ENBW");
  std::vector<double> floor_bins;
  double peak = 0.0;
  bool have_peak = false;
  for (std::size_t i = 0; i < linear.size(); ++i) {
    if (std::abs(linear.abscissa[i] - signal_freq_hz) > guard_hz) {
      floor_bins.push_back(linear.values[i]);
    } else {
      peak = have_peak ? std::max(peak, linear.values[i]) : linear.values[i];
      have_peak = true;
    }
  }
  constexpr std::size_t kMinFloorBins = 5;
  if (floor_bins.size() < kMinFloorBins) {
    throw Error(ErrorCode::InsufficientBins, "too few bins outside the signal guard band");
  }
  SensitivityReport r;
  r.n_floor_bins = floor_bins.size();
  r.floor_power_v2 = median(std::move(floor_bins));
  r.signal_power_v2 = have_peak ? std::max(0.0, peak - r.floor_power_v2) : 0.0;
  r.noise_floor_t_per_rthz = std::sqrt(r.floor_power_v2 / linear.enbw_hz) / cal.volts_per_tesla;
  r.signal_freq_hz = signal_freq_hz;
  r.volts_per_tesla = cal.volts_per_tesla;
  r.enbw_hz = linear.enbw_hz;
  return r;
}

double band_sensitivity(const PowerTrace& linear, const CalibrationConstant& cal, double signal_freq_hz,
                        double guard_hz, double f_lo, double f_hi) {
  PowerTrace sub;
  sub.mode = linear.mode;
  sub.enbw_hz = linear.enbw_hz;
  for (std::size_t i = 0; i < linear.size(); ++i) {
    if (linear.abscissa[i] >= f_lo && linear.abscissa[i] <= f_hi) {
      sub.abscissa.push_back(linear.abscissa[i]);
      sub.values.push_back(linear.values[i]);
    }
  }
  return estimate_sensitivity(sub, cal, signal_freq_hz, guard_hz).noise_floor_t_per_rthz;
}

MagnetometryResult run_magnetometry(const ExperimentConfig& cfg, ProbeKind probe,
                                    const MagnetometryResult* coherent_reference) {
  const ModelPoint m = resolve(cfg);
  const SAConfig& sa = cfg.magnetometry_sa;
  const double fs = cfg.sample_rate_hz;

  MagnetometryResult result;
  if (probe == ProbeKind::Squeezed) {
    if (cfg.ideal_lock) {
      result.locked_variance = quad_variance(m.detected, m.detected.theta_min());
    } else {
      LockConfig lock = cfg.lock;
      lock.target = LockTarget::Min;
      result.lock = run_lock(m.detected, cfg.lock_measurement_noise, lock, derive_seed(cfg.seed, {stream::kLock}));
      result.locked_variance = quad_variance(m.detected, result.lock->phase_estimate);
    }
  }
  result.calibration = measure_tone_calibration(m.gz_v_per_t, cfg.field.freq_hz, m.reference_amplitude_t, fs, sa);

  const double duration = swept_record_duration(sa, fs);
  const std::size_t n = sample_count(duration, fs);
  const TimeSeries field{fs, sine_samples(m.applied_amplitude_t, cfg.field.freq_hz, fs, n), {}, Units::Tesla};

  const RealizationSource source = [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(cfg.seed, {stream::kMagnetometry, i});
    PhotocurrentScenario sc;
    sc.shot_psd_v2_per_hz = m.detector.shot_psd_v2_per_hz;
    sc.locked_variance = result.locked_variance;
    sc.gz_v_per_t = m.gz_v_per_t;
    sc.b_series = field;
    if (cfg.atomic_fraction > 0.0 && m.spin.variance > 0.0) {
      sc.spin_series = sample_spin_noise(m.spin, n, 1.0 / fs, derive_seed(seed, {stream::kSpin}));
      sc.spin_psd_reference = m.spin_psd_reference;
      sc.atomic_fraction = cfg.atomic_fraction;
    }
    sc.electronic_db = cfg.polarimeter.electronic_noise_db;
    sc.analysis_bandwidth_hz = sa.stop_hz + sa.rbw_hz;
    return synthesize_photocurrent(sc, duration, fs, seed);
  };

  PowerTrace raw = swept(source, sa);
  const double elec_floor = m.electronic_psd_v2_per_hz * raw.enbw_hz;
  raw.values = subtract_electronic(raw.values, elec_floor).values;
  result.trace_linear = raw;
  result.trace_db = to_db(raw, m.detector.shot_psd_v2_per_hz * raw.enbw_hz);

  result.report = estimate_sensitivity(raw, result.calibration, cfg.field.freq_hz, cfg.guard_rbw * sa.rbw_hz);
  result.report.probe = std::string(to_string(probe));
  result.report.seed = cfg.seed;
  result.report.n_averages = sa.n_averages;
  result.report.squeezing_at_lock_db = to_db(result.locked_variance);
  if (probe == ProbeKind::Squeezed) {
    MagnetometryResult own_reference;
    if (coherent_reference == nullptr) {
      own_reference = run_magnetometry(cfg, ProbeKind::Coherent);
      coherent_reference = &own_reference;
    }
    result.report.improvement_db =
        20.0 * std::log10(coherent_reference->report.noise_floor_t_per_rthz / result.report.noise_floor_t_per_rthz);
  }
  return result;
}

}  // namespace sqmag
