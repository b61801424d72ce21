#include "sqmag/spectrum_analyzer.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>

#include "sqmag/errors.hpp"
#include "sqmag/polarization.hpp"

namespace sqmag {

namespace {

using cplx = std::complex<double>;

// Margin kept around each FFT block, in time-domain standard deviations of
// the Gaussian RBW impulse response.
constexpr double kKernelSigmas = 8.0;
// Decimated rate in units of RBW; the passband tails at +-4 RBW are ~1e-10.
constexpr double kDecimatedRateOverRbw = 8.0;
constexpr std::size_t kMinBlockDecimated = 4096;
// The video filter starts pre-charged; swept bins skip this many time constants.
constexpr double kSettleTimeConstants = 2.0;

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
struct PlanDestroy {
  void operator()(fftw_plan_s* p) const noexcept { fftw_destroy_plan(p); }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDestroy>;

template <typename T>
std::unique_ptr<T[], FftwFree> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwFree>(p);
}

bool is_smooth(std::size_t n) {
  for (std::size_t f : {2u, 3u, 5u, 7u}) {
    while (n % f == 0) n /= f;
  }
  return n == 1;
}

/// Gaussian |H(f)| = exp(-f^2 / (2 s^2)) with -3 dB full width rbw.
double gaussian_sigma_hz(double rbw_hz) { return rbw_hz / (2.0 * std::sqrt(std::numbers::ln2)); }

struct FilterPlan {
  double fs = 0.0;
  double rbw = 0.0;
  double sigma_hz = 0.0;
  std::size_t decimation = 1;  // D
  std::size_t margin = 0;      // P, multiple of D
};

FilterPlan make_plan(double fs, double rbw) {
  FilterPlan plan;
  plan.fs = fs;
  plan.rbw = rbw;
  plan.sigma_hz = gaussian_sigma_hz(rbw);
  auto d = static_cast<std::size_t>(std::floor(fs / (kDecimatedRateOverRbw * rbw)));
  d = std::max<std::size_t>(d, 1);
  while (d > 1 && !is_smooth(d)) --d;
  plan.decimation = d;
  const double sigma_t = 1.0 / (2.0 * std::numbers::pi * plan.sigma_hz);
  const auto raw = static_cast<std::size_t>(std::ceil(kKernelSigmas * sigma_t * fs));
  plan.margin = ((raw + d - 1) / d) * d;
  return plan;
}

/// Detected power 2|y|^2 of the complex baseband behind each RBW filter,
/// decimated by plan.decimation. Sample j corresponds to input index
/// plan.margin + j * D.
std::vector<std::vector<double>> detect_bands(std::span<const double> x, const FilterPlan& plan,
                                              std::span<const double> centers) {
  const std::size_t n = x.size();
  const std::size_t d = plan.decimation;
  const std::size_t p = plan.margin;
  if (n < 2 * p + d) {
    std::ostringstream msg;
    msg << "record of " << n << " samples is shorter than the RBW filter support (" << 2 * p + d << ")";
    throw Error(ErrorCode::InsufficientRecord, msg.str());
  }
  const std::size_t n_out = (n - 2 * p + d - 1) / d;

  std::size_t m = std::max<std::size_t>(kMinBlockDecimated, std::bit_ceil((8 * p + d - 1) / d));
  m = std::min(m, std::bit_ceil((n + 2 * p + d - 1) / d));
  m = std::max(m, std::bit_ceil(2 * p / d + 2));
  const std::size_t nb = m * d;
  const std::size_t hop = nb - 2 * p;
  const double df = plan.fs / static_cast<double>(nb);

  auto block = fftw_buffer<double>(nb);
  auto spectrum = fftw_buffer<fftw_complex>(nb / 2 + 1);
  auto band = fftw_buffer<fftw_complex>(m);
  PlanPtr forward(fftw_plan_dft_r2c_1d(static_cast<int>(nb), block.get(), spectrum.get(), FFTW_ESTIMATE));
  PlanPtr backward(fftw_plan_dft_1d(static_cast<int>(m), band.get(), band.get(), FFTW_BACKWARD, FFTW_ESTIMATE));

  const auto half = static_cast<std::ptrdiff_t>(m / 2);
  struct Band {
    std::ptrdiff_t k_center;
    std::vector<double> weight;  // indexed by offset + m/2
  };
  std::vector<Band> bands;
  bands.reserve(centers.size());
  for (double fc : centers) {
    Band b;
    b.k_center = static_cast<std::ptrdiff_t>(std::llround(fc / df));
    b.weight.resize(m);
    for (std::ptrdiff_t off = -half; off < half; ++off) {
      const double f = static_cast<double>(b.k_center + off) * df - fc;
      b.weight[static_cast<std::size_t>(off + half)] = std::exp(-f * f / (2.0 * plan.sigma_hz * plan.sigma_hz));
    }
    bands.push_back(std::move(b));
  }

  const auto snb = static_cast<std::ptrdiff_t>(nb);
  auto spectrum_at = [&](std::ptrdiff_t k) -> cplx {
    std::ptrdiff_t km = k % snb;
    if (km < 0) km += snb;
    if (km <= snb / 2) return {spectrum[km][0], spectrum[km][1]};
    return {spectrum[snb - km][0], -spectrum[snb - km][1]};
  };

  std::vector<std::vector<double>> power(centers.size(), std::vector<double>(n_out, 0.0));
  const double norm = 1.0 / static_cast<double>(nb);
  const std::size_t first_local = p / d;
  const std::size_t last_local = (nb - p) / d;  // exclusive

  for (std::size_t start = 0, out_base = 0; out_base < n_out; start += hop, out_base += hop / d) {
    const std::size_t avail = start < n ? std::min(nb, n - start) : 0;
    if (avail > 0) std::copy_n(x.data() + start, avail, block.get());
    std::fill(block.get() + avail, block.get() + nb, 0.0);
    fftw_execute(forward.get());

    const std::size_t count = std::min(last_local - first_local, n_out - out_base);
    for (std::size_t c = 0; c < bands.size(); ++c) {
      const Band& b = bands[c];
      for (std::ptrdiff_t off = -half; off < half; ++off) {
        const cplx v = spectrum_at(b.k_center + off) * b.weight[static_cast<std::size_t>(off + half)];
        const auto slot = static_cast<std::size_t>(off < 0 ? off + static_cast<std::ptrdiff_t>(m) : off);
        band[slot][0] = v.real();
        band[slot][1] = v.imag();
      }
      fftw_execute(backward.get());
      auto& out = power[c];
      for (std::size_t j = 0; j < count; ++j) {
        const double re = band[first_local + j][0] * norm;
        const double im = band[first_local + j][1] * norm;
        out[out_base + j] = 2.0 * (re * re + im * im);
      }
    }
  }
  return power;
}

/// Single-pole video filter, pre-charged with the mean of the first time
/// constant of input.
std::vector<double> video_filter(std::span<const double> power, double vbw_hz, double rate_hz) {
  const double tau = 1.0 / (2.0 * std::numbers::pi * vbw_hz);
  const double alpha = -std::expm1(-1.0 / (tau * rate_hz));
  const std::size_t n_pre = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(tau * rate_hz)), 1, power.size());
  double state = std::accumulate(power.begin(), power.begin() + static_cast<std::ptrdiff_t>(n_pre), 0.0) /
                 static_cast<double>(n_pre);
  std::vector<double> out(power.size());
  for (std::size_t i = 0; i < power.size(); ++i) {
    state += alpha * (power[i] - state);
    out[i] = state;
  }
  return out;
}

struct SweptTiming {
  std::size_t settle = 0;
  std::size_t dwell = 0;
};

SweptTiming swept_timing(const SAConfig& cfg, const FilterPlan& plan, std::size_t n_bins) {
  const double rate = plan.fs / static_cast<double>(plan.decimation);
  const double tau = 1.0 / (2.0 * std::numbers::pi * cfg.vbw_hz);
  SweptTiming t;
  t.settle = static_cast<std::size_t>(std::ceil(kSettleTimeConstants * tau * rate));
  const double dwell_s = cfg.sweep_time_s / static_cast<double>(n_bins);
  t.dwell = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(dwell_s * rate)));
  return t;
}

void check_nyquist(double top_hz, double fs) {
  if (!(top_hz < fs / 2.0)) {
    std::ostringstream msg;
    msg << "analysis band reaches " << top_hz << " Hz, Nyquist is " << fs / 2.0 << " Hz";
    throw Error(ErrorCode::NyquistViolation, msg.str());
  }
}

}  // namespace

void SAConfig::validate() const {
  if (!(rbw_hz > 0.0 && vbw_hz > 0.0)) throw Error(ErrorCode::InvalidParameter, "RBW and VBW must be positive");
  if (!(vbw_hz <= rbw_hz)) throw Error(ErrorCode::InvalidParameter, "VBW must not exceed RBW");
  if (!(sweep_time_s > 0.0)) throw Error(ErrorCode::InvalidParameter, "sweep time must be positive");
  if (n_averages < 1) throw Error(ErrorCode::InvalidParameter, "need at least one average");
  if (!(power_floor > 0.0)) throw Error(ErrorCode::InvalidParameter, "power floor must be positive");
  if (mode == SweepMode::Swept) {
    if (!(start_hz >= 0.0 && start_hz < stop_hz)) throw Error(ErrorCode::InvalidParameter, "swept mode needs start < stop");
    if (bin_spacing_hz < 0.0 || bin_spacing_hz > rbw_hz / 2.0) {
      throw Error(ErrorCode::InvalidParameter, "bin spacing must lie in (0, rbw/2]");
    }
  } else if (!(center_hz > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "zero span needs a positive centre frequency");
  }
}

SAConfig SAConfig::zero_span_at(double center_hz, double rbw_hz, double vbw_hz, double sweep_time_s) {
  SAConfig cfg;
  cfg.mode = SweepMode::ZeroSpan;
  cfg.center_hz = center_hz;
  cfg.rbw_hz = rbw_hz;
  cfg.vbw_hz = vbw_hz;
  cfg.sweep_time_s = sweep_time_s;
  return cfg;
}

SAConfig SAConfig::swept_over(double start_hz, double stop_hz, double rbw_hz, double vbw_hz, double sweep_time_s,
                              std::size_t n_averages) {
  SAConfig cfg;
  cfg.mode = SweepMode::Swept;
  cfg.start_hz = start_hz;
  cfg.stop_hz = stop_hz;
  cfg.rbw_hz = rbw_hz;
  cfg.vbw_hz = vbw_hz;
  cfg.sweep_time_s = sweep_time_s;
  cfg.n_averages = n_averages;
  return cfg;
}

double PowerTrace::mean() const {
  if (values.empty()) throw Error(ErrorCode::InsufficientBins, "empty trace");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double enbw(double rbw_hz) {
  if (!(rbw_hz > 0.0)) throw Error(ErrorCode::InvalidParameter, "RBW must be positive");
  return kGaussianEnbwRatio * rbw_hz;
}

std::vector<double> swept_grid(const SAConfig& cfg) {
  const double step = cfg.bin_spacing_hz > 0.0 ? cfg.bin_spacing_hz : cfg.rbw_hz / 2.0;
  const auto n_steps = static_cast<std::size_t>(std::ceil((cfg.stop_hz - cfg.start_hz) / step - 1e-9));
  std::vector<double> grid(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) grid[i] = cfg.start_hz + step * static_cast<double>(i);
  return grid;
}

double swept_record_duration(const SAConfig& cfg, double sample_rate_hz) {
  cfg.validate();
  const FilterPlan plan = make_plan(sample_rate_hz, cfg.rbw_hz);
  const SweptTiming t = swept_timing(cfg, plan, swept_grid(cfg).size());
  const std::size_t samples = 2 * plan.margin + (t.settle + t.dwell + 1) * plan.decimation;
  return static_cast<double>(samples) / sample_rate_hz;
}

PowerTrace zero_span(const TimeSeries& ts, const SAConfig& cfg) {
  if (cfg.mode != SweepMode::ZeroSpan) throw Error(ErrorCode::ConfigModeMismatch, "zero_span needs a zero-span config");
  cfg.validate();
  ts.validate();
  check_nyquist(cfg.center_hz + cfg.rbw_hz, ts.sample_rate_hz);

  const FilterPlan plan = make_plan(ts.sample_rate_hz, cfg.rbw_hz);
  const double centers[] = {cfg.center_hz};
  const auto power = detect_bands(ts.samples, plan, centers);
  const double rate = ts.sample_rate_hz / static_cast<double>(plan.decimation);
  const auto video = video_filter(power[0], cfg.vbw_hz, rate);

  const std::size_t n_points = std::min(cfg.n_points == 0 ? std::size_t{1001} : cfg.n_points, video.size());
  PowerTrace trace;
  trace.mode = SweepMode::ZeroSpan;
  trace.enbw_hz = enbw(cfg.rbw_hz);
  trace.abscissa.resize(n_points);
  trace.values.resize(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const std::size_t lo = i * video.size() / n_points;
    const std::size_t hi = (i + 1) * video.size() / n_points;
    const double sum = std::accumulate(video.begin() + static_cast<std::ptrdiff_t>(lo),
                                       video.begin() + static_cast<std::ptrdiff_t>(hi), 0.0);
    trace.values[i] = std::max(sum / static_cast<double>(hi - lo), cfg.power_floor);
    const double mid = 0.5 * static_cast<double>(lo + hi - 1);
    trace.abscissa[i] =
        (static_cast<double>(plan.margin) + mid * static_cast<double>(plan.decimation)) / ts.sample_rate_hz;
  }
  return trace;
}

namespace {

PowerTrace average_traces(const RealizationSource& source, const SAConfig& cfg,
                          PowerTrace (*single)(const TimeSeries&, const SAConfig&)) {
  PowerTrace acc;
  for (std::size_t i = 0; i < cfg.n_averages; ++i) {
    PowerTrace t = single(source(i), cfg);
    if (i == 0) {
      acc = std::move(t);
      continue;
    }
    if (t.size() != acc.size()) throw Error(ErrorCode::InvalidParameter, "realizations produced different trace lengths");
    for (std::size_t k = 0; k < acc.size(); ++k) acc.values[k] += t.values[k];
  }
  const double inv = 1.0 / static_cast<double>(cfg.n_averages);
  for (double& v : acc.values) v *= inv;
  return acc;
}

}  // namespace

PowerTrace zero_span(const RealizationSource& source, const SAConfig& cfg) {
  if (cfg.mode != SweepMode::ZeroSpan) throw Error(ErrorCode::ConfigModeMismatch, "zero_span needs a zero-span config");
  cfg.validate();
  return average_traces(source, cfg, static_cast<PowerTrace (*)(const TimeSeries&, const SAConfig&)>(&zero_span));
}

PowerTrace swept(const TimeSeries& ts, const SAConfig& cfg) {
  if (cfg.mode != SweepMode::Swept) throw Error(ErrorCode::ConfigModeMismatch, "swept needs a swept config");
  cfg.validate();
  ts.validate();
  check_nyquist(cfg.stop_hz + cfg.rbw_hz, ts.sample_rate_hz);

  const auto grid = swept_grid(cfg);
  const FilterPlan plan = make_plan(ts.sample_rate_hz, cfg.rbw_hz);
  const SweptTiming timing = swept_timing(cfg, plan, grid.size());
  const auto power = detect_bands(ts.samples, plan, grid);
  if (power.front().size() < timing.settle + timing.dwell) {
    std::ostringstream msg;
    msg << "record too short for settle + dwell; need " << swept_record_duration(cfg, ts.sample_rate_hz) << " s";
    throw Error(ErrorCode::InsufficientRecord, msg.str());
  }
  const double rate = ts.sample_rate_hz / static_cast<double>(plan.decimation);

  PowerTrace trace;
  trace.mode = SweepMode::Swept;
  trace.enbw_hz = enbw(cfg.rbw_hz);
  trace.abscissa = grid;
  trace.values.resize(grid.size());
  for (std::size_t b = 0; b < grid.size(); ++b) {
    const auto video = video_filter(power[b], cfg.vbw_hz, rate);
    const auto first = video.begin() + static_cast<std::ptrdiff_t>(timing.settle);
    const double sum = std::accumulate(first, first + static_cast<std::ptrdiff_t>(timing.dwell), 0.0);
    trace.values[b] = std::max(sum / static_cast<double>(timing.dwell), cfg.power_floor);
  }
  return trace;
}

PowerTrace swept(const RealizationSource& source, const SAConfig& cfg) {
  if (cfg.mode != SweepMode::Swept) throw Error(ErrorCode::ConfigModeMismatch, "swept needs a swept config");
  cfg.validate();
  return average_traces(source, cfg, static_cast<PowerTrace (*)(const TimeSeries&, const SAConfig&)>(&swept));
}

PowerTrace to_db(const PowerTrace& linear, double reference_power) {
  if (linear.in_db) throw Error(ErrorCode::InvalidParameter, "trace is already in dB");
  PowerTrace out = linear;
  out.in_db = true;
  for (double& v : out.values) v = to_db(v / reference_power);
  return out;
}

void write_csv(const PowerTrace& trace, std::ostream& out, std::string_view value_label) {
  out.precision(12);
  out << "# enbw_hz=" << trace.enbw_hz << "\n";
  out << (trace.mode == SweepMode::Swept ? "frequency_hz," : "time_s,") << value_label << "\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << trace.abscissa[i] << ',' << trace.values[i] << '\n';
}

}  // namespace sqmag
