#pragma once

// Statistical oracles shared by the test binaries. Independent of the
// analyzer code: plain Welch periodograms and FFT band limiting.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

namespace testing_support {

inline double mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size() - 1);
}

inline std::vector<double> white_noise(std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  std::vector<double> x(n);
  for (double& v : x) v = normal(engine);
  return x;
}

inline std::vector<double> tone(std::size_t n, double amplitude, double freq_hz, double fs, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amplitude * std::cos(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / fs + phase);
  }
  return x;
}

/// One-sided Welch PSD with a Hann window and 50% overlap; bin k is k*fs/seg.
inline std::vector<double> welch_psd(const std::vector<double>& x, std::size_t seg, double fs) {
  std::vector<double> w(seg);
  double w2 = 0.0;
  for (std::size_t i = 0; i < seg; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg));
    w2 += w[i] * w[i];
  }
  std::vector<double> in(seg);
  std::vector<std::complex<double>> out(seg / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(seg), in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                        FFTW_ESTIMATE);
  std::vector<double> psd(seg / 2 + 1, 0.0);
  std::size_t n_seg = 0;
  for (std::size_t start = 0; start + seg <= x.size(); start += seg / 2) {
    for (std::size_t i = 0; i < seg; ++i) in[i] = x[start + i] * w[i];
    fftw_execute(plan);
    for (std::size_t k = 0; k < psd.size(); ++k) psd[k] += std::norm(out[k]);
    ++n_seg;
  }
  fftw_destroy_plan(plan);
  for (std::size_t k = 0; k < psd.size(); ++k) {
    const double one_sided = (k == 0 || 2 * k == seg) ? 1.0 : 2.0;
    psd[k] *= one_sided / (fs * w2 * static_cast<double>(n_seg));
  }
  return psd;
}

/// Mean Welch PSD over [f_lo, f_hi].
inline double band_psd(const std::vector<double>& psd, std::size_t seg, double fs, double f_lo, double f_hi) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < psd.size(); ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(seg);
    if (f >= f_lo && f <= f_hi) {
      acc += psd[k];
      ++n;
    }
  }
  return acc / static_cast<double>(n);
}

/// Zeroes every Fourier component outside [f_lo, f_hi].
inline std::vector<double> band_limit(const std::vector<double>& x, double fs, double f_lo, double f_hi) {
  const std::size_t n = x.size();
  std::vector<double> buf = x;
  std::vector<std::complex<double>> spec(n / 2 + 1);
  fftw_plan fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), buf.data(), reinterpret_cast<fftw_complex*>(spec.data()),
                                       FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(n);
    if (f < f_lo || f > f_hi) spec[k] = 0.0;
  }
  fftw_plan inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(spec.data()), buf.data(),
                                       FFTW_ESTIMATE);
  fftw_execute(inv);
  fftw_destroy_plan(inv);
  for (double& v : buf) v /= static_cast<double>(n);
  return buf;
}

}  // namespace testing_support
