#include "sqmag/atomic_medium.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "sqmag/errors.hpp"
#include "sqmag/random.hpp"

namespace sqmag {

void EnsembleParams::validate() const {
  if (!(n_atoms >= 0.0)) throw Error(ErrorCode::InvalidParameter, "atom number must be >= 0");
  if (f_quantum_number != 1 && f_quantum_number != 2) throw Error(ErrorCode::InvalidParameter, "F must be 1 or 2");
  if (!(length_m > 0.0)) throw Error(ErrorCode::InvalidParameter, "cell length must be positive");
  if (!(f2_fraction >= 0.0 && f2_fraction <= 1.0)) throw Error(ErrorCode::InvalidParameter, "f2_fraction outside [0,1]");
}

void MediumCoupling::validate() const {
  if (!(transmission > 0.0 && transmission <= 1.0)) {
    throw Error(ErrorCode::EfficiencyOutOfRange, "cell transmission must lie in (0, 1]");
  }
  if (!std::isfinite(verdet_rad_per_t_m) || !std::isfinite(alpha_rad_per_spin_m) ||
      !std::isfinite(nmor_coefficient_per_w2)) {
    throw Error(ErrorCode::InvalidParameter, "coupling constants must be finite");
  }
}

void SpinNoiseModel::validate() const {
  if (!(variance >= 0.0)) throw Error(ErrorCode::InvalidParameter, "spin variance must be >= 0");
  if (!(correlation_time_s > 0.0)) throw Error(ErrorCode::InvalidParameter, "correlation time must be positive");
}

double spin_variance(const EnsembleParams& e) {
  e.validate();
  const double f = e.f_quantum_number;
  if (e.polarization == SpinPolarization::FullyPolarized) return f * e.n_atoms / 2.0;
  const double n_eff = e.f_quantum_number == 2 ? e.f2_fraction * e.n_atoms : e.n_atoms;
  return f * (f + 1.0) * n_eff / 3.0;
}

double field_gain(const MediumCoupling& c, double s_x, double length_m) {
  if (!(length_m > 0.0)) throw Error(ErrorCode::InvalidParameter, "length must be positive");
  return s_x * c.verdet_rad_per_t_m * length_m;
}

double precession_gain(const MediumCoupling& c, const PrecessionParams& p, double s_x, double spin_magnitude,
                       double length_m) {
  if (!(spin_magnitude >= 0.0)) throw Error(ErrorCode::InvalidParameter, "spin magnitude must be >= 0");
  if (spin_magnitude == 0.0) return 0.0;
  return s_x * c.alpha_rad_per_spin_m * p.magneton_rad_per_s_t * p.lande_g * p.tau_s * spin_magnitude * length_m;
}

double precessed_spin(double spin_magnitude, const PrecessionParams& p, double b_y_t) noexcept {
  return spin_magnitude * p.magneton_rad_per_s_t * p.lande_g * b_y_t * p.tau_s;
}

StokesVector faraday_output(const StokesVector& s_in, double b_z_t, double f_z, const MediumCoupling& c,
                            double length_m) {
  c.validate();
  const double theta = (c.verdet_rad_per_t_m * b_z_t + c.alpha_rad_per_spin_m * f_z) * length_m;
  // Absorption after rotation; the two commute for a polarization-independent loss.
  return faraday_rotate(s_in, theta).scaled(c.transmission);
}

double nmor_rotation_gain(double lo_power_w, double k_per_w2) {
  if (!(lo_power_w >= 0.0)) throw Error(ErrorCode::InvalidParameter, "LO power must be >= 0");
  return k_per_w2 * lo_power_w * lo_power_w;
}

double effective_verdet(const MediumCoupling& c, double lo_power_w) {
  return c.verdet_rad_per_t_m * nmor_rotation_gain(lo_power_w, c.nmor_coefficient_per_w2);
}

TimeSeries sample_spin_noise(const SpinNoiseModel& m, std::size_t n_samples, double dt_s, std::uint64_t seed) {
  m.validate();
  if (n_samples == 0) throw Error(ErrorCode::EmptyDuration, "spin noise needs at least one sample");
  if (!(dt_s > 0.0)) throw Error(ErrorCode::InvalidParameter, "dt must be positive");

  TimeSeries ts;
  ts.sample_rate_hz = 1.0 / dt_s;
  ts.units = Units::Spin;
  ts.seed_provenance = {seed};
  ts.samples.assign(n_samples, 0.0);
  if (m.variance == 0.0) return ts;

  Engine engine(seed);
  StandardNormal normal;
  const double sigma = std::sqrt(m.variance);
  const double rho = std::exp(-dt_s / m.correlation_time_s);
  const double innovation = sigma * std::sqrt(-std::expm1(-2.0 * dt_s / m.correlation_time_s));

  double state = sigma * normal(engine);
  ts.samples[0] = state;
  for (std::size_t i = 1; i < n_samples; ++i) {
    state = rho * state + innovation * normal(engine);
    ts.samples[i] = state;
  }
  return ts;
}

double sampled_spin_psd(const SpinNoiseModel& m, double sample_rate_hz, double f_hz) {
  m.validate();
  const double dt = 1.0 / sample_rate_hz;
  const double rho = std::exp(-dt / m.correlation_time_s);
  const double one_minus_rho2 = -std::expm1(-2.0 * dt / m.correlation_time_s);
  const double one_minus_rho = -std::expm1(-dt / m.correlation_time_s);
  const double half_phase = std::sin(std::numbers::pi * f_hz * dt);
  // |1 - rho e^{-i w dt}|^2 in a cancellation-free form.
  const double denom = one_minus_rho * one_minus_rho + 4.0 * rho * half_phase * half_phase;
  return 2.0 * dt * m.variance * one_minus_rho2 / denom;
}

double lorentzian_spin_psd(const SpinNoiseModel& m, double f_hz) noexcept {
  const double w = 2.0 * std::numbers::pi * f_hz * m.correlation_time_s;
  return 4.0 * m.variance * m.correlation_time_s / (1.0 + w * w);
}

}  // namespace sqmag
