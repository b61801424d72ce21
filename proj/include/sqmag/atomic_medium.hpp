#pragma once

// The rubidium vapor cell: Faraday and NMOR rotation gains, spin-projection
// noise statistics and a stochastic spin-noise generator.

#include <cstdint>

#include "sqmag/polarization.hpp"
#include "sqmag/time_series.hpp"

namespace sqmag {

enum class SpinPolarization { Thermal, FullyPolarized };

struct EnsembleParams {
  double n_atoms = 1e12;
  int f_quantum_number = 2;
  double length_m = 0.15;
  /// Fraction of atoms in the probed hyperfine manifold (5/8 for F=2 of 87Rb).
  double f2_fraction = 5.0 / 8.0;
  SpinPolarization polarization = SpinPolarization::Thermal;

  void validate() const;
};

struct MediumCoupling {
  double verdet_rad_per_t_m = 0.0;
  double alpha_rad_per_spin_m = 0.0;
  /// Quadratic NMOR coefficient k; the effective Verdet constant scales as
  /// k * P^2. The default makes the scaling 1 at the 620 uW reference power.
  double nmor_coefficient_per_w2 = 1.0 / (620e-6 * 620e-6);
  double transmission = 0.97;

  void validate() const;
};

/// Parameters of the precession readout. The magneton is stored as mu_B/hbar
/// so that g * mu * B * tau is the precession angle in radians.
struct PrecessionParams {
  double lande_g = 0.5;
  double magneton_rad_per_s_t = 8.794100e10;
  double tau_s = 1e-3;
};

struct SpinNoiseModel {
  double variance = 0.0;
  double correlation_time_s = 10e-9;

  void validate() const;
};

/// Var F_z: F(F+1) N_eff / 3 for a thermal ensemble (N_eff = f2_fraction N_A
/// when the probe addresses F=2), F N_A / 2 for a fully polarized one.
double spin_variance(const EnsembleParams& e);

/// G_z = dSy_out/dB_z = S_x V l.
double field_gain(const MediumCoupling& c, double s_x, double length_m);

/// G_y = S_x alpha mu g tau |F| l; identically zero for |F| = 0.
double precession_gain(const MediumCoupling& c, const PrecessionParams& p, double s_x, double spin_magnitude,
                       double length_m);

/// <F_z> = |F| mu g B_y tau for a spin initially along x.
double precessed_spin(double spin_magnitude, const PrecessionParams& p, double b_y_t) noexcept;

/// Rotates by (V b_z + alpha f_z) l, then attenuates every component by the
/// cell transmission.
StokesVector faraday_output(const StokesVector& s_in, double b_z_t, double f_z, const MediumCoupling& c,
                            double length_m);

/// Multiplicative NMOR scaling of the Verdet constant, k * P^2.
double nmor_rotation_gain(double lo_power_w, double k_per_w2);

/// V * nmor_rotation_gain(P).
double effective_verdet(const MediumCoupling& c, double lo_power_w);

/// Stationary Ornstein-Uhlenbeck realization sampled exactly (AR(1) with
/// rho = exp(-dt / tau_c)). Deterministic per seed.
TimeSeries sample_spin_noise(const SpinNoiseModel& m, std::size_t n_samples, double dt_s, std::uint64_t seed);

/// One-sided PSD of the sampled process at frequency f (spin^2/Hz). Tends to
/// the Lorentzian 4 Var tau_c / (1 + (2 pi f tau_c)^2) as dt -> 0.
double sampled_spin_psd(const SpinNoiseModel& m, double sample_rate_hz, double f_hz);

/// Continuous-time Lorentzian spectrum of the OU process.
double lorentzian_spin_psd(const SpinNoiseModel& m, double f_hz) noexcept;

}  // namespace sqmag
