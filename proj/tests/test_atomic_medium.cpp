#include <cmath>
#include <numbers>

#include "doctest.h"
#include "reference_values.hpp"
#include "sqmag/atomic_medium.hpp"
#include "sqmag/errors.hpp"
#include "support.hpp"

using namespace sqmag;
using doctest::Approx;
namespace ts = testing_support;

TEST_CASE("spin_variance of thermal and polarized ensembles") {
  EnsembleParams e;
  e.n_atoms = 1000;
  e.f_quantum_number = 2;
  e.f2_fraction = 5.0 / 8.0;
  e.polarization = SpinPolarization::Thermal;
  CHECK(spin_variance(e) == Approx(1250.0).epsilon(1e-15));
  const double thermal = spin_variance(e);

  e.polarization = SpinPolarization::FullyPolarized;
  CHECK(spin_variance(e) == 1000.0);
  CHECK(thermal / spin_variance(e) == 1.25);

  e.polarization = SpinPolarization::Thermal;
  e.n_atoms = 0;
  CHECK(spin_variance(e) == 0.0);

  e.n_atoms = 3;
  e.f2_fraction = 1.0;
  CHECK(spin_variance(e) / e.n_atoms == 2.0);
}

TEST_CASE("field_gain") {
  MediumCoupling c;
  c.verdet_rad_per_t_m = 0.0;
  CHECK(field_gain(c, 1.0, 0.15) == 0.0);
  c.verdet_rad_per_t_m = 10.0;
  CHECK(field_gain(c, 1.0, 0.15) == Approx(1.5).epsilon(1e-15));
  CHECK(field_gain(c, 2.0, 0.15) == 2.0 * field_gain(c, 1.0, 0.15));
}

TEST_CASE("precession_gain") {
  MediumCoupling c;
  c.alpha_rad_per_spin_m = 1.0;
  const PrecessionParams unit{1.0, 1.0, 1.0};
  CHECK(precession_gain(c, unit, 1.0, 1.0, 1.0) == 1.0);
  CHECK(precession_gain(c, unit, 1.0, 2.0, 1.0) == 2.0 * precession_gain(c, unit, 1.0, 1.0, 1.0));
  for (double alpha : {0.0, 1e-3, 7.0, -2.0}) {
    for (double sx : {0.0, 1.0, 1e6}) {
      c.alpha_rad_per_spin_m = alpha;
      CHECK(precession_gain(c, PrecessionParams{}, sx, 0.0, 0.15) == 0.0);
    }
  }
  CHECK(precessed_spin(2.0, unit, 0.25) == 0.5);
}

TEST_CASE("faraday_output") {
  MediumCoupling c;
  c.verdet_rad_per_t_m = 4.0;
  c.alpha_rad_per_spin_m = 0.5;
  c.transmission = 1.0;
  const StokesVector in{1.0, 0.6, 0.3, 0.2};
  const auto same = faraday_output(in, 0.0, 0.0, c, 0.15);
  CHECK(same.s0 == in.s0);
  CHECK(same.sx == in.sx);
  CHECK(same.sy == in.sy);
  CHECK(same.sz == in.sz);

  c.verdet_rad_per_t_m = 1.0;
  c.alpha_rad_per_spin_m = 0.0;
  const auto tiny = faraday_output({1, 1, 0, 0}, 1e-6 / 0.15, 0.0, c, 0.15);
  CHECK(std::abs(tiny.sy - 1e-6) < 1e-15);

  c.transmission = 0.97;
  const auto att = faraday_output(in, 0.0, 0.0, c, 0.15);
  CHECK(att.s0 == Approx(0.97 * in.s0).epsilon(1e-15));
  CHECK(att.sx == Approx(0.97 * in.sx).epsilon(1e-15));
  CHECK(att.sy == Approx(0.97 * in.sy).epsilon(1e-15));
  CHECK(att.sz == Approx(0.97 * in.sz).epsilon(1e-15));
}

TEST_CASE("property: two cells compose into one") {
  MediumCoupling c1, c2, joint;
  c1.verdet_rad_per_t_m = c2.verdet_rad_per_t_m = joint.verdet_rad_per_t_m = 3.0;
  c1.alpha_rad_per_spin_m = c2.alpha_rad_per_spin_m = joint.alpha_rad_per_spin_m = 0.02;
  c1.transmission = 0.9;
  c2.transmission = 0.8;
  joint.transmission = 0.9 * 0.8;
  const StokesVector in{2.0, 1.0, -0.5, 0.7};
  for (double b : {0.0, 0.01, -0.3}) {
    for (double fz : {0.0, 2.0}) {
      const auto two = faraday_output(faraday_output(in, b, fz, c1, 0.05), b, fz, c2, 0.1);
      const auto one = faraday_output(in, b, fz, joint, 0.15);
      CHECK(std::abs(two.s0 - one.s0) <= 1e-12);
      CHECK(std::abs(two.sx - one.sx) <= 1e-12);
      CHECK(std::abs(two.sy - one.sy) <= 1e-12);
      CHECK(std::abs(two.sz - one.sz) <= 1e-12);
    }
  }
}

TEST_CASE("nmor_rotation_gain is quadratic in power") {
  CHECK(nmor_rotation_gain(0.0, 5.0) == 0.0);
  CHECK(nmor_rotation_gain(1.0, 1.0) == 1.0);
  CHECK(nmor_rotation_gain(2e-3, 7.0) == Approx(4.0 * nmor_rotation_gain(1e-3, 7.0)).epsilon(1e-15));
  MediumCoupling c;
  c.verdet_rad_per_t_m = 3.0;
  CHECK(effective_verdet(c, 620e-6) == Approx(3.0).epsilon(1e-14));
}

TEST_CASE("sample_spin_noise basic contract") {
  const auto zero = sample_spin_noise({0.0, 1e-6}, 1000, 1e-7, 3);
  for (double v : zero.samples) CHECK(v == 0.0);

  const auto a = sample_spin_noise({1250.0, 1e-6}, 10000, 1e-7, 99);
  const auto b = sample_spin_noise({1250.0, 1e-6}, 10000, 1e-7, 99);
  CHECK(a.samples == b.samples);
  CHECK(a.units == Units::Spin);

  CHECK_THROWS_AS(sample_spin_noise({-1.0, 1e-6}, 10, 1e-7, 1), Error);
  CHECK_THROWS_AS(sample_spin_noise({1.0, 1e-6}, 0, 1e-7, 1), Error);
}

TEST_CASE("sample_spin_noise matches the OU variance and correlation time") {
  const auto x = sample_spin_noise({1250.0, 1e-6}, 1'000'000, 1e-7, 7).samples;
  CHECK(ts::variance(x) == Approx(1250.0).epsilon(0.03));
  const double m = ts::mean(x);
  double c0 = 0.0, c1 = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    c0 += (x[i - 1] - m) * (x[i - 1] - m);
    c1 += (x[i - 1] - m) * (x[i] - m);
  }
  const double tau = -1e-7 / std::log(c1 / c0);
  CHECK(tau == Approx(1e-6).epsilon(0.05));
}

TEST_CASE("OU periodogram follows the Lorentzian over 0.1/tau to 3/tau") {
  const SpinNoiseModel m{1.0, 1e-6};
  const double fs = 100e6;
  const std::size_t seg = 1 << 14;
  const auto x = sample_spin_noise(m, std::size_t{1} << 22, 1.0 / fs, 21).samples;
  const auto psd = ts::welch_psd(x, seg, fs);
  for (auto [lo, hi] : {std::pair{100e3, 200e3}, {400e3, 600e3}, {1.0e6, 1.3e6}, {2.5e6, 3.0e6}}) {
    double model = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < psd.size(); ++k) {
      const double f = static_cast<double>(k) * fs / static_cast<double>(seg);
      if (f >= lo && f <= hi) {
        model += lorentzian_spin_psd(m, f);
        ++n;
      }
    }
    CHECK(ts::band_psd(psd, seg, fs, lo, hi) == Approx(model / static_cast<double>(n)).epsilon(0.05));
  }
}

TEST_CASE("sampled_spin_psd: exact AR(1) spectrum and its Lorentzian limit") {
  const SpinNoiseModel m{1.0, 10e-9};
  CHECK(sampled_spin_psd(m, 10e6, 120e3) == Approx(ref::kSampledOuPsd120k).epsilon(1e-10));
  CHECK(lorentzian_spin_psd(m, 120e3) == Approx(ref::kLorentzOuPsd120k).epsilon(1e-12));
  const SpinNoiseModel slow{1.0, 1e-6};
  CHECK(sampled_spin_psd(slow, 1e9, 300e3) == Approx(lorentzian_spin_psd(slow, 300e3)).epsilon(1e-4));
}
