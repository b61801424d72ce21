#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "sqmag/errors.hpp"
#include "sqmag/noise_lock.hpp"

using namespace sqmag;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

NoiseMeasurement landscape(const QuadratureNoiseState& q) {
  return [q](double phase) { return quad_variance(q, phase); };
}

}  // namespace

TEST_CASE("lock_step at the minimum holds still") {
  const QuadratureNoiseState q(0.25, 4.0, 0.0);
  LockConfig cfg;
  LockState s;
  s.phase_estimate = 0.0;
  const auto next = lock_step(s, landscape(q), cfg);
  CHECK(std::abs(next.last_error) < 1e-15);
  CHECK(std::abs(phase_error(q, LockTarget::Min, next.phase_estimate)) < 1e-15);
  CHECK(next.history.size() == 1);
}

TEST_CASE("lock_step error sign drives toward the target") {
  const QuadratureNoiseState q(0.25, 4.0, 0.0);
  LockConfig cfg;
  LockState s;
  s.phase_estimate = 0.3;
  const auto to_min = lock_step(s, landscape(q), cfg);
  CHECK(to_min.last_error < 0.0);
  CHECK(to_min.phase_estimate < 0.3);

  cfg.target = LockTarget::Max;
  const auto to_max = lock_step(s, landscape(q), cfg);
  CHECK(to_max.last_error == -to_min.last_error);
}

TEST_CASE("lock_step rejects broken measurements") {
  LockState s;
  const NoiseMeasurement bad = [](double) { return std::nan(""); };
  try {
    lock_step(s, bad, {});
    FAIL("expected MeasurementFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MeasurementFailure);
  }
}

TEST_CASE("run_lock converges from anywhere in the capture range") {
  const QuadratureNoiseState q(from_db(-3.6), from_db(7.4), 0.4);
  for (double offset = -kPi / 4.0 + 0.01; offset < kPi / 4.0; offset += 0.05) {
    LockConfig cfg;
    cfg.initial_phase_rad = q.theta_min() + offset;
    const auto s = run_lock(q, 0.0, cfg, 1);
    CHECK(s.locked);
    CHECK(s.lock_step <= 200);
    CHECK(std::abs(phase_error(q, LockTarget::Min, s.phase_estimate)) < 0.01);
  }
}

TEST_CASE("run_lock on a flat landscape fails") {
  try {
    run_lock(QuadratureNoiseState::coherent(), 0.0, {}, 1);
    FAIL("expected LockNotAcquired");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LockNotAcquired);
  }
}

TEST_CASE("run_lock is deterministic per seed") {
  const QuadratureNoiseState q(0.5, 3.0, 0.0);
  LockConfig cfg;
  cfg.post_lock_steps = 50;
  cfg.settle_tolerance_rad = 0.05;
  const auto a = run_lock(q, 0.02, cfg, 17);
  const auto b = run_lock(q, 0.02, cfg, 17);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].phase_rad == b.history[i].phase_rad);

  std::ostringstream csv;
  write_history_csv(a, csv);
  CHECK(csv.str().rfind("step,phase_rad,noise_power_linear\n", 0) == 0);
}

TEST_CASE("property: the noiseless loop contracts below the stability bound") {
  const QuadratureNoiseState q(from_db(-3.6), from_db(7.4), 0.0);
  for (auto target : {LockTarget::Min, LockTarget::Max}) {
    LockConfig cfg;
    cfg.target = target;
    const double bound = stability_bound(q, cfg);
    REQUIRE(bound > 0.0);
    for (double fraction : {0.1, 0.5, 0.9}) {
      cfg.loop_gain = fraction * bound;
      LockState s;
      s.phase_estimate = nearest_target_phase(q, target, 0.0) + 0.05;
      for (int k = 0; k < 30; ++k) {
        const double before = std::abs(phase_error(q, target, s.phase_estimate));
        if (before < 1e-12) break;
        s = lock_step(s, landscape(q), cfg);
        CHECK(std::abs(phase_error(q, target, s.phase_estimate)) < before);
      }
    }
  }
}

TEST_CASE("property: residual phase error grows with measurement noise") {
  const QuadratureNoiseState q(from_db(-3.6), from_db(7.4), 0.0);
  LockConfig cfg;
  cfg.post_lock_steps = 4000;
  cfg.max_steps = 10000;
  cfg.settle_tolerance_rad = 0.05;
  double previous = 0.0;
  for (double noise : {0.01, 0.03, 0.1}) {
    const auto s = run_lock(q, noise, cfg, 5);
    const double rms = residual_phase_rms(s, q, LockTarget::Min, s.lock_step);
    CHECK(rms > previous);
    previous = rms;
  }
}

TEST_CASE("switching the target from min to max moves the phase by a quarter turn") {
  const QuadratureNoiseState q(from_db(-3.6), from_db(7.4), 0.2);
  LockConfig cfg;
  cfg.post_lock_steps = 50;
  const auto at_min = run_lock(q, 1e-3, cfg, 3);
  cfg.target = LockTarget::Max;
  cfg.initial_phase_rad = at_min.phase_estimate;
  const auto at_max = run_lock(q, 1e-3, cfg, 4);
  const double moved = std::abs(std::remainder(at_max.phase_estimate - at_min.phase_estimate, kPi));
  CHECK(std::abs(moved - kPi / 2.0) <= cfg.settle_tolerance_rad);
  CHECK(std::abs(phase_error(q, LockTarget::Max, at_max.phase_estimate)) < cfg.settle_tolerance_rad);
}
