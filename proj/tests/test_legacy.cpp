#include <gtest/gtest.h>

#include "larmor/legacy.hpp"

using namespace larmor;

namespace {

const TimeSeriesBundle& default_bundle() {
  static const TimeSeriesBundle b = [] {
    Numerics n;
    n.t_max = 200.0;
    n.checkpoints = {0.0, 3.0};
    const PacketSpec p;
    return build_timeseries(0.0, BarrierSpec{}, p, build_kgrid(p, n.n_k), n);
  }();
  return b;
}

std::vector<double> step(double T, double t_star, double dt, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = j * dt >= t_star ? T : 0.0;
  return v;
}

}  // namespace

TEST(Legacy, ZeroBarrierDensityGivesZeroDwellTime) {
  const std::vector<double> zero(101, 0.0);
  EXPECT_EQ(dwell_time(zero, 0.01), 0.0);
}

TEST(Legacy, FreeFlightDwellTime) {
  Numerics n;
  n.n_k = 2048;
  n.t_max = 8.0;
  const PacketSpec p;
  const auto b = build_timeseries(0.0, BarrierSpec{1.0, 0.0, 2.0}, p, build_kgrid(p, 2048), n);
  EXPECT_NEAR(dwell_time(b), 4.0 / 9.9, 0.05 * 4.0 / 9.9);
}

TEST(Legacy, IncompleteSeriesIsRejected) {
  std::vector<double> p2(100, 0.0);
  p2.back() = 1e-3;
  try {
    dwell_time(p2, 0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.invariant(), "legacy.incomplete");
  }
}

TEST(Legacy, DwellTimeIgnoresLowerLimitBeforeArrival) {
  const auto& b = default_bundle();
  std::size_t first = 0;
  while (b.P2[first] <= 1e-10) ++first;
  const double full = dwell_time(b.P2, b.dt, 0.0);
  for (double frac : {0.25, 0.5, 1.0}) EXPECT_NEAR(dwell_time(b.P2, b.dt, frac * first * b.dt), full, 1e-8);
  EXPECT_GT(full, 0.0);
}

TEST(Legacy, EpsilonStartOnDefaults) {
  const auto& b = default_bundle();
  const double tD = dwell_time(b);
  const double e1 = epsilon_start(b.P2, b.dt, 0.01, tD), e2 = epsilon_start(b.P2, b.dt, 0.02, tD);
  EXPECT_GT(e1, 1.0);
  EXPECT_LT(e1, 2.0);
  EXPECT_GE(e2, e1);
  // shrinking epsilon moves the start back towards the first arrival
  double prev = e1;
  for (double eps : {1e-4, 1e-6, 1e-8}) {
    const double e = epsilon_start(b.P2, b.dt, eps, tD);
    EXPECT_LT(e, prev);
    prev = e;
  }
  std::size_t first = 0;
  while (b.P2[first] <= 1e-12) ++first;
  EXPECT_GE(prev, first * b.dt);
  EXPECT_THROW(epsilon_start(b.P2, b.dt, 0.2, tD), Error);
  EXPECT_THROW(epsilon_start(b.P2, b.dt, 0.0, tD), Error);
}

TEST(Legacy, StepFunctionTransmission) {
  const double dt = 0.01;
  const auto P3 = step(0.3, 4.0, dt, 1001);
  // the trapezoid rule smears the sampled jump over one step: exact up to dt/2
  EXPECT_NEAR(legacy_transmission_time(P3, dt, 1.5).value, 4.0 - 1.5, 0.5 * dt + 1e-12);
  EXPECT_NEAR(legacy_transmission_time(P3, dt, 1.503).value, 4.0 - 1.503, 0.5 * dt + 1e-12);
}

TEST(Legacy, SensitivityToLowerLimitIsMinusOneBeforeArrival) {
  const auto& b = default_bundle();
  const double h = 0.05;
  for (double t3 : {0.3, 0.6, 0.9}) {
    const double a = legacy_transmission_time(b.region3.P, b.dt, t3).value;
    const double c = legacy_transmission_time(b.region3.P, b.dt, t3 + h).value;
    EXPECT_NEAR((c - a) / h, -1.0, 1e-9) << t3;
  }
}

TEST(Legacy, ReflectionIntegrandIsClippedAndReported) {
  // P1 starts at 1 and ends at R = 0.6: the early integrand is negative
  const double dt = 0.01;
  std::vector<double> P1(1001);
  for (std::size_t j = 0; j < P1.size(); ++j) {
    const double t = j * dt;
    P1[j] = t < 2.0 ? 1.0 : (t < 3.0 ? 0.0 : 0.6);
  }
  const auto r = legacy_reflection_time(P1, dt, 0.0);
  EXPECT_NEAR(r.value, 1.0, dt);  // only [2, 3] contributes, integrand 1
  EXPECT_NEAR(r.clipped_weight, 2.0 * (1.0 / 0.6 - 1.0), dt);
}

TEST(Legacy, TinyTransmissionIsRejected) {
  const auto P3 = step(1e-6, 2.0, 0.01, 500);
  try {
    legacy_transmission_time(P3, 0.01, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.invariant(), "legacy.T_too_small");
  }
}

TEST(Legacy, AllTimesOnDefaults) {
  const auto L = legacy_times(default_bundle());
  EXPECT_GT(L.tau_D, 0.0);
  EXPECT_GE(L.tau_eps, 0.0);
  EXPECT_TRUE(L.has_T && L.has_R);
  EXPECT_TRUE(std::isfinite(L.tau_T_legacy) && std::isfinite(L.tau_R_legacy));
  EXPECT_EQ(L.t1, L.tau_eps);
  EXPECT_EQ(L.t3, L.tau_eps);
}
