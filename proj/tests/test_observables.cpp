#include <gtest/gtest.h>

#include "larmor/clock.hpp"
#include "larmor/observables.hpp"

using namespace larmor;

namespace {

const BarrierSpec kBarrier{};
const PacketSpec kPacket{};

/// Short-horizon numerics: enough for everything that happens before the
/// resonant tail matters.
Numerics short_numerics() {
  Numerics n;
  n.n_k = 2048;
  n.t_max = 8.0;
  return n;
}

const KGrid& grid() {
  static const KGrid g = build_kgrid(kPacket, 2048);
  return g;
}

const TimeSeriesBundle& bundle(double omega) {
  static std::map<double, TimeSeriesBundle> cache;
  auto it = cache.find(omega);
  if (it == cache.end()) it = cache.emplace(omega, build_timeseries(omega, kBarrier, kPacket, grid(), short_numerics())).first;
  return it->second;
}

}  // namespace

TEST(Observables, InitialStateIsPolarisedAlongX) {
  const auto modes = make_modes(1e-3, grid(), kBarrier, kPacket);
  const auto m = region_moments_direct(modes, 0.0, Region::left);
  EXPECT_NEAR(m.P, 1.0, 1e-6);
  EXPECT_NEAR(m.Nx, 0.5 * m.P, 1e-8);
  EXPECT_NEAR(m.Ny, 0.0, 1e-8);
  EXPECT_NEAR(m.Nz, 0.0, 1e-8);
}

TEST(Observables, ZeroOmegaHasNoPrecession) {
  const auto modes = make_modes(0.0, grid(), kBarrier, kPacket);
  for (Region r : {Region::left, Region::barrier, Region::right}) {
    const auto m = region_moments_direct(modes, 3.0, r);
    EXPECT_NEAR(m.Nx, 0.5 * m.P, 1e-15);
    EXPECT_EQ(m.Ny, 0.0);
    EXPECT_EQ(m.Nz, 0.0);
  }
}

TEST(Observables, LateTransmittedProbabilityMatchesKspaceWeight) {
  // The narrow above-barrier resonance near k = 10.03 leaks out with a
  // lifetime of about 16, so region 3 reaches the k-space weight only late.
  const KGrid g = build_kgrid(kPacket, 8192);
  double T = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    T += g.weights[i] * 2.0 * std::numbers::pi * std::norm(spectral_amplitude(g.nodes[i], kPacket)) *
         std::norm(scattering_state(g.nodes[i], kBarrier.height(), kBarrier).D);
  Numerics n;
  n.t_max = 200.0;
  n.checkpoints = {0.0, 6.0};
  const auto b = build_timeseries(0.0, kBarrier, kPacket, g, n);
  EXPECT_NEAR(b.region3.P.back(), T, 1e-6);
  const auto j6 = std::size_t(std::llround(6.0 / n.dt));
  EXPECT_GT(T - b.region3.P[j6], 0.01);  // still filling at t = 6
  EXPECT_NEAR(b.checks.back().direct3.P, b.region3.P[j6], 1e-5);
}

TEST(Observables, ZeroOmegaCrossCurrentEqualsMeanCurrent) {
  const auto modes = make_modes(0.0, grid(), kBarrier, kPacket);
  for (double t : {2.0, 3.5})
    for (Boundary bd : {Boundary::left, Boundary::right}) {
      const auto r = boundary_rates(modes, t, bd);
      EXPECT_NEAR(r.dM.real(), 0.5 * r.dP, 1e-15 + 1e-13 * std::abs(r.dP));
      EXPECT_EQ(r.dM.imag(), 0.0);
    }
}

TEST(Observables, TransmittedRateIsSmallByTimeSix) {
  const auto& b = bundle(0.0);
  const double peak = *std::max_element(b.region3.dP.begin(), b.region3.dP.end());
  const auto j6 = std::size_t(std::llround(6.0 / b.dt));
  EXPECT_GT(b.region3.dP[j6], 0.0);
  // the resonant tail keeps the rate at a few percent of its peak
  EXPECT_LT(b.region3.dP[j6], 0.1 * peak);
}

TEST(Observables, FluxAccumulationAgreesWithDirectIntegration) {
  for (double omega : {0.0, 1e-3}) {
    const auto& b = bundle(omega);
    EXPECT_GE(b.checks.size(), 5u);
    EXPECT_LT(b.max_flux_residual(), 1e-5) << omega;
  }
}

TEST(Observables, InitialAndEarlyValues) {
  const auto& b = bundle(1e-3);
  EXPECT_NEAR(b.region1.P[0], 1.0, 1e-8);
  EXPECT_NEAR(b.region3.P[0], 0.0, 1e-8);
  for (std::size_t j = 0; b.times[j] < 1.0; ++j) EXPECT_LT(b.region3.P[j], 1e-6) << b.times[j];
}

TEST(Observables, UnitarityAtCheckpoints) {
  for (double omega : {0.0, 1e-3}) EXPECT_LE(bundle(omega).max_unitarity_residual(), 1e-6);
}

TEST(Observables, TransmittedProbabilityIsNonDecreasing) {
  const auto& b = bundle(0.0);
  for (std::size_t j = 1; j < b.size(); ++j) EXPECT_GT(b.region3.P[j] - b.region3.P[j - 1], -1e-4);
}

TEST(Observables, CauchySchwarzHoldsAtEverySample) {
  const auto& b = bundle(1e-3);
  for (const RegionSeries* s : {&b.region1, &b.region3})
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double n2 = s->Nx[j] * s->Nx[j] + s->Ny[j] * s->Ny[j] + s->Nz[j] * s->Nz[j];
      EXPECT_LE(n2, 0.25 * s->P[j] * s->P[j] + 1e-9);
    }
}

TEST(Observables, SeriesHaveDefiniteOmegaParity) {
  const auto& a = bundle(1e-3);
  const auto& b = bundle(-1e-3);
  double even = 0.0, odd = 0.0;
  for (auto pr : {std::pair{&a.region1, &b.region1}, std::pair{&a.region3, &b.region3}})
    for (std::size_t j = 0; j < a.size(); ++j) {
      even = std::max({even, std::abs(pr.first->P[j] - pr.second->P[j]), std::abs(pr.first->Nx[j] - pr.second->Nx[j])});
      odd = std::max({odd, std::abs(pr.first->Ny[j] + pr.second->Ny[j]), std::abs(pr.first->Nz[j] + pr.second->Nz[j])});
    }
  EXPECT_LE(even, 1e-10);
  EXPECT_LE(odd, 1e-10);
}

TEST(Observables, NumeratorVanishesAtZeroOmega) {
  const auto modes = make_modes(0.0, grid(), kBarrier, kPacket);
  for (double t : {2.5, 3.0, 4.0}) {
    const auto s = evolve_at(modes, kBarrier.d, t);
    const double j = current(s.plus, s.dplus, 1.0);
    EXPECT_LE(std::abs(numerator_N(s, 1.0)), 1e-12 * j * j);
  }
}

TEST(Observables, NumeratorIsSecondOrderInOmega) {
  const auto m1 = make_modes(5e-4, grid(), kBarrier, kPacket), m2 = make_modes(1e-3, grid(), kBarrier, kPacket);
  for (double t : {2.5, 3.0, 3.5, 4.0}) {
    const double n1 = numerator_N(evolve_at(m1, kBarrier.d, t), 1.0);
    const double n2 = numerator_N(evolve_at(m2, kBarrier.d, t), 1.0);
    EXPECT_NEAR(n2 / n1, 4.0, 0.2) << t;
  }
}

TEST(Observables, NumeratorMatchesRatioTimesSquaredRate) {
  const auto& b = bundle(1e-3);
  const auto modes = make_modes(1e-3, grid(), kBarrier, kPacket);
  const auto R = ratio_R(b, Region::right, 1e-6);
  for (double t : {2.5, 3.0, 3.5, 4.0}) {
    const auto j = std::size_t(std::llround(t / b.dt));
    const double N = numerator_N(evolve_at(modes, kBarrier.d, b.times[j]), 1.0);
    const double dp = b.region3.dP[j];
    EXPECT_NEAR(R[j] * dp * dp, N, 0.1 * std::abs(N)) << t;
  }
}

TEST(Observables, RatioVanishesWithoutField) {
  const auto R = ratio_R(bundle(0.0), Region::right, 1e-6);
  std::size_t defined = 0;
  for (double r : R)
    if (std::isfinite(r)) {
      EXPECT_LT(std::abs(r), 1e-12);
      ++defined;
    }
  EXPECT_GT(defined, 100u);
}

TEST(Observables, NarrowWindowIsDiagnosed) {
  const auto modes = make_modes(0.0, grid(), kBarrier, kPacket);
  DirectOptions opt;
  opt.pad = 0.0;
  try {
    region_moments_direct(modes, 0.0, Region::left, opt);
    FAIL() << "expected window_too_narrow";
  } catch (const Error& e) {
    EXPECT_EQ(e.invariant(), "observables.window_too_narrow");
  }
}
