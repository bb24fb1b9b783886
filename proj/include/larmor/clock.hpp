#pragma once

// Larmor-clock readout. The spin-weighted norms of a region are expanded in
// the Larmor frequency,
//
//   P   = p0 + w^2 p2,     N_x = p0/2 + w^2 nx2,     N_y = w ny1,     N_z = w nz1,
//
// and the orders are recovered from bundles at w = 0, w1, w2 by Richardson
// elimination of the next term of each parity. The dwell time tau(t) of the
// flux emerging at time t then follows from either
//
//   dny1/dt = -1/2 tau dp0/dt                       (y prescription)
//   dnx2/dt = 1/2 [dp2/dt - 1/2 tau^2 dp0/dt]       (x prescription)

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "larmor/scattering.hpp"
#include "larmor/error.hpp"
#include "larmor/observables.hpp"
#include "larmor/packet.hpp"
#include "larmor/quadrature.hpp"

namespace larmor {

struct ClockOrders {
  Region region = Region::right;
  double omega1 = 0.0, omega2 = 0.0;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<double> p0, p2, nx2, ny1, nz1;
  std::vector<double> dp0, dp2, dnx2, dny1, dnz1;
  bool omega_too_large = false;
  double max_order_mismatch = 0.0;  ///< worst relative disagreement of the two single-omega estimates

  std::size_t size() const { return times.size(); }
};

/// Richardson combination of two estimates f(w) = f0 + c w^2 taken at w1, w2.
inline double richardson(double f1, double w1, double f2, double w2) {
  const double a = w1 * w1, b = w2 * w2;
  return (b * f1 - a * f2) / (b - a);
}

struct OrderOptions {
  double omega_max = 1e-3;
  double mismatch_tol = 0.01;
  double order_floor = 1e-3;  ///< mismatch is only judged where |order| > order_floor * max|order|
};

inline ClockOrders extract_orders(const TimeSeriesBundle& b0, const TimeSeriesBundle& bA,
                                  const TimeSeriesBundle& bB, Region region, const OrderOptions& opt = {}) {
  const double w1 = bA.omega, w2 = bB.omega;
  require(b0.omega == 0.0, "clock.zero_bundle", "first bundle must be at omega = 0");
  require(std::abs(w1) != std::abs(w2), "clock.distinct_omegas", "|omega1| and |omega2| must differ");
  require(w1 != 0.0 && w2 != 0.0 && std::abs(w1) <= opt.omega_max && std::abs(w2) <= opt.omega_max,
          "clock.omega_range", "omegas must lie in (0, omega_max]");
  require(b0.size() == bA.size() && b0.size() == bB.size() && b0.dt == bA.dt && b0.dt == bB.dt,
          "clock.same_grid", "bundles must share the time grid");

  const auto& s0 = b0.region(region);
  const auto& sA = bA.region(region);
  const auto& sB = bB.region(region);
  const std::size_t n = b0.size();

  ClockOrders o;
  o.region = region;
  o.omega1 = w1;
  o.omega2 = w2;
  o.dt = b0.dt;
  o.times = b0.times;
  o.p0 = s0.P;
  o.dp0 = s0.dP;
  for (auto* v : {&o.p2, &o.nx2, &o.ny1, &o.nz1, &o.dp2, &o.dnx2, &o.dny1, &o.dnz1}) v->resize(n);

  // single-omega estimates of the rate orders, kept for the consistency check
  struct Track {
    std::vector<double> a, b;
  };
  Track tp2{std::vector<double>(n), std::vector<double>(n)};
  Track tnx2 = tp2, tny1 = tp2;

  const double a2 = w1 * w1, b2 = w2 * w2;
  auto even = [&](double x0, double xa, double xb, Track* t, std::size_t j) {
    const double fa = (xa - x0) / a2, fb = (xb - x0) / b2;
    if (t) t->a[j] = fa, t->b[j] = fb;
    return richardson(fa, w1, fb, w2);
  };
  auto odd = [&](double xa, double xb, Track* t, std::size_t j) {
    const double fa = xa / w1, fb = xb / w2;
    if (t) t->a[j] = fa, t->b[j] = fb;
    return richardson(fa, w1, fb, w2);
  };
  for (std::size_t j = 0; j < n; ++j) {
    o.p2[j] = even(s0.P[j], sA.P[j], sB.P[j], nullptr, j);
    o.nx2[j] = even(s0.Nx[j], sA.Nx[j], sB.Nx[j], nullptr, j);
    o.ny1[j] = odd(sA.Ny[j], sB.Ny[j], nullptr, j);
    o.nz1[j] = odd(sA.Nz[j], sB.Nz[j], nullptr, j);
    o.dp2[j] = even(s0.dP[j], sA.dP[j], sB.dP[j], &tp2, j);
    o.dnx2[j] = even(s0.dNx[j], sA.dNx[j], sB.dNx[j], &tnx2, j);
    o.dny1[j] = odd(sA.dNy[j], sB.dNy[j], &tny1, j);
    o.dnz1[j] = odd(sA.dNz[j], sB.dNz[j], nullptr, j);
  }

  auto judge = [&](const std::vector<double>& order, const Track& t) {
    double peak = 0.0;
    for (double v : order) peak = std::max(peak, std::abs(v));
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(order[j]) <= opt.order_floor * peak) continue;
      o.max_order_mismatch = std::max(o.max_order_mismatch, std::abs(t.a[j] - t.b[j]) / std::abs(order[j]));
    }
  };
  judge(o.dp2, tp2);
  judge(o.dnx2, tnx2);
  judge(o.dny1, tny1);
  o.omega_too_large = o.max_order_mismatch > opt.mismatch_tol;
  return o;
}

namespace detail {

inline std::vector<bool> above_floor(const std::vector<double>& rate, double floor) {
  const double peak = *std::max_element(rate.begin(), rate.end());
  std::vector<bool> keep(rate.size());
  for (std::size_t j = 0; j < rate.size(); ++j) keep[j] = rate[j] > floor * peak;
  return keep;
}

inline double radicand(const ClockOrders& o, std::size_t j) { return 2.0 * (o.dp2[j] - 2.0 * o.dnx2[j]) / o.dp0[j]; }

}  // namespace detail

/// tau_y(t) = -2 (dny1/dt) / (dp0/dt); NaN below the noise floor.
inline std::vector<double> tau_y_of_t(const ClockOrders& o, double noise_floor = 1e-6) {
  const auto keep = detail::above_floor(o.dp0, noise_floor);
  std::vector<double> tau(o.size(), std::nan(""));
  for (std::size_t j = 0; j < o.size(); ++j)
    if (keep[j]) tau[j] = -2.0 * o.dny1[j] / o.dp0[j];
  return tau;
}

struct TauXSeries {
  std::vector<double> tau;       ///< NaN below the noise floor
  double clamped_weight = 0.0;   ///< int sqrt(-2 dp0 (dp2 - 2 dnx2)) over clamped samples
  double total_weight = 0.0;     ///< int sqrt(2 dp0 (dp2 - 2 dnx2)) over kept samples
  std::size_t below_eps = 0;     ///< samples with radicand < -eps_neg * max radicand
};

/// tau_x(t) = sqrt(2 (dp2/dt - 2 dnx2/dt) / (dp0/dt)), negative radicands clamped to zero.
/// Throws `clock.negative_radicand` when the clamped weight exceeds 1e-3 of the total.
inline TauXSeries tau_x_of_t(const ClockOrders& o, double noise_floor = 1e-6, double eps_neg = 1e-4) {
  const auto keep = detail::above_floor(o.dp0, noise_floor);
  const std::size_t n = o.size();
  TauXSeries out;
  out.tau.assign(n, std::nan(""));
  double rad_max = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    if (keep[j]) rad_max = std::max(rad_max, detail::radicand(o, j));
  std::vector<double> pos(n, 0.0), neg(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!keep[j]) continue;
    const double r = detail::radicand(o, j);
    out.tau[j] = std::sqrt(std::max(0.0, r));
    if (r < -eps_neg * rad_max) ++out.below_eps;
    const double w = 2.0 * o.dp0[j] * (o.dp2[j] - 2.0 * o.dnx2[j]);
    (w >= 0.0 ? pos[j] : neg[j]) = std::sqrt(std::abs(w));
  }
  out.total_weight = trapezoid(pos, o.dt);
  out.clamped_weight = trapezoid(neg, o.dt);
  if (out.clamped_weight > 1e-3 * out.total_weight)
    throw Error("clock.negative_radicand", "clamped weight " + std::to_string(out.clamped_weight) +
                                               " exceeds 1e-3 of " + std::to_string(out.total_weight));
  return out;
}

struct ClockTimeX {
  double tau = 0.0;
  double clamped_weight = 0.0;  ///< relative to the total weight
};

/// (1/p0(inf)) int sqrt(2 dp0 (dp2 - 2 dnx2)) dt over samples above the noise floor.
inline ClockTimeX clock_time_x(const ClockOrders& o, double noise_floor = 1e-6, double eps_neg = 1e-4) {
  const auto tx = tau_x_of_t(o, noise_floor, eps_neg);
  ClockTimeX out;
  out.tau = tx.total_weight / o.p0.back();
  out.clamped_weight = tx.total_weight > 0.0 ? tx.clamped_weight / tx.total_weight : 0.0;
  return out;
}

struct ClockTimeY {
  double tau = 0.0;              ///< -2 ny1(t_max) / p0(t_max)
  double tau_integral = 0.0;     ///< int tau_y dp0 / p0(t_max) over samples above the noise floor
  double excluded_weight = 0.0;  ///< |endpoint - integral| carried by excluded samples
};

inline ClockTimeY clock_time_y(const ClockOrders& o, double noise_floor = 1e-6) {
  const auto keep = detail::above_floor(o.dp0, noise_floor);
  std::vector<double> kept(o.size(), 0.0), dropped(o.size(), 0.0);
  for (std::size_t j = 0; j < o.size(); ++j) (keep[j] ? kept[j] : dropped[j]) = -2.0 * o.dny1[j];
  ClockTimeY out;
  const double pinf = o.p0.back();
  out.tau = -2.0 * o.ny1.back() / pinf;
  out.tau_integral = trapezoid(kept, o.dt) / pinf;
  out.excluded_weight = std::abs(trapezoid(dropped, o.dt)) / pinf;
  return out;
}

/// Second-order coefficient of the identity ratio, R(t) / omega^2 = tau_y^2 - tau_x^2,
/// built from the orders. NaN below the noise floor.
inline std::vector<double> ratio_coefficient(const ClockOrders& o, double noise_floor = 1e-6) {
  const auto keep = detail::above_floor(o.dp0, noise_floor);
  std::vector<double> out(o.size(), std::nan(""));
  for (std::size_t j = 0; j < o.size(); ++j) {
    if (!keep[j]) continue;
    const double dp = o.dp0[j];
    out[j] = (4.0 * o.dny1[j] * o.dny1[j] - 2.0 * dp * (o.dp2[j] - 2.0 * o.dnx2[j])) / (dp * dp);
  }
  return out;
}

/// R(t) at second order for a given omega: omega^2 (tau_y^2 - tau_x^2).
inline std::vector<double> ratio_R(const ClockOrders& o, double omega, double noise_floor = 1e-6) {
  auto r = ratio_coefficient(o, noise_floor);
  for (auto& v : r) v *= omega * omega;
  return r;
}

/// Scale-free form R / (omega tau_y)^2 = 1 - tau_x^2 / tau_y^2.
inline std::vector<double> ratio_normalized(const ClockOrders& o, double noise_floor = 1e-6) {
  auto r = ratio_coefficient(o, noise_floor);
  const auto ty = tau_y_of_t(o, noise_floor);
  for (std::size_t j = 0; j < r.size(); ++j) r[j] = r[j] / (ty[j] * ty[j]);
  return r;
}

struct KspaceTimes {
  double tau_T_y = 0.0;  ///< transmission
  double tau_R_y = 0.0;  ///< reflection (same construction with A)
  double T = 0.0, R = 0.0;
};

/// Asymptotic y-clock times from the stationary amplitudes,
///
///   tau_T,y = 2 int |a|^2 Im[D^* dD_+/domega] dk / int |a|^2 |D|^2 dk,
///
/// with dD_+/domega = -1/2 dD/dV (spin-up sees V0 - omega/2), i.e.
/// tau_T,y = -int |a|^2 Im[D^* dD/dV] / int |a|^2 |D|^2. Independent of y0.
inline KspaceTimes time_y_kspace(const KGrid& grid, const BarrierSpec& barrier, const PacketSpec& packet) {
  const double V = barrier.height();
  double num_t = 0.0, den_t = 0.0, num_r = 0.0, den_r = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double k = grid.nodes[i];
    const double w = grid.weights[i] * std::norm(spectral_amplitude(k, packet));
    const auto st = scattering_state(k, V, barrier);
    const auto der = amplitude_derivatives(k, V, barrier);
    const cplx dDp = -0.5 * der.dD_dV, dAp = -0.5 * der.dA_dV;
    num_t += w * std::imag(std::conj(st.D) * dDp);
    den_t += w * std::norm(st.D);
    num_r += w * std::imag(std::conj(st.A) * dAp);
    den_r += w * std::norm(st.A);
    norm += w;
  }
  KspaceTimes out;
  out.tau_T_y = den_t > 0.0 ? 2.0 * num_t / den_t : std::nan("");
  out.tau_R_y = den_r > 0.0 ? 2.0 * num_r / den_r : std::nan("");
  out.T = den_t / norm;
  out.R = den_r / norm;
  return out;
}

/// Monochromatic y-clock time -Im[D^* dD/dV] / |D|^2 at one k.
inline double monochromatic_tau_y(double k, const BarrierSpec& barrier) {
  const double V = barrier.height();
  const auto st = scattering_state(k, V, barrier);
  const auto der = amplitude_derivatives(k, V, barrier);
  return -std::imag(std::conj(st.D) * der.dD_dV) / std::norm(st.D);
}

struct TauZ {
  double tau_z = 0.0;
  double relation_residual = 0.0;  ///< |tau_z^2 - tau_x^2 - tau_y^2| / (tau_x^2 + tau_y^2)
  bool buttiker_relation_holds = false;
};

/// tau_z = 2 |nz1(t_max)| / p0(t_max) and whether tau_z^2 = tau_x^2 + tau_y^2 within 5 %.
inline TauZ tau_z_diagnostic(const ClockOrders& o, double tau_x, double tau_y) {
  TauZ out;
  out.tau_z = 2.0 * std::abs(o.nz1.back()) / o.p0.back();
  const double sum = tau_x * tau_x + tau_y * tau_y;
  out.relation_residual = sum > 0.0 ? std::abs(out.tau_z * out.tau_z - sum) / sum : std::nan("");
  out.buttiker_relation_holds = sum > 0.0 && out.relation_residual <= 0.05;
  return out;
}

}  // namespace larmor
