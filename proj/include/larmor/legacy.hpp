#pragma once

// Probability-based times: dwell time, the interaction-start estimate tau_eps,
// and the transmission/reflection times built from the approach of P3 (P1) to
// its final value.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "larmor/error.hpp"
#include "larmor/observables.hpp"
#include "larmor/quadrature.hpp"

namespace larmor {

/// int_{t_lo}^{t_max} P2 dt on a uniform grid (trapezoid).
inline double dwell_time(std::span<const double> P2, double dt, double t_lo = 0.0,
                         double completeness_tol = 1e-5) {
  require(!P2.empty(), "legacy.nonempty", "empty P2 series");
  require(std::abs(P2.back()) < completeness_tol, "legacy.incomplete",
          "P2(t_max) = " + std::to_string(P2.back()) + " exceeds completeness tolerance");
  const std::size_t j0 = std::min(P2.size() - 1, std::size_t(std::ceil(t_lo / dt - 1e-9)));
  double head = 0.0;
  if (j0 > 0) {
    // partial interval [t_lo, t_j0]
    const double frac = j0 - t_lo / dt;
    const double at_lo = P2[j0] + (P2[j0 - 1] - P2[j0]) * frac;
    head = 0.5 * (at_lo + P2[j0]) * frac * dt;
  }
  return head + trapezoid(P2.subspan(j0), dt);
}

inline double dwell_time(const TimeSeriesBundle& b, double completeness_tol = 1e-5) {
  return dwell_time(b.P2, b.dt, 0.0, completeness_tol);
}

/// Smallest grid time tau_eps with int_0^{tau_eps} P2 dt >= eps * tau_D.
inline double epsilon_start(std::span<const double> P2, double dt, double eps, double tau_D) {
  require(eps > 0.0 && eps <= 0.1, "legacy.epsilon_range", "epsilon must lie in (0, 0.1]");
  const double target = eps * tau_D;
  double acc = 0.0;
  for (std::size_t j = 1; j < P2.size(); ++j) {
    acc += 0.5 * dt * (P2[j - 1] + P2[j]);
    if (acc >= target) return j * dt;
  }
  return (P2.size() - 1) * dt;
}

struct ClippedIntegral {
  double value = 0.0;
  double clipped_weight = 0.0;  ///< int |integrand - clip(integrand)|
};

namespace detail {

/// int_{t_lo}^{t_max} clip(1 - P/final, 0, 1) dt with linear interpolation of
/// the first partial interval.
inline ClippedIntegral approach_integral(std::span<const double> P, double dt, double t_lo, double final_value) {
  const std::size_t n = P.size();
  require(n >= 2, "legacy.nonempty", "series too short");
  std::vector<double> f(n), lost(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double raw = 1.0 - P[j] / final_value;
    f[j] = std::clamp(raw, 0.0, 1.0);
    lost[j] = std::abs(raw - f[j]);
  }
  auto integrate = [&](const std::vector<double>& g) {
    const double x = std::clamp(t_lo / dt, 0.0, double(n - 1));
    const std::size_t j0 = std::min(n - 1, std::size_t(std::ceil(x - 1e-9)));
    double head = 0.0;
    if (j0 > 0 && j0 - x > 0.0) {
      const double frac = j0 - x;
      const double at_lo = g[j0] + (g[j0 - 1] - g[j0]) * frac;
      head = 0.5 * (at_lo + g[j0]) * frac * dt;
    }
    return head + trapezoid(std::span<const double>(g).subspan(j0), dt);
  };
  return {integrate(f), integrate(lost)};
}

}  // namespace detail

/// int_{t3}^{t_max} [1 - P3(t)/T] dt with T = P3(t_max).
inline ClippedIntegral legacy_transmission_time(std::span<const double> P3, double dt, double t3) {
  const double T = P3.back();
  require(T >= 1e-4, "legacy.T_too_small", "transmitted probability below 1e-4");
  return detail::approach_integral(P3, dt, t3, T);
}

/// int_{t1}^{t_max} [1 - P1(t)/R] dt with R = P1(t_max); integrand clipped to [0, 1].
inline ClippedIntegral legacy_reflection_time(std::span<const double> P1, double dt, double t1) {
  const double R = P1.back();
  require(R >= 1e-4, "legacy.R_too_small", "reflected probability below 1e-4");
  return detail::approach_integral(P1, dt, t1, R);
}

struct LegacyTimes {
  double epsilon = 0.01;
  double tau_D = 0.0;
  double tau_eps = 0.0;
  double t1 = 0.0, t3 = 0.0;
  bool has_T = false, has_R = false;
  double tau_T_legacy = std::nan(""), tau_R_legacy = std::nan("");
  double clipped_T = 0.0, clipped_R = 0.0;
};

/// All probability-based times from the omega = 0 bundle, with t1 = t3 = tau_eps.
inline LegacyTimes legacy_times(const TimeSeriesBundle& b, double epsilon = 0.01,
                                double completeness_tol = 1e-5) {
  LegacyTimes out;
  out.epsilon = epsilon;
  out.tau_D = dwell_time(b, completeness_tol);
  out.tau_eps = epsilon_start(b.P2, b.dt, epsilon, out.tau_D);
  out.t1 = out.t3 = out.tau_eps;
  if (b.region3.P.back() >= 1e-4) {
    const auto r = legacy_transmission_time(b.region3.P, b.dt, out.t3);
    out.has_T = true;
    out.tau_T_legacy = r.value;
    out.clipped_T = r.clipped_weight;
  }
  if (b.region1.P.back() >= 1e-4) {
    const auto r = legacy_reflection_time(b.region1.P, b.dt, out.t1);
    out.has_R = true;
    out.tau_R_legacy = r.value;
    out.clipped_R = r.clipped_weight;
  }
  return out;
}

}  // namespace larmor
