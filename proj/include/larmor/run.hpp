#pragma once

// End-to-end orchestration behind the command-line subcommands: builds the
// omega bundles, extracts the clock orders, computes every time and
// diagnostic, and writes the CSV and report artifacts.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "larmor/clock.hpp"
#include "larmor/config.hpp"
#include "larmor/legacy.hpp"
#include "larmor/observables.hpp"
#include "larmor/oracle.hpp"
#include "larmor/report.hpp"

#ifndef LARMOR_VERSION
#define LARMOR_VERSION "1.0.0"
#endif

namespace larmor {

/// Runs fn(0..n-1) on up to `threads` workers; the first exception is rethrown.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::size_t(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

/// Summary of the scale-free ratio R / (omega tau_y)^2 over one region.
struct RatioSummary {
  double t_below_0p1 = std::nan("");   ///< earliest t after which the ratio stays < 0.1
  double t_below_0p01 = std::nan("");  ///< same for 0.01
  double max_after_2p0 = std::nan("");
  double max_after_2p7 = std::nan("");
  double raw_max_after_2p0 = std::nan("");  ///< max of omega2^2 (tau_y^2 - tau_x^2) for t >= 2
  double relation_residual = std::nan("");  ///< max relative mismatch of the rate form vs the order form
  std::size_t relation_points = 0;
};

inline RatioSummary summarize_ratio(const ClockOrders& o, const TimeSeriesBundle& b2, Region region,
                                    double noise_floor) {
  RatioSummary s;
  const auto norm = ratio_normalized(o, noise_floor);
  const auto raw = ratio_R(o, b2.omega, noise_floor);
  const auto direct = ratio_R(b2, region, noise_floor);
  auto stays_below = [&](double thr) {
    double t_last_bad = 0.0;
    for (std::size_t j = 0; j < norm.size(); ++j)
      if (std::isfinite(norm[j]) && std::abs(norm[j]) >= thr) t_last_bad = o.times[j] + o.dt;
    return t_last_bad;
  };
  auto max_after = [&](const std::vector<double>& v, double t0) {
    double m = std::nan("");
    for (std::size_t j = 0; j < v.size(); ++j)
      if (o.times[j] >= t0 - 1e-12 && std::isfinite(v[j])) m = std::isnan(m) ? std::abs(v[j]) : std::max(m, std::abs(v[j]));
    return m;
  };
  s.t_below_0p1 = stays_below(0.1);
  s.t_below_0p01 = stays_below(0.01);
  s.max_after_2p0 = max_after(norm, 2.0);
  s.max_after_2p7 = max_after(norm, 2.7);
  s.raw_max_after_2p0 = max_after(raw, 2.0);
  // Rate form (4 dNx^2 + 4 dNy^2 - dP^2)/dP^2 at omega2 against omega2^2 (tau_y^2 - tau_x^2).
  // The rate form carries an O(omega^4 tau^4) remainder, so the comparison is
  // made only where that estimate is below 1 % of the second-order signal.
  const auto ty = tau_y_of_t(o, noise_floor);
  const double w2 = b2.omega * b2.omega;
  double worst = 0.0;
  for (std::size_t j = 0; j < raw.size(); ++j) {
    if (!std::isfinite(raw[j]) || !std::isfinite(direct[j])) continue;
    const double signal = std::abs(raw[j]), remainder = w2 * w2 * std::pow(ty[j], 4);
    if (!(remainder < 0.01 * signal)) continue;
    worst = std::max(worst, std::abs(direct[j] - raw[j]) / signal);
    ++s.relation_points;
  }
  if (s.relation_points > 0) s.relation_residual = worst;
  return s;
}

struct RegionTimes {
  bool present = false;
  ClockOrders orders;
  ClockTimeX x;
  ClockTimeY y;
  TauZ z;
  RatioSummary ratio;
};

struct RunResult {
  RunConfig config;
  std::vector<TimeSeriesBundle> bundles;  ///< omega = 0, omega1, omega2
  RegionTimes transmitted, reflected;
  KspaceTimes kspace;
  LegacyTimes legacy;
  double T_total = 0.0, R_total = 0.0;
  Report report;
};

inline void echo_config(Report& r, const RunConfig& c) {
  static const std::vector<std::string> ints = {"n_k", "panel_order", "oracle_n_y", "stationary_n",
                                                "series_stride"};
  for (const auto& [k, v] : c.entries()) {
    const bool is_string = k.find("file") != std::string::npos || k == "sweep_axis" || k == "sweep_values";
    if (is_string)
      r.set("config", k, v);
    else if (std::find(ints.begin(), ints.end(), k) != ints.end())
      r.set("config", k, std::int64_t(std::stoll(v)));
    else
      r.set("config", k, parse_double(k, v));
  }
}

inline Report build_report(const RunResult& res) {
  Report r;
  r.set("meta", "version", LARMOR_VERSION);
  r.set("meta", "program", "larmor");

  const auto& T = res.transmitted;
  const auto& R = res.reflected;
  const double nan = std::nan("");
  r.set("times", "tau_T_x", T.present ? T.x.tau : nan);
  r.set("times", "tau_T_y", T.present ? T.y.tau : nan);
  r.set("times", "tau_R_x", R.present ? R.x.tau : nan);
  r.set("times", "tau_R_y", R.present ? R.y.tau : nan);
  r.set("times", "tau_T_y_kspace", res.kspace.tau_T_y);
  r.set("times", "tau_R_y_kspace", res.kspace.tau_R_y);
  r.set("times", "tau_T_y_integral", T.present ? T.y.tau_integral : nan);
  r.set("times", "tau_R_y_integral", R.present ? R.y.tau_integral : nan);
  r.set("times", "T_total", res.T_total);
  r.set("times", "R_total", res.R_total);
  r.set("times", "transmission_times_present", T.present);
  r.set("times", "reflection_times_present", R.present);

  const auto& L = res.legacy;
  r.set("legacy", "epsilon", L.epsilon);
  r.set("legacy", "tau_D", L.tau_D);
  r.set("legacy", "tau_eps", L.tau_eps);
  r.set("legacy", "t1", L.t1);
  r.set("legacy", "t3", L.t3);
  r.set("legacy", "tau_T_legacy", L.tau_T_legacy);
  r.set("legacy", "tau_R_legacy", L.tau_R_legacy);
  r.set("legacy", "clipped_weight_T", L.clipped_T);
  r.set("legacy", "clipped_weight_R", L.clipped_R);
  {
    const double tT = T.present ? T.y.tau : 0.0, tR = R.present ? R.y.tau : 0.0;
    const double sum = res.T_total * tT + res.R_total * tR;
    r.set("legacy", "decomposition_T_tauT_plus_R_tauR", sum);
    r.set("legacy", "decomposition_relative_residual", L.tau_D > 0.0 ? std::abs(sum - L.tau_D) / L.tau_D : nan);
  }

  auto region_diag = [&](const std::string& tag, const RegionTimes& rt) {
    const std::string s = "diagnostics." + tag;
    if (!rt.present) {
      r.set(s, "present", false);
      return;
    }
    r.set(s, "present", true);
    r.set(s, "clamped_weight_x", rt.x.clamped_weight);
    r.set(s, "excluded_weight_y", rt.y.excluded_weight);
    r.set(s, "tau_y_endpoint_minus_integral", rt.y.tau - rt.y.tau_integral);
    r.set(s, "max_order_mismatch", rt.orders.max_order_mismatch);
    r.set(s, "omega_too_large", rt.orders.omega_too_large);
    r.set(s, "tau_z", rt.z.tau_z);
    r.set(s, "tau_z_relation_residual", rt.z.relation_residual);
    r.set(s, "buttiker_relation_holds", rt.z.buttiker_relation_holds);
    r.set(s, "ratio_t_below_0p1", rt.ratio.t_below_0p1);
    r.set(s, "ratio_t_below_0p01", rt.ratio.t_below_0p01);
    r.set(s, "ratio_max_after_2p0", rt.ratio.max_after_2p0);
    r.set(s, "ratio_max_after_2p7", rt.ratio.max_after_2p7);
    r.set(s, "ratio_raw_max_after_2p0", rt.ratio.raw_max_after_2p0);
    r.set(s, "ratio_relation_residual", rt.ratio.relation_residual);
    r.set(s, "ratio_relation_points", std::int64_t(rt.ratio.relation_points));
  };
  region_diag("transmitted", T);
  region_diag("reflected", R);

  double flux = 0.0, unit = 0.0, p2_end = 0.0;
  for (const auto& b : res.bundles) {
    flux = std::max(flux, b.max_flux_residual());
    unit = std::max(unit, b.max_unitarity_residual());
    p2_end = std::max(p2_end, std::abs(b.P2.back()));
  }
  r.set("diagnostics", "max_flux_residual", flux);
  r.set("diagnostics", "max_unitarity_residual", unit);
  r.set("diagnostics", "P2_final", p2_end);
  r.set("diagnostics", "spin_phase_sign", kSpinPhaseSign);
  r.set("diagnostics", "zeeman_convention", "psi_plus sees V0 - omega/2, psi_minus sees V0 + omega/2");
  r.set("diagnostics", "kspace_mapping", "tau = 2 Im[D* dD_plus/domega] / |D|^2 with dD_plus/domega = -dD/dV / 2");
  r.set("diagnostics", "ratio_form", "R / (omega tau_y)^2 = 1 - tau_x^2 / tau_y^2");
  r.set("diagnostics", "p0_reading", "p0 is the zeroth order of the region probability");

  echo_config(r, res.config);
  return r;
}

inline RegionTimes region_times(const RunResult& res, Region region, const Numerics& num) {
  RegionTimes rt;
  rt.present = true;
  rt.orders = extract_orders(res.bundles[0], res.bundles[1], res.bundles[2], region, {});
  rt.x = clock_time_x(rt.orders, num.noise_floor, num.eps_neg);
  rt.y = clock_time_y(rt.orders, num.noise_floor);
  rt.z = tau_z_diagnostic(rt.orders, rt.x.tau, rt.y.tau);
  rt.ratio = summarize_ratio(rt.orders, res.bundles[2], region, num.noise_floor);
  return rt;
}

/// The `run` subcommand without file output.
inline RunResult run_experiment(const RunConfig& cfg, int threads = 1) {
  cfg.validate();
  RunResult res;
  res.config = cfg;
  const auto barrier = cfg.barrier();
  const auto packet = cfg.packet();
  const auto num = cfg.numerics();
  const auto grid = build_kgrid(packet, num.n_k, num.span_sigmas, num.panel_order);

  const double omegas[3] = {0.0, cfg.omega1, cfg.omega2};
  res.bundles.resize(3);
  parallel_for(3, threads, [&](std::size_t i) { res.bundles[i] = build_timeseries(omegas[i], barrier, packet, grid, num); });

  const auto& b0 = res.bundles[0];
  res.T_total = b0.region3.P.back();
  res.R_total = b0.region1.P.back();
  require(std::abs(res.T_total + res.R_total - 1.0) <= 1e-5, "clock.completeness",
          "T + R = " + format_double(res.T_total + res.R_total) + " (increase t_max)");
  require(b0.max_unitarity_residual() <= 1e-6, "observables.unitarity",
          "max |P1 + P2 + P3 - 1| = " + format_double(b0.max_unitarity_residual()));

  if (res.T_total >= 1e-4) res.transmitted = region_times(res, Region::right, num);
  if (res.R_total >= 1e-4) res.reflected = region_times(res, Region::left, num);
  for (const RegionTimes* rt : {&res.transmitted, &res.reflected})
    if (rt->present)
      require(rt->x.tau >= 0.0 && rt->y.tau >= 0.0 && std::isfinite(rt->x.tau) && std::isfinite(rt->y.tau),
              "clock.times_nonnegative", "a clock time is negative or not finite");

  res.kspace = time_y_kspace(grid, barrier, packet);
  res.legacy = legacy_times(b0, cfg.epsilon);
  res.report = build_report(res);
  return res;
}

// ---------------------------------------------------------------------------
// CSV writers

inline const char* kSeriesHeader = "t,omega,P1,P2,P3,Nx1,Ny1,Nz1,Nx3,Ny3,Nz3\n";

inline std::string series_csv(const std::vector<TimeSeriesBundle>& bundles, int stride) {
  std::string out = kSeriesHeader;
  auto D = format_double;
  for (const auto& b : bundles)
    for (std::size_t j = 0; j < b.size(); j += std::size_t(stride)) {
      out += D(b.times[j]) + "," + D(b.omega) + "," + D(b.region1.P[j]) + "," + D(b.P2[j]) + "," +
             D(b.region3.P[j]) + "," + D(b.region1.Nx[j]) + "," + D(b.region1.Ny[j]) + "," + D(b.region1.Nz[j]) +
             "," + D(b.region3.Nx[j]) + "," + D(b.region3.Ny[j]) + "," + D(b.region3.Nz[j]) + "\n";
    }
  return out;
}

inline std::string orders_csv(const RunResult& res, int stride, double noise_floor, double eps_neg) {
  std::string out = "t,region,p0,p2,nx2,ny1,tau_x,tau_y\n";
  auto D = format_double;
  for (const RegionTimes* rt : {&res.reflected, &res.transmitted}) {
    if (!rt->present) continue;
    const auto& o = rt->orders;
    const auto tx = tau_x_of_t(o, noise_floor, eps_neg);
    const auto ty = tau_y_of_t(o, noise_floor);
    const std::string reg = std::to_string(int(o.region));
    for (std::size_t j = 0; j < o.size(); j += std::size_t(stride))
      out += D(o.times[j]) + "," + reg + "," + D(o.p0[j]) + "," + D(o.p2[j]) + "," + D(o.nx2[j]) + "," +
             D(o.ny1[j]) + "," + D(tx.tau[j]) + "," + D(ty[j]) + "\n";
  }
  return out;
}

inline void write_run_artifacts(const RunResult& res, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& c = res.config;
  write_text_file((dir / c.series_file).string(), series_csv(res.bundles, c.series_stride));
  write_text_file((dir / c.orders_file).string(), orders_csv(res, c.series_stride, c.noise_floor, c.eps_neg));
  write_text_file((dir / c.report_file).string(), res.report.to_text());
}

// ---------------------------------------------------------------------------
// sweep

struct SweepPoint {
  double value = 0.0;
  bool ok = false;
  std::string error;
  RunConfig config;
  Report report;
};

/// Config for one sweep value. For y0 the horizon grows by the extra flight
/// time |y0 - y0_ref| / (k_av / m); for omega, omega2 = value and omega1 = value / 2.
inline RunConfig sweep_config(const RunConfig& base, const std::string& axis, double value) {
  RunConfig c = base;
  if (axis == "y0") {
    c.y0 = value;
    c.t_max = base.t_max + std::abs(value - base.y0) / (base.k_av / base.m);
    c.t_max = std::ceil(c.t_max / c.dt_sample - 1e-9) * c.dt_sample;
  } else if (axis == "delta") {
    c.delta = value;
  } else if (axis == "k_av") {
    c.k_av = value;
  } else if (axis == "omega") {
    c.omega2 = value;
    c.omega1 = 0.5 * value;
  } else {
    throw Error("sweep.axis", "unknown axis '" + axis + "'");
  }
  return c;
}

inline std::vector<SweepPoint> run_sweep(const RunConfig& base, int threads = 1) {
  require(!base.sweep_values.empty(), "sweep.values", "no sweep values");
  std::vector<SweepPoint> pts(base.sweep_values.size());
  parallel_for(pts.size(), threads, [&](std::size_t i) {
    auto& p = pts[i];
    p.value = base.sweep_values[i];
    try {
      p.config = sweep_config(base, base.sweep_axis, p.value);
      p.report = run_experiment(p.config, 1).report;
      p.ok = true;
    } catch (const std::exception& e) {
      p.error = e.what();
    }
  });
  return pts;
}

inline std::string sweep_csv(const std::string& axis, const std::vector<SweepPoint>& pts) {
  std::string out = "axis,value,status,tau_T_x,tau_T_y,tau_R_x,tau_R_y,tau_T_y_kspace,error\n";
  auto D = format_double;
  for (const auto& p : pts) {
    out += axis + "," + D(p.value) + "," + (p.ok ? "ok" : "failed");
    for (const char* k : {"tau_T_x", "tau_T_y", "tau_R_x", "tau_R_y", "tau_T_y_kspace"})
      out += "," + (p.ok ? D(p.report.number("times", k)) : std::string("nan"));
    std::string err = p.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out += "," + err + "\n";
  }
  return out;
}

inline void write_sweep_artifacts(const RunConfig& base, const std::vector<SweepPoint>& pts,
                                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pts[i].ok) continue;
    const auto sub = dir / ("sweep_" + base.sweep_axis + "_" + std::to_string(i));
    std::filesystem::create_directories(sub);
    write_text_file((sub / base.report_file).string(), pts[i].report.to_text());
  }
  write_text_file((dir / base.sweep_file).string(), sweep_csv(base.sweep_axis, pts));
}

// ---------------------------------------------------------------------------
// stationary

inline std::string stationary_csv(const RunConfig& c) {
  c.barrier().validate();
  require(c.stationary_k_min > 0.0 && c.stationary_k_max > c.stationary_k_min && c.stationary_n >= 2,
          "stationary.k_range", "need 0 < k_min < k_max and at least two rows");
  const auto b = c.barrier();
  const double V = b.height();
  std::string out = "k,re_D,im_D,abs_D2,im_Dconj_dDdV,tau_y_mono\n";
  auto D = format_double;
  for (int i = 0; i < c.stationary_n; ++i) {
    const double k = c.stationary_k_min + (c.stationary_k_max - c.stationary_k_min) * i / (c.stationary_n - 1);
    const auto st = scattering_state(k, V, b);
    const auto der = amplitude_derivatives(k, V, b);
    const double im = std::imag(std::conj(st.D) * der.dD_dV);
    out += D(k) + "," + D(st.D.real()) + "," + D(st.D.imag()) + "," + D(std::norm(st.D)) + "," + D(im) + "," +
           D(-im / std::norm(st.D)) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// oracle

inline std::vector<oracle::OracleResult> run_oracle(const RunConfig& c, int threads = 1) {
  c.barrier().validate();
  c.packet().validate(c.barrier());
  const auto g = c.oracle_grid();
  const auto init = oracle::initial_field(g, c.packet());
  const double omegas[2] = {0.0, c.oracle_omega};
  std::vector<oracle::OracleResult> out(2);
  parallel_for(2, threads, [&](std::size_t i) {
    out[i] = oracle::propagate(init, omegas[i], g, c.barrier(), c.oracle_t_max, {.sample_every = c.oracle_sample});
  });
  return out;
}

inline std::string oracle_csv(const std::vector<oracle::OracleResult>& runs) {
  std::string out = kSeriesHeader;
  auto D = format_double;
  for (const auto& r : runs)
    for (const auto& s : r.samples)
      out += D(s.t) + "," + D(r.omega) + "," + D(s.region1.P) + "," + D(s.region2.P) + "," + D(s.region3.P) + "," +
             D(s.region1.Nx) + "," + D(s.region1.Ny) + "," + D(s.region1.Nz) + "," + D(s.region3.Nx) + "," +
             D(s.region3.Ny) + "," + D(s.region3.Nz) + "\n";
  return out;
}

}  // namespace larmor
