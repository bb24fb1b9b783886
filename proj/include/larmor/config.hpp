#pragma once

// Run configuration: flat `key = value` text with `#` comments. Every key has a
// default; unknown keys and malformed values are rejected with a named invariant.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "larmor/scattering.hpp"
#include "larmor/error.hpp"
#include "larmor/observables.hpp"
#include "larmor/oracle.hpp"
#include "larmor/packet.hpp"

namespace larmor {

/// Shortest text that parses back to exactly `x` (at most 17 significant digits).
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& key, const std::string& text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  if (b != e && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  require(ec == std::errc() && p == e, "config.number", "key '" + key + "': '" + text + "' is not a number");
  return v;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct RunConfig {
  // physics
  double m = 1.0, k0 = 10.0, d = 2.0;
  double delta = std::numbers::sqrt2, k_av = 9.9, y0 = -15.0;
  // clock
  double omega1 = 5e-4, omega2 = 1e-3;
  // numerics
  int n_k = 8192;
  double span_sigmas = 8.0;
  int panel_order = 16;
  double t_max = 300.0;
  double dt_sample = 0.005;
  double noise_floor = 1e-6;
  double eps_neg = 1e-4;
  double crosscheck_tol = 1e-5;
  // legacy
  double epsilon = 0.01;
  // oracle
  double oracle_y_min = -80.0, oracle_y_max = 80.0;
  int oracle_n_y = 16001;
  double oracle_dt = 2e-4, oracle_t_max = 6.0, oracle_sample = 0.01, oracle_omega = 1e-3;
  // stationary table
  double stationary_k_min = 0.5, stationary_k_max = 20.0;
  int stationary_n = 2000;
  // sweep
  std::string sweep_axis = "y0";
  std::vector<double> sweep_values = {-15.0, -20.0, -25.0};
  // outputs
  int series_stride = 4;  ///< write every n-th time sample to the CSV files
  std::string series_file = "series.csv", orders_file = "orders.csv", report_file = "report.txt",
              oracle_file = "oracle_series.csv", sweep_file = "sweep_summary.csv",
              stationary_file = "stationary.csv";

  BarrierSpec barrier() const { return {m, k0, d}; }
  PacketSpec packet() const { return {delta, k_av, y0}; }
  Numerics numerics() const {
    Numerics n;
    n.n_k = n_k;
    n.span_sigmas = span_sigmas;
    n.panel_order = panel_order;
    n.t_max = t_max;
    n.dt = dt_sample;
    n.noise_floor = noise_floor;
    n.eps_neg = eps_neg;
    n.crosscheck_tol = crosscheck_tol;
    return n;
  }
  oracle::GridSpec oracle_grid() const {
    return {oracle_y_min, oracle_y_max, std::size_t(std::max(oracle_n_y, 0)), oracle_dt};
  }

  /// Ordered (key, value-as-text) pairs; the single source of truth for names.
  std::vector<std::pair<std::string, std::string>> entries() const {
    auto D = format_double;
    auto N = [](int v) { return std::to_string(v); };
    std::string vals;
    for (std::size_t i = 0; i < sweep_values.size(); ++i) vals += (i ? "," : "") + D(sweep_values[i]);
    return {{"m", D(m)},
            {"k0", D(k0)},
            {"d", D(d)},
            {"delta", D(delta)},
            {"k_av", D(k_av)},
            {"y0", D(y0)},
            {"omega1", D(omega1)},
            {"omega2", D(omega2)},
            {"n_k", N(n_k)},
            {"span_sigmas", D(span_sigmas)},
            {"panel_order", N(panel_order)},
            {"t_max", D(t_max)},
            {"dt_sample", D(dt_sample)},
            {"noise_floor", D(noise_floor)},
            {"eps_neg", D(eps_neg)},
            {"crosscheck_tol", D(crosscheck_tol)},
            {"epsilon", D(epsilon)},
            {"oracle_y_min", D(oracle_y_min)},
            {"oracle_y_max", D(oracle_y_max)},
            {"oracle_n_y", N(oracle_n_y)},
            {"oracle_dt", D(oracle_dt)},
            {"oracle_t_max", D(oracle_t_max)},
            {"oracle_sample", D(oracle_sample)},
            {"oracle_omega", D(oracle_omega)},
            {"stationary_k_min", D(stationary_k_min)},
            {"stationary_k_max", D(stationary_k_max)},
            {"stationary_n", N(stationary_n)},
            {"sweep_axis", sweep_axis},
            {"sweep_values", vals},
            {"series_stride", N(series_stride)},
            {"series_file", series_file},
            {"orders_file", orders_file},
            {"report_file", report_file},
            {"oracle_file", oracle_file},
            {"sweep_file", sweep_file},
            {"stationary_file", stationary_file}};
  }

  void set(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    auto D = [&](double& x) { x = parse_double(key, v); };
    auto N = [&](int& x) {
      const double f = parse_double(key, v);
      require(f == std::floor(f) && std::abs(f) < 2e9, "config.integer", "key '" + key + "' needs an integer");
      x = int(f);
    };
    static const std::map<std::string, double RunConfig::*> doubles = {
        {"m", &RunConfig::m},
        {"k0", &RunConfig::k0},
        {"d", &RunConfig::d},
        {"delta", &RunConfig::delta},
        {"k_av", &RunConfig::k_av},
        {"y0", &RunConfig::y0},
        {"omega1", &RunConfig::omega1},
        {"omega2", &RunConfig::omega2},
        {"span_sigmas", &RunConfig::span_sigmas},
        {"t_max", &RunConfig::t_max},
        {"dt_sample", &RunConfig::dt_sample},
        {"noise_floor", &RunConfig::noise_floor},
        {"eps_neg", &RunConfig::eps_neg},
        {"crosscheck_tol", &RunConfig::crosscheck_tol},
        {"epsilon", &RunConfig::epsilon},
        {"oracle_y_min", &RunConfig::oracle_y_min},
        {"oracle_y_max", &RunConfig::oracle_y_max},
        {"oracle_dt", &RunConfig::oracle_dt},
        {"oracle_t_max", &RunConfig::oracle_t_max},
        {"oracle_sample", &RunConfig::oracle_sample},
        {"oracle_omega", &RunConfig::oracle_omega},
        {"stationary_k_min", &RunConfig::stationary_k_min},
        {"stationary_k_max", &RunConfig::stationary_k_max}};
    static const std::map<std::string, int RunConfig::*> ints = {{"n_k", &RunConfig::n_k},
                                                                 {"panel_order", &RunConfig::panel_order},
                                                                 {"oracle_n_y", &RunConfig::oracle_n_y},
                                                                 {"stationary_n", &RunConfig::stationary_n},
                                                                 {"series_stride", &RunConfig::series_stride}};
    static const std::map<std::string, std::string RunConfig::*> strings = {
        {"sweep_axis", &RunConfig::sweep_axis},     {"series_file", &RunConfig::series_file},
        {"orders_file", &RunConfig::orders_file},   {"report_file", &RunConfig::report_file},
        {"oracle_file", &RunConfig::oracle_file},   {"sweep_file", &RunConfig::sweep_file},
        {"stationary_file", &RunConfig::stationary_file}};
    if (auto it = doubles.find(key); it != doubles.end()) return D(this->*(it->second));
    if (auto it = ints.find(key); it != ints.end()) return N(this->*(it->second));
    if (auto it = strings.find(key); it != strings.end()) {
      this->*(it->second) = v;
      return;
    }
    if (key == "sweep_values") {
      sweep_values.clear();
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ',')) sweep_values.push_back(parse_double(key, trim(item)));
      return;
    }
    throw Error("config.unknown_key", "unknown key '" + key + "'");
  }

  /// Applies one `key=value` override.
  void apply_override(const std::string& kv) {
    const auto eq = kv.find('=');
    require(eq != std::string::npos, "config.syntax", "override '" + kv + "' is not key=value");
    set(trim(kv.substr(0, eq)), kv.substr(eq + 1));
  }

  /// Checks every cross-module invariant; the first violation is thrown.
  void validate() const {
    barrier().validate();
    packet().validate(barrier());
    numerics().validate();
    require(std::isfinite(omega1) && std::isfinite(omega2) && omega1 > 0.0 && omega2 > 0.0 &&
                omega1 <= 1e-3 && omega2 <= 1e-3,
            "clock.omega_range", "omega1, omega2 must lie in (0, 1e-3]");
    require(omega1 != omega2, "clock.distinct_omegas", "omega1 and omega2 must differ");
    require(epsilon > 0.0 && epsilon <= 0.1, "legacy.epsilon_range", "epsilon must lie in (0, 0.1]");
    require(series_stride >= 1, "config.series_stride", "series_stride must be >= 1");
    require(stationary_k_min > 0.0 && stationary_k_max > stationary_k_min && stationary_n >= 2,
            "stationary.k_range", "need 0 < stationary_k_min < stationary_k_max and stationary_n >= 2");
    require(sweep_axis == "y0" || sweep_axis == "delta" || sweep_axis == "k_av" || sweep_axis == "omega",
            "sweep.axis", "axis must be one of y0, delta, k_av, omega");
  }
};

inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, "config.syntax", "line " + std::to_string(lineno) + " is not key = value");
    c.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  require(bool(f), "config.readable", "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

inline std::string to_text(const RunConfig& c) {
  std::string out;
  for (const auto& [k, v] : c.entries()) out += k + " = " + v + "\n";
  return out;
}

}  // namespace larmor
