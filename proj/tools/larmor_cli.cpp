// Command-line front end: run, sweep, stationary, oracle.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "larmor/larmor.hpp"

namespace {

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  int threads = 1;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "config file of key = value lines");
  sub->add_option("--out", c.out_dir, "output directory")->capture_default_str();
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--set", c.overrides, "override a config key (key=value), repeatable");
}

larmor::RunConfig resolve(const Common& c) {
  larmor::RunConfig cfg = c.config_path.empty() ? larmor::RunConfig{} : larmor::load_config(c.config_path);
  for (const auto& kv : c.overrides) cfg.apply_override(kv);
  return cfg;
}

void print_times(const larmor::Report& r) {
  for (const char* k : {"tau_T_x", "tau_T_y", "tau_R_x", "tau_R_y", "tau_T_y_kspace", "T_total", "R_total"})
    std::printf("%-16s %.6f\n", k, r.number("times", k));
  std::printf("%-16s %.6f\n", "tau_T_legacy", r.number("legacy", "tau_T_legacy"));
  std::printf("%-16s %.6f\n", "tau_R_legacy", r.number("legacy", "tau_R_legacy"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Larmor-clock tunneling and reflection times for a Gaussian packet on a square barrier"};
  app.set_version_flag("--version", LARMOR_VERSION);
  app.require_subcommand(1);

  Common run_opts, sweep_opts, stat_opts, oracle_opts;
  auto* run = app.add_subcommand("run", "compute all times and write series.csv, orders.csv, report.txt");
  auto* sweep = app.add_subcommand("sweep", "repeat the run along one axis (sweep_axis, sweep_values)");
  auto* stat = app.add_subcommand("stationary", "tabulate stationary amplitudes over k");
  auto* orc = app.add_subcommand("oracle", "grid propagation cross-check, writes oracle_series.csv");
  add_common(run, run_opts);
  add_common(sweep, sweep_opts);
  add_common(stat, stat_opts);
  add_common(orc, oracle_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    namespace fs = std::filesystem;
    if (*run) {
      const auto cfg = resolve(run_opts);
      const auto res = larmor::run_experiment(cfg, run_opts.threads);
      larmor::write_run_artifacts(res, run_opts.out_dir);
      print_times(res.report);
    } else if (*sweep) {
      const auto cfg = resolve(sweep_opts);
      cfg.validate();
      const auto pts = larmor::run_sweep(cfg, sweep_opts.threads);
      larmor::write_sweep_artifacts(cfg, pts, sweep_opts.out_dir);
      std::cout << larmor::sweep_csv(cfg.sweep_axis, pts);
    } else if (*stat) {
      const auto cfg = resolve(stat_opts);
      fs::create_directories(stat_opts.out_dir);
      larmor::write_text_file((fs::path(stat_opts.out_dir) / cfg.stationary_file).string(),
                              larmor::stationary_csv(cfg));
    } else if (*orc) {
      const auto cfg = resolve(oracle_opts);
      const auto runs = larmor::run_oracle(cfg, oracle_opts.threads);
      fs::create_directories(oracle_opts.out_dir);
      larmor::write_text_file((fs::path(oracle_opts.out_dir) / cfg.oracle_file).string(), larmor::oracle_csv(runs));
      for (const auto& r : runs)
        std::printf("omega %.17g: max norm drift %.3e, max edge density %.3e\n", r.omega, r.max_norm_drift,
                    r.max_edge_density);
    }
  } catch (const larmor::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", e.invariant().c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
