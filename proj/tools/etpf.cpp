#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "etpf/acceptance.hpp"
#include "etpf/config.hpp"
#include "etpf/experiments.hpp"
#include "etpf/io.hpp"
#include "etpf/sim_engine.hpp"
#include "etpf/tradeoff.hpp"

namespace fs = std::filesystem;
using namespace etpf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitCriteriaFailed = 3;

struct Source {
  std::string preset;
  std::string config;
  std::vector<std::string> overrides;
  std::string out = ".";

  void attach(CLI::App* cmd) {
    auto* p = cmd->add_option("--preset", preset, "built-in preset name");
    auto* c = cmd->add_option("--config", config, "JSON config file");
    p->excludes(c);
    cmd->add_option("--override", overrides, "section.key=value (repeatable)");
    cmd->add_option("--out", out, "output directory");
  }

  Config load(const std::string& fallback) const {
    Config cfg = !config.empty() ? Config::load(config) : presets::get(preset.empty() ? fallback : preset);
    for (const auto& o : overrides) cfg.apply_override(o);
    return cfg;
  }

  std::string path(const std::string& file) const {
    fs::create_directories(out);
    return (fs::path(out) / file).string();
  }
};

void write_stream(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ostringstream os;
  body(os);
  io::write_file(path, os.str());
}

int cmd_simulate(const Source& src) {
  const Config cfg = src.load("example1");
  const Experiment ex = build_experiment(cfg);
  const SimTrace tr = run(ex.sim);
  const bool linear_rate = ex.sim.trigger.mode == TriggerMode::Linear;
  const DecayReport decay = decay_report(tr, linear_rate);
  const double mismatch = prediction_mismatch(tr, ex.sim.plant_delay);

  write_stream(src.path("trace.csv"), [&](std::ostream& os) { io::write_trace_csv(os, tr); });
  write_stream(src.path("events.csv"), [&](std::ostream& os) { io::write_events_csv(os, tr); });
  write_stream(src.path("deliveries.csv"), [&](std::ostream& os) { io::write_deliveries_csv(os, tr); });
  const std::string summary = io::summary_text(ex.name, tr, decay, mismatch);
  io::write_file(src.path("summary.txt"), summary);
  io::write_file(src.path("trace.gp"), io::trace_plot_script(tr.n, tr.m));
  io::write_file(src.path("config.json"), cfg.dump());
  std::cout << summary;
  return tr.diag.diverged ? kExitDiverged : kExitOk;
}

int cmd_heatmap(const Source& src, const std::vector<double>& dt, const std::vector<double>& dpsi, int n_ic,
                long long seed) {
  const Config cfg = src.load("heatmap-ex1");
  Experiment ex = build_experiment(cfg);
  if (!dt.empty()) ex.heatmap.delta_tau = dt;
  if (!dpsi.empty()) ex.heatmap.d_psi = dpsi;
  if (n_ic > 0) ex.heatmap.n_ic = static_cast<std::size_t>(n_ic);
  if (seed >= 0) ex.heatmap.seed = static_cast<std::uint64_t>(seed);
  const HeatmapResult hm = heatmap(ex.sim, ex.heatmap.delta_tau, ex.heatmap.d_psi, ex.heatmap.n_ic,
                                   ex.heatmap.seed, ex.heatmap.zero_initial_conditions);
  write_stream(src.path("heatmap.csv"), [&](std::ostream& os) { io::write_heatmap_csv(os, hm); });
  io::write_file(src.path("heatmap.gp"), io::heatmap_plot_script());
  std::size_t diverged = 0;
  for (const auto& c : hm.cells) diverged += c.diverged_runs;
  std::cout << "cells: " << hm.cells.size() << "\nruns per cell: " << ex.heatmap.n_ic
            << "\ndiverged runs: " << diverged << "\n";
  return kExitOk;
}

int cmd_tradeoff(const Source& src) {
  const Config cfg = src.load("tradeoff");
  const Experiment ex = build_experiment(cfg);
  const TradeoffConstants k = tradeoff_constants(ex);
  const TradeoffTables t = sweep(k, nu_grid(ex.tradeoff.nu_points), ex.tradeoff.lambdas);
  write_stream(src.path("tradeoff_nu.csv"), [&](std::ostream& os) { io::write_tradeoff_nu_csv(os, t); });
  write_stream(src.path("tradeoff_lambda.csv"),
               [&](std::ostream& os) { io::write_tradeoff_lambda_csv(os, t); });
  io::write_file(src.path("tradeoff.gp"), io::tradeoff_plot_script());
  std::cout << "a: " << io::fmt(k.a) << "\nc: " << io::fmt(k.c) << "\nlambda_max(P1): " << io::fmt(k.lam_max_P1)
            << "\n|P1 B|: " << io::fmt(k.PB1) << "\n|K|: " << io::fmt(k.K_norm) << "\n";
  for (const auto& o : t.by_lambda)
    std::cout << "lambda=" << io::fmt(o.lambda) << " nu*=" << io::fmt(o.nu) << (o.degenerate ? " degenerate" : "")
              << (o.boundary ? " boundary" : "") << "\n";
  return kExitOk;
}

int cmd_verify() {
  bool ok = true;
  acceptance::run_all([&](const acceptance::Result& r) {
    ok = ok && r.passed;
    std::cout << r.line() << std::endl;
  });
  return ok ? kExitOk : kExitCriteriaFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predictor-based event-triggered control simulator"};
  app.require_subcommand(1);

  Source sim_src, heat_src, trade_src;
  auto* simulate = app.add_subcommand("simulate", "run one closed-loop simulation");
  sim_src.attach(simulate);

  auto* heat = app.add_subcommand("heatmap", "average |x(T)| over a sensing-parameter grid");
  heat_src.attach(heat);
  std::vector<double> dt, dpsi;
  int n_ic = 0;
  long long seed = -1;
  heat->add_option("--delta-tau", dt, "sampling periods")->delimiter(',');
  heat->add_option("--d-psi", dpsi, "sensing delays")->delimiter(',');
  heat->add_option("--n-ic", n_ic, "initial conditions per cell");
  heat->add_option("--seed", seed, "initial-condition seed");

  auto* trade = app.add_subcommand("tradeoff", "dwell-time versus decay-rate trade-off tables");
  trade_src.attach(trade);

  auto* verify = app.add_subcommand("verify", "run the acceptance criteria");

  auto* list = app.add_subcommand("presets", "list presets or print one as a config file");
  std::string show;
  list->add_option("name", show, "preset to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(sim_src);
    if (*heat) return cmd_heatmap(heat_src, dt, dpsi, n_ic, seed);
    if (*trade) return cmd_tradeoff(trade_src);
    if (*verify) return cmd_verify();
    if (*list) {
      if (show.empty()) {
        for (const auto& name : presets::names()) std::cout << name << "\n";
      } else {
        std::cout << presets::get(show).dump();
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
