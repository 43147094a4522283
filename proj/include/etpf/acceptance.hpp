#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "etpf/experiments.hpp"
#include "etpf/io.hpp"
#include "etpf/sim_engine.hpp"
#include "etpf/tradeoff.hpp"
#include "etpf/trigger.hpp"

namespace etpf::acceptance {

struct Result {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;

  std::string line() const {
    return std::string(passed ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + " (" + title +
           "): " + detail;
  }
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

inline Experiment preset(const std::string& name, const std::vector<std::string>& overrides = {}) {
  Config cfg = presets::get(name);
  for (const auto& o : overrides) cfg.apply_override(o);
  return build_experiment(cfg);
}

inline std::string trace_csv(const SimTrace& tr) {
  std::ostringstream os;
  io::write_trace_csv(os, tr);
  io::write_events_csv(os, tr);
  return os.str();
}

/// Grid points t >= t0 where |e| exceeds threshold + one-step growth of p,
/// plus event rows with nonzero recorded e.
inline std::size_t trigger_violations(const SimTrace& tr) {
  if (!tr.t0_index) return 0;
  std::size_t bad = 0;
  for (std::size_t i = *tr.t0_index; i < tr.t.size(); ++i) {
    if (tr.event_flag[i]) {
      if (tr.e_norm[i] != 0.0) ++bad;
      continue;
    }
    const double slack = i > 0 ? (tr.p[i] - tr.p[i - 1]).norm() : 0.0;
    if (tr.e_norm[i] > tr.threshold[i] + slack) ++bad;
  }
  return bad;
}

}  // namespace detail

inline const std::vector<std::string>& simulation_presets() {
  static const std::vector<std::string> names{"example1", "example2", "example2-body", "linear2d"};
  return names;
}

inline Result criterion1() {
  Result r{1, "Example-1 stabilization", false, {}};
  const auto ex = detail::preset("example1");
  const auto start = std::chrono::steady_clock::now();
  const SimTrace tr = run(ex.sim);
  const double secs = detail::seconds_since(start);
  const double xT = tr.final_norm();
  const double dwell = tr.events.min_dwell_observed();
  r.passed = !tr.diag.diverged && xT <= 0.1 && tr.events.size() > 0 && tr.events.size() <= tr.t.size() &&
             dwell > 0.0 && secs <= 30.0;
  r.detail = "|x(25)|=" + detail::num(xT) + " (<= 0.1), events=" + std::to_string(tr.events.size()) +
             ", min dwell=" + detail::num(dwell) + ", runtime=" + detail::num(secs) + " s";
  return r;
}

inline Result criterion2() {
  Result r{2, "Example-1 robustness margin", false, {}};
  const SimTrace lo = run(detail::preset("example1", {"trigger.rho_bar=0.5"}).sim);
  const SimTrace hi = run(detail::preset("example1", {"trigger.rho_bar=1.0"}).sim);
  const bool lo_ok = !lo.diag.diverged && lo.final_norm() <= 0.5;
  const bool hi_ok = hi.diag.diverged || hi.final_norm() > 10.0;
  r.passed = lo_ok && hi_ok;
  r.detail = "rho_bar=0.5: |x(25)|=" + detail::num(lo.final_norm()) + " (<= 0.5); rho_bar=1.0: " +
             (hi.diag.diverged ? "diverged at t=" + detail::num(hi.diag.divergence_time)
                               : "|x(25)|=" + detail::num(hi.final_norm())) +
             " (diverge or > 10)";
  return r;
}

inline Result criterion3(HeatmapResult* out = nullptr) {
  Result r{3, "heatmap structure", false, {}};
  const auto ex = detail::preset("heatmap-ex1");
  const auto start = std::chrono::steady_clock::now();
  const HeatmapResult hm =
      heatmap(ex.sim, ex.heatmap.delta_tau, ex.heatmap.d_psi, ex.heatmap.n_ic, ex.heatmap.seed);
  const double secs = detail::seconds_since(start);
  double ref = std::nan("");
  double worst_far = 0.0;
  for (const auto& c : hm.cells) {
    if (c.delta_tau == 2.0 && c.d_psi == 1.0) ref = c.avg_final_norm;
    if (c.delta_tau >= 5.0 || c.d_psi >= 3.0) worst_far = std::max(worst_far, c.avg_final_norm);
  }
  r.passed = hm.cells.size() == 64 && ref <= 0.5 && worst_far >= 10.0 && secs <= 600.0;
  r.detail = "cells=" + std::to_string(hm.cells.size()) + ", avg at (2,1)=" + detail::num(ref) +
             " (<= 0.5), max avg with delta_tau>=5 or D_psi>=3=" + detail::num(worst_far) +
             " (>= 10), runtime=" + detail::num(secs) + " s";
  if (out) *out = hm;
  return r;
}

inline Result criterion4() {
  Result r{4, "linear exponential rate", false, {}};
  const auto ex = detail::preset("linear2d", {"sim.h=0.001"});
  const SimTrace tr = run(ex.sim);
  const DecayReport rep = decay_report(tr, true);
  const double mu = tr.mu.value_or(std::nan(""));
  const double slope = rep.slope.value_or(std::nan(""));
  r.passed = rep.rate_ok.value_or(false);
  r.detail = "log-V slope=" + detail::num(slope) + ", required <= " + detail::num(-0.9 * mu) +
             " (mu=" + detail::num(mu) + ")";
  return r;
}

inline Result criterion5() {
  Result r{5, "dwell-time bound", false, {}};
  const auto ex = detail::preset("linear2d");
  const SimTrace tr = run(ex.sim);
  const double observed = tr.events.min_dwell_observed();
  const double bound = tr.dwell_bound;
  const double numeric = min_dwell_numeric(tr.dwell.a, tr.dwell.c, tr.dwell.R);
  const double gap = std::abs(numeric - bound);
  r.passed = bound > 0.0 && observed >= bound && gap <= 1e-6;
  r.detail = "min observed=" + detail::num(observed) + " >= delta=" + detail::num(bound) +
             ", |delta_ode - delta|=" + detail::num(gap) + " (<= 1e-6)";
  return r;
}

inline Result criterion6() {
  Result r{6, "predictor exactness", false, {}};
  struct Case {
    std::string label;
    std::string preset;
    std::vector<std::string> overrides;
  };
  const std::vector<Case> cases{
      {"example1/closed-loop", "example1", {"predictor.method=closed-loop"}},
      {"linear2d/closed-loop", "linear2d", {"predictor.method=closed-loop"}},
      {"linear2d/linear-closed-form", "linear2d", {"predictor.method=linear-closed-form"}},
  };
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    auto ov = c.overrides;
    ov.push_back("monitor.stride=0");
    auto fine = ov, finer = ov;
    fine.push_back("sim.h=0.001");
    finer.push_back("sim.h=0.0005");
    const auto ex1 = detail::preset(c.preset, fine);
    const auto ex2 = detail::preset(c.preset, finer);
    const double e1 = prediction_mismatch(run(ex1.sim), ex1.sim.plant_delay);
    const double e2 = prediction_mismatch(run(ex2.sim), ex2.sim.plant_delay);
    // first order: the ratio may sit a hair above 1/2 from the O(h^2) term;
    // errors at rounding level have nothing left to halve
    const bool exact = e1 <= 1e-9 && e2 <= 1e-9;
    const bool case_ok = e1 <= 5e-2 && (exact || e2 <= 0.5 * (1.0 + 1e-2) * e1);
    ok = ok && case_ok;
    detail += (detail.empty() ? "" : "; ") + c.label + ": err(1e-3)=" + detail::num(e1) +
              ", err(5e-4)=" + detail::num(e2) + (case_ok ? "" : " [x]");
  }
  r.passed = ok;
  r.detail = detail + " (need err <= 5e-2 and err(5e-4) <= 0.505 err(1e-3), or both <= 1e-9)";
  return r;
}

inline Result criterion7() {
  Result r{7, "trigger invariant", false, {}};
  bool ok = true;
  std::string detail;
  for (const auto& name : simulation_presets()) {
    const SimTrace tr = run(detail::preset(name).sim);
    const std::size_t bad = detail::trigger_violations(tr);
    ok = ok && bad == 0 && tr.t0_index.has_value();
    detail += (detail.empty() ? "" : ", ") + name + "=" + std::to_string(bad);
  }
  r.passed = ok;
  r.detail = "violating grid points: " + detail;
  return r;
}

inline Result criterion8() {
  Result r{8, "w-identity", false, {}};
  bool ok = true;
  std::string detail;
  for (const auto& name : simulation_presets()) {
    const SimTrace tr = run(detail::preset(name).sim);
    ok = ok && tr.diag.max_w_violation <= 1e-9;
    detail += (detail.empty() ? "" : ", ") + name + "=" + detail::num(tr.diag.max_w_violation);
  }
  r.passed = ok;
  r.detail = "max |u - K(p+e)|: " + detail + " (<= 1e-9)";
  return r;
}

inline Result criterion9() {
  Result r{9, "trade-off optimizer", false, {}};
  const auto start = std::chrono::steady_clock::now();
  const auto ex = detail::preset("linear2d");
  const TradeoffConstants k = tradeoff_constants(ex);
  const auto grid = nu_grid(100);
  bool delta_up = true, mu_down = true;
  for (std::size_t j = 1; j < grid.size(); ++j) {
    delta_up = delta_up && delta_of_nu(k, grid[j]) > delta_of_nu(k, grid[j - 1]);
    mu_down = mu_down && mu_of_nu(k, grid[j]) < mu_of_nu(k, grid[j - 1]);
  }
  double worst_gap = 0.0;
  bool monotone = true;
  double prev = 0.0;
  for (int j = 1; j <= 9; ++j) {
    const double lambda = 0.1 * j;
    const NuOptimum opt = optimize_nu(k, lambda, 10000);
    worst_gap = std::max(worst_gap, std::abs(opt.nu - grid_argmax_nu(k, lambda, 10000)));
    if (opt.nu < prev) monotone = false;
    prev = opt.nu;
  }
  const double secs = detail::seconds_since(start);
  r.passed = delta_up && mu_down && worst_gap <= 1e-4 && monotone && secs <= 5.0;
  r.detail = std::string("delta increasing=") + (delta_up ? "yes" : "no") +
             ", mu decreasing=" + (mu_down ? "yes" : "no") + ", max |nu* - grid argmax|=" +
             detail::num(worst_gap) + " (<= 1e-4), nu*(lambda) nondecreasing=" + (monotone ? "yes" : "no") +
             ", runtime=" + detail::num(secs) + " s";
  return r;
}

inline Result criterion10(bool include_heatmap = true) {
  Result r{10, "determinism", false, {}};
  bool ok = true;
  std::string detail;
  for (const auto& name : simulation_presets()) {
    const auto ex = detail::preset(name);
    const bool same = detail::trace_csv(run(ex.sim)) == detail::trace_csv(run(ex.sim));
    ok = ok && same;
    detail += (detail.empty() ? "" : ", ") + name + (same ? "=same" : "=DIFFERENT");
  }
  {
    const auto ex = detail::preset("tradeoff");
    const TradeoffConstants k = tradeoff_constants(ex);
    auto csv = [&]() {
      const auto t = sweep(k, nu_grid(ex.tradeoff.nu_points), ex.tradeoff.lambdas);
      std::ostringstream os;
      io::write_tradeoff_nu_csv(os, t);
      io::write_tradeoff_lambda_csv(os, t);
      return os.str();
    };
    const bool same = csv() == csv();
    ok = ok && same;
    detail += std::string(", tradeoff") + (same ? "=same" : "=DIFFERENT");
  }
  if (include_heatmap) {
    const auto ex = detail::preset("heatmap-ex1");
    auto csv = [&]() {
      std::ostringstream os;
      io::write_heatmap_csv(os, heatmap(ex.sim, ex.heatmap.delta_tau, ex.heatmap.d_psi, ex.heatmap.n_ic,
                                        ex.heatmap.seed));
      return os.str();
    };
    const bool same = csv() == csv();
    ok = ok && same;
    detail += std::string(", heatmap-ex1") + (same ? "=same" : "=DIFFERENT");
  }
  r.passed = ok;
  r.detail = "byte-identical CSV reruns: " + detail;
  return r;
}

/// Runs criteria 1..10, handing each result to `report` as it completes.
inline std::vector<Result> run_all(const std::function<void(const Result&)>& report = {}) {
  const std::vector<std::function<Result()>> all{
      criterion1, criterion2, [] { return criterion3(); }, criterion4, criterion5,
      criterion6, criterion7, criterion8, criterion9, [] { return criterion10(); }};
  std::vector<Result> out;
  for (std::size_t j = 0; j < all.size(); ++j) {
    Result res;
    try {
      res = all[j]();
    } catch (const std::exception& e) {
      res = {static_cast<int>(j + 1), "error", false, std::string("exception: ") + e.what()};
    }
    if (report) report(res);
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace etpf::acceptance
