#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "etpf/config.hpp"
#include "etpf/delay_channel.hpp"
#include "etpf/models.hpp"
#include "etpf/sim_engine.hpp"
#include "etpf/tradeoff.hpp"

namespace etpf {

struct HeatmapSettings {
  std::vector<double> delta_tau{0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0};
  std::vector<double> d_psi{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0};
  std::size_t n_ic = 10;
  std::uint64_t seed = 7;
  bool zero_initial_conditions = false;
};

struct TradeoffSettings {
  double M2 = 1.0;
  std::optional<double> lipschitz_f;
  std::size_t nu_points = 100;
  std::vector<double> lambdas;
  std::size_t grid_points = 10000;
};

struct Experiment {
  std::string name;
  models::ModelBundle bundle;
  SimConfig sim;
  HeatmapSettings heatmap;
  TradeoffSettings tradeoff;
};

namespace presets {

inline const std::map<std::string, std::string>& table() {
  static const std::map<std::string, std::string> t{
      {"example1", R"({
  "name": "example1",
  "system": { "model": "example1" },
  "delay": { "type": "example1" },
  "sensing": { "mode": "sampled", "delta_tau": 2.0, "delay": "constant", "D_psi": 1.0, "seed": 1 },
  "trigger": { "mode": "fixed-ratio", "theta": 0.5, "rho_bar": 0.015 },
  "predictor": { "method": "closed-loop", "integrator": "euler" },
  "monitor": { "b": 10.0, "form": "sup", "stride": 10 },
  "sim": { "h": 0.01, "T": 25.0, "x0": [1.0, 1.0] }
})"},
      {"example2", R"({
  "name": "example2",
  "system": { "model": "example2", "radius": 1.0 },
  "delay": { "type": "sinusoidal", "D": 0.2, "a": 0.01 },
  "controller_delay": { "type": "constant", "D": 0.2 },
  "sensing": { "mode": "sampled", "delta_tau": 1.0, "delay": "gaussian", "mean": 0.1, "stddev": 0.02, "seed": 1 },
  "trigger": { "mode": "fixed-ratio", "theta": 0.5, "rho_bar": 0.5 },
  "predictor": { "method": "closed-loop", "integrator": "euler" },
  "monitor": { "b": 10.0, "form": "sup", "stride": 10 },
  "sim": { "h": 0.001, "T": 25.0, "x0": [1.0, 1.0] }
})"},
      {"example2-body", R"({
  "name": "example2-body",
  "system": { "model": "example2", "radius": 1.0 },
  "delay": { "type": "sinusoidal", "D": 0.5, "a": 0.05 },
  "controller_delay": { "type": "constant", "D": 0.5 },
  "sensing": { "mode": "sampled", "delta_tau": 1.0, "delay": "gaussian", "mean": 0.1, "stddev": 0.02, "seed": 1 },
  "trigger": { "mode": "fixed-ratio", "theta": 0.5, "rho_bar": 0.5 },
  "predictor": { "method": "closed-loop", "integrator": "euler" },
  "monitor": { "b": 10.0, "form": "sup", "stride": 10 },
  "sim": { "h": 0.01, "T": 25.0, "x0": [1.0, 1.0] }
})"},
      {"linear2d", R"({
  "name": "linear2d",
  "system": { "model": "linear", "A": [[1.0, 1.0], [0.0, 1.0]], "B": [[0.0], [1.0]],
              "K": [[-6.0, -5.0]], "Q": [[1.0, 0.0], [0.0, 1.0]] },
  "delay": { "type": "constant", "D": 0.5 },
  "sensing": { "mode": "perfect" },
  "trigger": { "mode": "linear", "theta": 0.5 },
  "predictor": { "method": "linear-closed-form", "integrator": "euler" },
  "monitor": { "b": 10.0, "form": "integral", "stride": 10 },
  "sim": { "h": 0.001, "T": 10.0, "x0": [1.0, 1.0] },
  "tradeoff": { "M2": 1.0, "nu_points": 100, "grid_points": 10000 }
})"},
      {"heatmap-ex1", R"({
  "name": "heatmap-ex1",
  "system": { "model": "example1" },
  "delay": { "type": "example1" },
  "sensing": { "mode": "sampled", "delta_tau": 2.0, "delay": "constant", "D_psi": 1.0, "seed": 1 },
  "trigger": { "mode": "fixed-ratio", "theta": 0.5, "rho_bar": 0.015 },
  "predictor": { "method": "closed-loop", "integrator": "euler" },
  "monitor": { "b": 10.0, "form": "sup", "stride": 0 },
  "sim": { "h": 0.01, "T": 25.0, "x0": [1.0, 1.0] },
  "heatmap": { "delta_tau": [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0],
               "d_psi": [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0],
               "n_ic": 10, "seed": 7 }
})"},
      {"tradeoff", R"({
  "name": "tradeoff",
  "system": { "model": "linear", "A": [[1.0, 1.0], [0.0, 1.0]], "B": [[0.0], [1.0]],
              "K": [[-6.0, -5.0]], "Q": [[1.0, 0.0], [0.0, 1.0]] },
  "delay": { "type": "constant", "D": 0.5 },
  "sensing": { "mode": "perfect" },
  "trigger": { "mode": "linear", "theta": 0.5 },
  "predictor": { "method": "linear-closed-form" },
  "sim": { "h": 0.001, "T": 10.0, "x0": [1.0, 1.0] },
  "tradeoff": { "M2": 1.0, "nu_points": 100, "grid_points": 10000 }
})"},
  };
  return t;
}

inline std::vector<std::string> names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : table()) out.push_back(name);
  return out;
}

inline Config get(const std::string& name) {
  const auto it = table().find(name);
  if (it == table().end()) throw ConfigError("unknown preset '" + name + "'");
  return Config::parse(it->second, "preset " + name);
}

}  // namespace presets

namespace detail {

inline ActuationDelay delay_from(const Config& cfg, const std::string& section) {
  const std::string type = cfg.string_or(section, "type", "constant");
  if (type == "constant") return constant_delay(cfg.number(section, "D"));
  if (type == "example1") return example1_delay();
  if (type == "sinusoidal") return sinusoidal_delay(cfg.number(section, "D"), cfg.number(section, "a"));
  if (type == "custom-table") return table_delay_from_csv(cfg.string(section, "table"));
  cfg.fail(section, "type", "unknown delay type '" + type + "'");
}

inline models::ModelBundle model_from(const Config& cfg) {
  const std::string kind = cfg.string("system", "model");
  std::optional<Matrix> q;
  if (cfg.has("system", "Q")) q = cfg.matrix("system", "Q");
  models::ModelBundle b;
  if (kind == "example1") {
    b = models::example1(q.value_or(Matrix::Identity(2, 2)));
  } else if (kind == "example2") {
    b = models::example2(cfg.number_or("system", "radius", 1.0), q.value_or(Matrix::Identity(2, 2)));
  } else if (kind == "linear") {
    const Matrix a = cfg.matrix("system", "A");
    const LinearSystem sys(a, cfg.matrix("system", "B"), cfg.matrix("system", "K"),
                           q.value_or(Matrix::Identity(a.rows(), a.rows())));
    std::optional<double> lf;
    if (cfg.has("system", "L_f")) lf = cfg.number("system", "L_f");
    return models::linear(sys, lf);
  } else {
    cfg.fail("system", "model", "unknown model '" + kind + "'");
  }
  if (cfg.has("system", "L_f") || cfg.has("system", "L_K")) {
    const SystemModel& m = *b.model;
    auto copy = std::make_shared<const SystemModel>(
        m.state_dim(), m.input_dim(),
        [src = b.model](const Vector& x, const Vector& u) { return src->f(x, u); },
        [src = b.model](const Vector& x) { return src->feedback(x); },
        cfg.number_or("system", "L_f", m.lipschitz_f()), cfg.number_or("system", "L_K", m.lipschitz_K()),
        m.name());
    b.model = copy;
  }
  return b;
}

inline std::vector<std::pair<double, Vector>> prehistory_from(const Config& cfg, std::size_t m) {
  if (!cfg.has("sim", "prehistory")) return {};
  const auto& v = cfg.root().at("sim").at("prehistory");
  if (v.is_number() || (v.is_array() && !v.empty() && v.front().is_number())) {
    const Vector u = cfg.vector("sim", "prehistory");
    if (static_cast<std::size_t>(u.size()) != m) cfg.fail("sim", "prehistory", "wrong input dimension");
    return {{-std::numeric_limits<double>::infinity(), u}};
  }
  // Table rows [t, u_1, ..., u_m].
  const Matrix rows = cfg.matrix("sim", "prehistory");
  if (static_cast<std::size_t>(rows.cols()) != m + 1)
    cfg.fail("sim", "prehistory", "table rows must be [t, u_1..u_m]");
  std::vector<std::pair<double, Vector>> out;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out.emplace_back(rows(i, 0), rows.row(i).tail(m).transpose());
  return out;
}

}  // namespace detail

/// Resolves a config into model, simulation and sweep settings.
inline Experiment build_experiment(const Config& cfg) {
  Experiment ex;
  ex.name = cfg.name();
  ex.bundle = detail::model_from(cfg);
  SimConfig& s = ex.sim;
  s.model = ex.bundle.model;
  s.certificate = ex.bundle.certificate;
  s.linear = ex.bundle.linear;
  s.plant_delay = detail::delay_from(cfg, "delay");
  if (cfg.has_section("controller_delay")) s.controller_delay = detail::delay_from(cfg, "controller_delay");

  const std::string mode = cfg.string_or("sensing", "mode", "sampled");
  if (mode == "perfect") {
    s.sensing.mode = SensingConfig::Mode::Perfect;
  } else if (mode == "sampled") {
    s.sensing.mode = SensingConfig::Mode::Sampled;
    s.sensing.delta_tau = cfg.number("sensing", "delta_tau");
    const std::string kind = cfg.string_or("sensing", "delay", "constant");
    if (kind == "constant")
      s.sensing.delay = SensingDelayModel::constant(cfg.number_or("sensing", "D_psi", 0.0));
    else if (kind == "gaussian")
      s.sensing.delay = SensingDelayModel::gaussian(cfg.number("sensing", "mean"), cfg.number("sensing", "stddev"));
    else
      cfg.fail("sensing", "delay", "unknown sensing delay '" + kind + "'");
    const auto seed = cfg.integer_or("sensing", "seed", 1);
    if (seed < 0) cfg.fail("sensing", "seed", "must be nonnegative");
    s.sensing.seed = static_cast<std::uint64_t>(seed);
  } else {
    cfg.fail("sensing", "mode", "expected 'perfect' or 'sampled'");
  }

  try {
    s.trigger.mode = parse_trigger_mode(cfg.string_or("trigger", "mode", "nonlinear"));
    s.predictor = parse_predictor_method(cfg.string_or("predictor", "method", "closed-loop"));
    s.monitor.form = parse_monitor_form(cfg.string_or("monitor", "form", "sup"));
  } catch (const ConfigError& e) {
    throw ConfigError(cfg.source() + ": " + e.what());
  }
  s.trigger.theta = cfg.number_or("trigger", "theta", 0.5);
  if (cfg.has("trigger", "rho_bar")) s.trigger.rho_bar = cfg.number("trigger", "rho_bar");
  const std::string integ = cfg.string_or("predictor", "integrator", "euler");
  if (integ == "euler") s.integrator = FlowIntegrator::Euler;
  else if (integ == "midpoint") s.integrator = FlowIntegrator::Midpoint;
  else cfg.fail("predictor", "integrator", "expected 'euler' or 'midpoint'");

  s.monitor.b = cfg.number_or("monitor", "b", 10.0);
  const auto stride = cfg.integer_or("monitor", "stride", 10);
  if (stride < 0) cfg.fail("monitor", "stride", "must be nonnegative");
  s.monitor.stride = static_cast<std::size_t>(stride);

  s.h = cfg.number_or("sim", "h", 1e-2);
  s.T = cfg.number_or("sim", "T", 25.0);
  s.x0 = cfg.vector("sim", "x0");
  s.prehistory = detail::prehistory_from(cfg, s.model->input_dim());
  s.divergence_limit = cfg.number_or("sim", "divergence_limit", 1e9);

  if (cfg.has_section("heatmap")) {
    HeatmapSettings& hm = ex.heatmap;
    if (cfg.has("heatmap", "delta_tau")) hm.delta_tau = cfg.numbers("heatmap", "delta_tau");
    if (cfg.has("heatmap", "d_psi")) hm.d_psi = cfg.numbers("heatmap", "d_psi");
    const auto n_ic = cfg.integer_or("heatmap", "n_ic", 10);
    if (n_ic < 1) cfg.fail("heatmap", "n_ic", "must be at least 1");
    hm.n_ic = static_cast<std::size_t>(n_ic);
    const auto seed = cfg.integer_or("heatmap", "seed", 7);
    if (seed < 0) cfg.fail("heatmap", "seed", "must be nonnegative");
    hm.seed = static_cast<std::uint64_t>(seed);
    hm.zero_initial_conditions = cfg.boolean_or("heatmap", "zero_ic", false);
  }

  TradeoffSettings& to = ex.tradeoff;
  to.M2 = cfg.number_or("tradeoff", "M2", s.control_delay().M2());
  if (cfg.has("tradeoff", "L_f")) to.lipschitz_f = cfg.number("tradeoff", "L_f");
  const auto nu_points = cfg.integer_or("tradeoff", "nu_points", 100);
  const auto grid_points = cfg.integer_or("tradeoff", "grid_points", 10000);
  if (nu_points < 1) cfg.fail("tradeoff", "nu_points", "must be at least 1");
  if (grid_points < 10) cfg.fail("tradeoff", "grid_points", "must be at least 10");
  to.nu_points = static_cast<std::size_t>(nu_points);
  to.grid_points = static_cast<std::size_t>(grid_points);
  if (cfg.has("tradeoff", "lambda")) {
    to.lambdas = cfg.numbers("tradeoff", "lambda");
  } else {
    for (int j = 0; j <= 20; ++j) to.lambdas.push_back(0.05 * j);
  }
  for (double l : to.lambdas)
    if (!(l >= 0.0 && l <= 1.0)) cfg.fail("tradeoff", "lambda", "values must lie in [0, 1]");

  s.validate();
  return ex;
}

namespace presets {

inline Experiment load(const std::string& name) { return build_experiment(get(name)); }

}  // namespace presets

/// Trade-off constants for the experiment's linear system.
inline TradeoffConstants tradeoff_constants(const Experiment& ex) {
  if (!ex.bundle.linear) throw ConfigError("trade-off analysis requires a linear system");
  const LinearSystem& sys = *ex.bundle.linear;
  return TradeoffConstants::from_linear(sys.A(), sys.B(), sys.K(), ex.tradeoff.M2, ex.tradeoff.lipschitz_f);
}

/// nu_j = j (sqrt(2) - eps) / points for j = 1..points.
inline std::vector<double> nu_grid(std::size_t points) {
  std::vector<double> out;
  for (std::size_t j = 1; j <= points; ++j)
    out.push_back(nu_upper_bound() * static_cast<double>(j) / static_cast<double>(points));
  return out;
}

}  // namespace etpf
