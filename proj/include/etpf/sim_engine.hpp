#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include "etpf/delay_channel.hpp"
#include "etpf/lyapunov_monitor.hpp"
#include "etpf/predictor.hpp"
#include "etpf/signal_history.hpp"
#include "etpf/system_model.hpp"
#include "etpf/trigger.hpp"
#include "etpf/types.hpp"

namespace etpf {

struct SensingConfig {
  enum class Mode { Perfect, Sampled };
  Mode mode = Mode::Sampled;
  double delta_tau = 2.0;
  SensingDelayModel delay = SensingDelayModel::constant(1.0);
  std::uint64_t seed = 1;
};

struct SimConfig {
  std::shared_ptr<const SystemModel> model;
  std::shared_ptr<const ISSCertificate> certificate;
  std::shared_ptr<const LinearSystem> linear;  // linear-closed-form predictor
  ActuationDelay plant_delay = constant_delay(0.5);
  std::optional<ActuationDelay> controller_delay;  // nominal phi known to the controller
  SensingConfig sensing;
  TriggerConfig trigger;
  PredictorMethod predictor = PredictorMethod::ClosedLoop;
  FlowIntegrator integrator = FlowIntegrator::Euler;
  MonitorConfig monitor;
  double h = 1e-2;
  double T = 25.0;
  Vector x0;
  /// Piecewise-constant u on [phi(0), 0) as (time, value) stamps; the first
  /// value also holds before its stamp. Empty means u = 0.
  std::vector<std::pair<double, Vector>> prehistory;
  double divergence_limit = 1e9;
  bool record_trace = true;

  const ActuationDelay& control_delay() const {
    return controller_delay ? *controller_delay : plant_delay;
  }

  void validate() const {
    if (!model) throw ConfigError("simulation requires a system model");
    if (!(h > 0.0)) throw ConfigError("sim.h must be positive");
    if (!(T > 0.0)) throw ConfigError("sim.T must be positive");
    if (x0.size() != static_cast<Eigen::Index>(model->state_dim()))
      throw ConfigError("sim.x0 has the wrong dimension");
    for (const auto& [t, v] : prehistory)
      if (v.size() != static_cast<Eigen::Index>(model->input_dim()))
        throw ConfigError("pre-history value has the wrong dimension");
    trigger.validate();
    monitor.validate();
    if (trigger.mode != TriggerMode::FixedRatio && !certificate)
      throw ConfigError("trigger mode '" + std::string(to_string(trigger.mode)) +
                        "' requires a certificate");
    if (predictor == PredictorMethod::LinearClosedForm && !linear)
      throw ConfigError("linear-closed-form predictor requires a linear system");
    if (sensing.mode == SensingConfig::Mode::Sampled && !(sensing.delta_tau > 0.0))
      throw ConfigError("sensing.delta_tau must be positive");
  }
};

struct DeliveryRecord {
  std::size_t index = 0;
  double transmit_time = 0.0;
  double delivery_time = 0.0;
  double grid_time = 0.0;  // delivery snapped to the next grid point
};

struct SimDiagnostics {
  bool diverged = false;
  double divergence_time = std::numeric_limits<double>::quiet_NaN();
  double max_w_violation = 0.0;       // max |u - K(p + e)| for t >= t0
  double max_trigger_excess = -std::numeric_limits<double>::infinity();  // max |e| - threshold
  double max_transmit_snap = 0.0;
  double max_delivery_snap = 0.0;
};

struct SimTrace {
  std::size_t n = 0;
  std::size_t m = 0;
  double h = 0.0;
  std::vector<double> t;
  std::vector<Vector> x, u, p;
  std::vector<double> e_norm, threshold, V, L;
  std::vector<char> event_flag, delivery_flag;
  EventLog events;
  std::vector<DeliveryRecord> deliveries;
  SimDiagnostics diag;
  std::optional<std::size_t> t0_index;
  double t0 = std::numeric_limits<double>::infinity();
  DwellConstants dwell;
  double dwell_bound = 0.0;   // analytic inter-event lower bound
  std::optional<double> mu;   // guaranteed linear rate, when defined
  TimedSignal w_history{Interpolation::PiecewiseConstant};
  Vector final_state;

  double final_norm() const { return final_state.size() ? final_state.norm() : 0.0; }
};

namespace detail {

inline TimedSignal build_u_history(const SimConfig& cfg, double start, std::size_t m) {
  TimedSignal u(Interpolation::PiecewiseConstant);
  if (cfg.prehistory.empty()) {
    u.append(start, Vector::Zero(static_cast<Eigen::Index>(m)));
    return u;
  }
  auto pre = cfg.prehistory;
  std::stable_sort(pre.begin(), pre.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  Vector first = pre.front().second;
  for (const auto& [t, v] : pre)
    if (t <= start) first = v;
  u.append(start, first);
  for (const auto& [t, v] : pre)
    if (t > start && t < 0.0) u.append(t, v);
  return u;
}

}  // namespace detail

/// Fixed-step hybrid simulation of plant, channels, predictor and trigger.
///
/// The plant advances by explicit Euler and applies u(phi(t)); transmissions
/// are snapped to the nearest grid point and deliveries to the next one.
/// Before t0 (the first delivery) the controller output is zero.
inline SimTrace run(const SimConfig& cfg) {
  cfg.validate();
  const SystemModel& model = *cfg.model;
  const ActuationDelay& plant = cfg.plant_delay;
  const ActuationDelay& ctrl = cfg.control_delay();
  const std::size_t n = model.state_dim();
  const std::size_t m = model.input_dim();
  const double h = cfg.h;
  const auto N = static_cast<std::size_t>(std::llround(cfg.T / h));
  const bool perfect = cfg.sensing.mode == SensingConfig::Mode::Perfect;

  SimTrace tr;
  tr.n = n;
  tr.m = m;
  tr.h = h;

  const double start = std::min(plant.phi(0.0), ctrl.phi(0.0));
  TimedSignal u_sig = detail::build_u_history(cfg, start, m);

  // Sensing: grid indices of transmissions and of (re-sequenced) deliveries.
  std::vector<std::size_t> tx_idx, del_order;
  std::vector<std::size_t> del_idx;
  std::optional<SensingSchedule> sched;
  std::size_t t0_idx = perfect ? 0 : std::numeric_limits<std::size_t>::max();
  if (!perfect) {
    sched.emplace(SensingSchedule::periodic(cfg.sensing.delta_tau, cfg.T, cfg.sensing.delay,
                                            cfg.sensing.seed));
    const auto& by_index = sched->by_index();
    tx_idx.resize(by_index.size());
    del_idx.resize(by_index.size());
    for (const auto& d : by_index) {
      tx_idx[d.index] = static_cast<std::size_t>(std::llround(d.transmit_time / h));
      const double snapped = std::ceil(d.delivery_time / h - 1e-9);
      del_idx[d.index] = std::max(tx_idx[d.index], static_cast<std::size_t>(std::max(0.0, snapped)));
      tr.diag.max_transmit_snap = std::max(
          tr.diag.max_transmit_snap, std::abs(static_cast<double>(tx_idx[d.index]) * h - d.transmit_time));
      tr.diag.max_delivery_snap = std::max(
          tr.diag.max_delivery_snap, static_cast<double>(del_idx[d.index]) * h - d.delivery_time);
    }
    for (const auto& d : sched->by_delivery_time()) del_order.push_back(d.index);
    std::stable_sort(del_order.begin(), del_order.end(),
                     [&](std::size_t a, std::size_t b) { return del_idx[a] < del_idx[b]; });
    if (!del_order.empty()) t0_idx = del_idx[del_order.front()];
  }
  // u = 0 on [0, t0)
  if (t0_idx > 0) {
    if (u_sig.back_time() < 0.0)
      u_sig.append(0.0, Vector::Zero(static_cast<Eigen::Index>(m)));
    else
      u_sig.replace_back(Vector::Zero(static_cast<Eigen::Index>(m)));
  }

  PredictorContext ctx;
  ctx.model = &model;
  ctx.delay = &ctrl;
  ctx.u = &u_sig;
  ctx.h = h;
  ctx.linear = cfg.linear.get();
  ctx.integrator = cfg.integrator;
  Predictor pred(cfg.predictor, ctx);

  const ISSCertificate* cert = cfg.certificate.get();
  const double lk = model.lipschitz_K();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const Vector nan_state = Vector::Constant(static_cast<Eigen::Index>(n), nan);
  const double prune_margin = 2.0 * std::max(plant.M0, ctrl.M0);

  if (cfg.record_trace) {
    tr.t.reserve(N + 1);
    tr.x.reserve(N + 1);
  }
  std::vector<std::optional<Vector>> stored(tx_idx.size());
  std::size_t next_tx = 0, next_del = 0;
  std::optional<std::size_t> newest;
  std::optional<Vector> p_tk;
  double max_e_norm = 0.0;
  Vector x = cfg.x0;

  for (std::size_t i = 0; i <= N; ++i) {
    const double t = static_cast<double>(i) * h;
    char delivered = 0;
    if (!perfect) {
      while (next_tx < tx_idx.size() && tx_idx[next_tx] == i) stored[next_tx++] = x;
      while (next_del < del_order.size() && del_idx[del_order[next_del]] <= i) {
        const std::size_t l = del_order[next_del++];
        const auto& d = sched->by_index()[l];
        tr.deliveries.push_back({l, d.transmit_time, d.delivery_time, static_cast<double>(i) * h});
        delivered = 1;
        if (!newest || l > *newest) newest = l;
      }
      if (newest && (!pred.anchor_index() || *newest > *pred.anchor_index()))
        pred.set_anchor(*newest, static_cast<double>(tx_idx[*newest]) * h, *stored[*newest]);
    } else {
      pred.set_anchor(i, t, x);
    }

    Vector p = nan_state;
    double e_norm = 0.0, thr = nan;
    char fired = 0;
    if (i >= t0_idx) {
      if (i == t0_idx) pred.fill_back_extension(t);
      p = pred.predict(t);
      if (pred.diverged()) {
        tr.diag.diverged = true;
        tr.diag.divergence_time = t;
      }
      const Vector u_new = model.feedback(p);
      if (i == t0_idx) {
        tr.events.record(t, u_new, p.norm(), 0.0);
        fired = 1;
        thr = threshold(cfg.trigger, cert, lk, p);
      } else {
        const Vector e = triggering_error(p_tk, p);
        const FireDecision d = check_and_fire(cfg.trigger, cert, lk, e, p, t, u_new, tr.events);
        thr = d.threshold;
        fired = d.fired ? 1 : 0;
        e_norm = d.fired ? 0.0 : d.e_norm;
        max_e_norm = std::max(max_e_norm, d.e_norm);
        if (!d.fired) tr.diag.max_trigger_excess = std::max(tr.diag.max_trigger_excess, d.e_norm - thr);
      }
      if (fired) {
        p_tk = p;
        if (t > u_sig.back_time()) {
          u_sig.append(t, u_new);
        } else if (t == u_sig.back_time() && u_sig.size() == 1) {
          u_sig.replace_back(u_new);  // zero delay: the pre-history span is empty
        } else {
          throw NumericalError("event stamp does not advance the control history");
        }
      }
      const Vector e_now = triggering_error(p_tk, p);
      tr.diag.max_w_violation =
          std::max(tr.diag.max_w_violation, compute_w(model, u_sig.sample(t), p, e_now).norm());
      if (i % 1024 == 0)
        u_sig.prune_before(std::min(ctrl.phi(pred.anchor_time()), plant.phi(t)) - prune_margin);
    }

    if (cfg.record_trace) {
      tr.t.push_back(t);
      tr.x.push_back(x);
      tr.u.push_back(u_sig.sample(t));
      tr.p.push_back(p);
      tr.e_norm.push_back(e_norm);
      tr.threshold.push_back(thr);
      tr.event_flag.push_back(fired);
      tr.delivery_flag.push_back(delivered);
    }

    if (i == t0_idx) {
      tr.t0_index = i;
      tr.t0 = t;
      // Prediction before t0, as reconstructed from the first delivered state.
      const TimedSignal& ph = pred.p_history();
      if (cfg.record_trace) {
        for (std::size_t j = 0; j < i; ++j) {
          const double tj = static_cast<double>(j) * h;
          if (ph.covers(tj)) {
            tr.p[j] = ph.sample(tj);
            tr.threshold[j] = threshold(cfg.trigger, cert, lk, tr.p[j]);
          }
        }
      }
      // w = u - K(p) on [phi(0), t0), with e = 0 there.
      if (!ph.empty() && ph.front_time() > start)
        tr.w_history.append(start, compute_w(model, u_sig.sample(start), ph.values().front(),
                                             Vector::Zero(static_cast<Eigen::Index>(n))));
      for (std::size_t j = 0; j < ph.size() && ph.times()[j] < t; ++j)
        tr.w_history.append(ph.times()[j],
                            compute_w(model, u_sig.sample(ph.times()[j]), ph.values()[j],
                                      Vector::Zero(static_cast<Eigen::Index>(n))));
    }
    if (i >= t0_idx) {
      const Vector e_now = triggering_error(p_tk, p);
      tr.w_history.append(t, compute_w(model, u_sig.sample(t), p, e_now));
    }

    if (tr.diag.diverged) break;
    if (i == N) break;
    const Vector rate = model.f(x, u_sig.sample(plant.phi(t)));
    x = x + h * rate;
    if (!x.allFinite() || x.norm() > cfg.divergence_limit) {
      tr.diag.diverged = true;
      tr.diag.divergence_time = t + h;
      break;
    }
  }
  tr.final_state = x;

  // Run constants for the inter-event bound.
  double R = 0.0;
  switch (cfg.trigger.mode) {
    case TriggerMode::FixedRatio:
      R = *cfg.trigger.rho_bar;
      break;
    case TriggerMode::Linear:
      R = linear_threshold_coefficient(cert->quadratic->lambda_min_Q, cfg.trigger.theta,
                                       cert->quadratic->pb_norm, lk);
      break;
    case TriggerMode::Nonlinear: {
      const double lg = lipschitz_gain_map(*cert, cfg.trigger.theta, 2.0 * lk * max_e_norm);
      R = 1.0 / (2.0 * lg * lk);
      break;
    }
  }
  if (model.lipschitz_f() > 0.0 && lk > 0.0 && R > 0.0) {
    tr.dwell = dwell_constants(ctrl.M2(), model.lipschitz_f(), lk, R);
    tr.dwell_bound = tr.dwell.delta();
  }
  if (cert && cert->quadratic) tr.mu = linear_decay_rate(*cert, cfg.trigger.theta);

  // Lyapunov-Krasovskii functional on a stride of the grid.
  if (cfg.record_trace) {
    tr.V.assign(tr.t.size(), nan);
    tr.L.assign(tr.t.size(), nan);
    if (cert && cfg.monitor.stride > 0 && tr.t0_index && !tr.w_history.empty()) {
      for (std::size_t i = 0; i < tr.t.size(); ++i) {
        if (i % cfg.monitor.stride != 0 && i + 1 != tr.t.size()) continue;
        const double ti = tr.t[i];
        const double L = compute_L(cfg.monitor, tr.w_history, plant, ti, plant.sigma(ti), h);
        tr.L[i] = L;
        tr.V[i] = compute_V(*cert, tr.x[i], L, cfg.monitor);
      }
    }
  }
  return tr;
}

inline DecayReport decay_report(const SimTrace& tr, bool linear_rate) {
  return decay_report(tr.t, tr.V, tr.t0, linear_rate ? tr.mu : std::nullopt);
}

/// sup over grid t >= t0 with sigma(t) <= T of |p(t) - x(sigma(t))|, with x
/// linearly interpolated between grid points.
inline double prediction_mismatch(const SimTrace& tr, const ActuationDelay& plant_delay) {
  if (!tr.t0_index || tr.t.empty()) return 0.0;
  const double T = tr.t.back();
  double worst = 0.0;
  for (std::size_t i = *tr.t0_index; i < tr.t.size(); ++i) {
    const double s = plant_delay.sigma(tr.t[i]);
    if (s > T) break;
    const double pos = s / tr.h;
    auto j = static_cast<std::size_t>(std::floor(pos));
    if (j + 1 >= tr.t.size()) j = tr.t.size() - 2;
    const double w = (s - tr.t[j]) / tr.h;
    const Vector xs = (1.0 - w) * tr.x[j] + w * tr.x[j + 1];
    worst = std::max(worst, (tr.p[i] - xs).norm());
  }
  return worst;
}

struct HeatmapCell {
  double delta_tau = 0.0;
  double d_psi = 0.0;
  double avg_final_norm = 0.0;
  std::size_t diverged_runs = 0;
};

struct HeatmapResult {
  std::vector<double> delta_tau_grid;
  std::vector<double> d_psi_grid;
  std::vector<HeatmapCell> cells;  // delta_tau major, d_psi minor
};

inline constexpr double kHeatmapSaturation = 1e9;

/// Number of worker threads, capped by ETPF_THREADS when set.
inline std::size_t sweep_threads(std::size_t jobs) {
  std::size_t threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ETPF_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) threads = std::min<std::size_t>(threads, static_cast<std::size_t>(v));
  }
  return std::max<std::size_t>(1, std::min(threads, jobs));
}

/// Average |x(T)| over n_ic standard-normal initial conditions (shared by
/// all cells) for each (delta_tau, D_psi) pair with a fixed sensing delay.
inline HeatmapResult heatmap(const SimConfig& base, const std::vector<double>& delta_tau_grid,
                             const std::vector<double>& d_psi_grid, std::size_t n_ic,
                             std::uint64_t seed, bool zero_initial_conditions = false) {
  if (delta_tau_grid.empty() || d_psi_grid.empty()) throw ConfigError("heatmap grids must be nonempty");
  if (n_ic == 0) throw ConfigError("heatmap needs at least one initial condition");
  base.validate();
  const auto n = static_cast<Eigen::Index>(base.model->state_dim());
  std::vector<Vector> ics;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < n_ic; ++k) {
    Vector x(n);
    for (Eigen::Index j = 0; j < n; ++j) x(j) = normal(rng);
    ics.push_back(zero_initial_conditions ? Vector::Zero(n) : x);
  }

  HeatmapResult out;
  out.delta_tau_grid = delta_tau_grid;
  out.d_psi_grid = d_psi_grid;
  out.cells.resize(delta_tau_grid.size() * d_psi_grid.size());
  for (std::size_t a = 0; a < delta_tau_grid.size(); ++a)
    for (std::size_t b = 0; b < d_psi_grid.size(); ++b)
      out.cells[a * d_psi_grid.size() + b] = {delta_tau_grid[a], d_psi_grid[b], 0.0, 0};

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= out.cells.size()) return;
      HeatmapCell& cell = out.cells[c];
      SimConfig cfg = base;
      cfg.sensing.mode = SensingConfig::Mode::Sampled;
      cfg.sensing.delta_tau = cell.delta_tau;
      cfg.sensing.delay = SensingDelayModel::constant(cell.d_psi);
      cfg.record_trace = false;
      cfg.monitor.stride = 0;
      double sum = 0.0;
      for (const Vector& x0 : ics) {
        cfg.x0 = x0;
        const SimTrace tr = run(cfg);
        if (tr.diag.diverged) {
          ++cell.diverged_runs;
          sum += kHeatmapSaturation;
        } else {
          sum += std::min(tr.final_norm(), kHeatmapSaturation);
        }
      }
      cell.avg_final_norm = sum / static_cast<double>(ics.size());
    }
  };
  const std::size_t threads = sweep_threads(out.cells.size());
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace etpf
