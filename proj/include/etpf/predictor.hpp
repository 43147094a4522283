#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "etpf/delay_channel.hpp"
#include "etpf/linalg.hpp"
#include "etpf/signal_history.hpp"
#include "etpf/system_model.hpp"
#include "etpf/types.hpp"

namespace etpf {

enum class PredictorMethod { OpenLoop, SemiClosedLoop, ClosedLoop, LinearClosedForm };
enum class FlowIntegrator { Euler, Midpoint };

inline std::string_view to_string(PredictorMethod m) {
  switch (m) {
    case PredictorMethod::OpenLoop: return "open-loop";
    case PredictorMethod::SemiClosedLoop: return "semi-closed-loop";
    case PredictorMethod::ClosedLoop: return "closed-loop";
    case PredictorMethod::LinearClosedForm: return "linear-closed-form";
  }
  return "?";
}

inline PredictorMethod parse_predictor_method(std::string_view s) {
  if (s == "open-loop") return PredictorMethod::OpenLoop;
  if (s == "semi-closed-loop" || s == "semi-closed") return PredictorMethod::SemiClosedLoop;
  if (s == "closed-loop") return PredictorMethod::ClosedLoop;
  if (s == "linear-closed-form" || s == "linear") return PredictorMethod::LinearClosedForm;
  throw ConfigError("unknown predictor method '" + std::string(s) + "'");
}

/// Everything a prediction needs besides the anchor: the controller's model
/// of the plant and of the actuation delay, and its own output history.
struct PredictorContext {
  const SystemModel* model = nullptr;
  const ActuationDelay* delay = nullptr;
  const TimedSignal* u = nullptr;
  double h = 1e-2;
  const LinearSystem* linear = nullptr;
  FlowIntegrator integrator = FlowIntegrator::Euler;
};

namespace detail {

inline Vector predictor_rate(const PredictorContext& ctx, double s, const Vector& p) {
  return ctx.delay->sigma_dot(s, ctx.h) * ctx.model->f(p, ctx.u->sample(s));
}

/// Fixed-lattice integration of p' = sigma'(s) f(p, u(s)) from
/// (start, p_start) on s_j = start + j h. advance_to(t) takes whole steps
/// while s_{j+1} <= t and finishes with a partial step that is not stored,
/// so repeated calls reproduce a fresh integration exactly.
class PredictorFlow {
 public:
  PredictorFlow() = default;
  PredictorFlow(double start, Vector p_start) : start_(start), p_(std::move(p_start)) {}

  double lattice_time() const { return start_ + static_cast<double>(j_) * h_used_; }
  const Vector& lattice_value() const { return p_; }
  double start() const { return start_; }

  Vector advance_to(double t, const PredictorContext& ctx) {
    if (t < start_) throw PredictorError("prediction requested before the anchor window start");
    if (!ctx.u->covers(start_))
      throw PredictorError("u history does not cover the predictor window start");
    h_used_ = ctx.h;
    while (start_ + static_cast<double>(j_ + 1) * ctx.h <= t) {
      const double s = lattice_time();
      p_ = step(ctx, s, p_, ctx.h);
      ++j_;
    }
    const double s = lattice_time();
    const double rest = t - s;
    if (rest <= 0.0) return p_;
    return step(ctx, s, p_, rest);
  }

 private:
  static Vector step(const PredictorContext& ctx, double s, const Vector& p, double dt) {
    const Vector k1 = predictor_rate(ctx, s, p);
    if (ctx.integrator == FlowIntegrator::Euler) return p + dt * k1;
    const Vector mid = p + 0.5 * dt * k1;
    return p + dt * predictor_rate(ctx, s + 0.5 * dt, mid);
  }

  double start_ = 0.0;
  double h_used_ = 0.0;
  std::size_t j_ = 0;
  Vector p_;
};

}  // namespace detail

/// Closed-loop prediction: integrate from phi(tau) with p = x(tau) up to t.
inline Vector predict_closed_loop(double t, double anchor_time, const Vector& anchor_state,
                                  const PredictorContext& ctx) {
  detail::PredictorFlow flow(ctx.delay->phi(anchor_time), anchor_state);
  return flow.advance_to(t, ctx);
}

/// Open-loop prediction: one flow started at p(phi(0)) = x(0), never re-anchored.
inline Vector predict_open_loop(double t, const Vector& x0, const PredictorContext& ctx) {
  return predict_closed_loop(t, 0.0, x0, ctx);
}

/// Semi-closed-loop prediction: quadrature of sigma' f(p, u) over the
/// stored p history from phi(tau) to t, anchored at x(tau). Segments between
/// stored stamps use the trapezoid rule with u held at its left value; the
/// final segment up to t uses its left endpoint only.
inline Vector predict_semi_closed(double t, double anchor_time, const Vector& anchor_state,
                                  const TimedSignal& p_history, const PredictorContext& ctx) {
  const double s0 = ctx.delay->phi(anchor_time);
  if (t < s0) throw PredictorError("prediction requested before the anchor window start");
  if (!ctx.u->covers(s0)) throw PredictorError("u history does not cover the predictor window");

  std::vector<double> knots{s0};
  std::vector<Vector> values{anchor_state};
  const auto& times = p_history.times();
  for (auto it = std::upper_bound(times.begin(), times.end(), s0); it != times.end() && *it < t;
       ++it) {
    knots.push_back(*it);
    values.push_back(p_history.values()[static_cast<std::size_t>(it - times.begin())]);
  }

  Vector p = anchor_state;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double sa = knots[k], sb = knots[k + 1];
    const Vector ua = ctx.u->sample(sa);
    const Vector ga = ctx.delay->sigma_dot(sa, ctx.h) * ctx.model->f(values[k], ua);
    const Vector gb = ctx.delay->sigma_dot(sb, ctx.h) * ctx.model->f(values[k + 1], ua);
    p += 0.5 * (sb - sa) * (ga + gb);
  }
  const double last = knots.back();
  if (t > last) p += (t - last) * detail::predictor_rate(ctx, last, values.back());
  return p;
}

/// Linear closed form
///   p(t) = e^{A(sigma(t)-tau)} x(tau)
///        + \int_{phi(tau)}^t sigma'(s) e^{A(sigma(t)-sigma(s))} B u(s) ds,
/// integrated exactly per constant piece of u after substituting r = sigma(s).
inline Vector predict_linear(double t, double anchor_time, const Vector& anchor_state,
                             const PredictorContext& ctx) {
  if (ctx.linear == nullptr) throw PredictorError("linear predictor requires a linear system");
  const LinearSystem& sys = *ctx.linear;
  const double s0 = ctx.delay->phi(anchor_time);
  if (t < s0) throw PredictorError("prediction requested before the anchor window start");
  if (!ctx.u->covers(s0)) throw PredictorError("u history does not cover the predictor window");

  const double sigma_t = ctx.delay->sigma(t);
  std::vector<double> breaks{s0};
  const auto& times = ctx.u->times();
  for (auto it = std::upper_bound(times.begin(), times.end(), s0); it != times.end() && *it < t;
       ++it)
    breaks.push_back(*it);
  breaks.push_back(t);

  // G(theta) = \int_0^theta e^{A s} ds B at theta_k = sigma(t) - sigma(break_k).
  std::vector<Matrix> g(breaks.size());
  Vector p;
  for (std::size_t k = 0; k < breaks.size(); ++k) {
    const double r = k == 0 ? anchor_time : (k + 1 == breaks.size() ? sigma_t : ctx.delay->sigma(breaks[k]));
    const auto [e, gk] = linalg::expm_with_input_integral(sys.A(), sys.B(), sigma_t - r);
    if (k == 0) p = e * anchor_state;
    g[k] = gk;
  }
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    if (breaks[k + 1] <= breaks[k]) continue;
    p += (g[k] - g[k + 1]) * ctx.u->sample(breaks[k]);
  }
  return p;
}

/// Per-run predictor: tracks the anchoring delivery, keeps the p history
/// and caches the closed-loop flow between deliveries.
class Predictor {
 public:
  static constexpr double kDivergenceLimit = 1e12;

  Predictor(PredictorMethod method, PredictorContext ctx)
      : method_(method), ctx_(ctx), p_history_(Interpolation::PiecewiseLinear) {
    if (ctx_.model == nullptr || ctx_.delay == nullptr || ctx_.u == nullptr)
      throw ConfigError("predictor context is incomplete");
    if (!(ctx_.h > 0.0)) throw ConfigError("predictor step must be positive");
    if (method_ == PredictorMethod::LinearClosedForm && ctx_.linear == nullptr)
      throw ConfigError("linear-closed-form predictor requires a linear system");
  }

  PredictorMethod method() const { return method_; }
  std::optional<std::size_t> anchor_index() const { return anchor_index_; }
  double anchor_time() const { return anchor_time_; }
  const Vector& anchor_state() const { return anchor_state_; }
  const TimedSignal& p_history() const { return p_history_; }
  bool diverged() const { return diverged_; }

  /// Re-anchors on a newer delivered state. Older or repeated indices are
  /// ignored; the open-loop method keeps its first anchor forever.
  bool set_anchor(std::size_t index, double tau, const Vector& x_tau) {
    if (anchor_index_ && index <= *anchor_index_) return false;
    if (anchor_index_ && method_ == PredictorMethod::OpenLoop) return false;
    anchor_index_ = index;
    anchor_time_ = tau;
    anchor_state_ = x_tau;
    flow_ = detail::PredictorFlow(ctx_.delay->phi(tau), x_tau);
    return true;
  }

  /// Fills p_history with the prediction on the lattice phi(tau) + j h,
  /// strictly before `until`, from the current anchor. Used once, before
  /// the first prediction, for the window preceding the first event.
  void fill_back_extension(double until) {
    require_anchor();
    const double s0 = ctx_.delay->phi(anchor_time_);
    detail::PredictorFlow flow(s0, anchor_state_);
    for (std::size_t j = 0;; ++j) {
      const double s = s0 + static_cast<double>(j) * ctx_.h;
      if (s >= until) break;
      if (!p_history_.empty() && s <= p_history_.back_time()) continue;
      Vector p = method_ == PredictorMethod::LinearClosedForm
                     ? predict_linear(s, anchor_time_, anchor_state_, ctx_)
                     : flow.advance_to(s, ctx_);
      p_history_.append(s, std::move(p));
    }
  }

  Vector predict(double t) {
    require_anchor();
    Vector p;
    switch (method_) {
      case PredictorMethod::OpenLoop:
      case PredictorMethod::ClosedLoop:
        p = flow_.advance_to(t, ctx_);
        break;
      case PredictorMethod::SemiClosedLoop:
        p = predict_semi_closed(t, anchor_time_, anchor_state_, p_history_, ctx_);
        break;
      case PredictorMethod::LinearClosedForm:
        p = predict_linear(t, anchor_time_, anchor_state_, ctx_);
        break;
    }
    if (!p.allFinite() || p.cwiseAbs().maxCoeff() > kDivergenceLimit) diverged_ = true;
    if (p_history_.empty() || t > p_history_.back_time()) p_history_.append(t, p);
    if (method_ == PredictorMethod::SemiClosedLoop)
      p_history_.prune_before(ctx_.delay->phi(anchor_time_) - ctx_.h);
    return p;
  }

 private:
  void require_anchor() const {
    if (!anchor_index_) throw PredictorError("no delivered state anchors the prediction yet");
  }

  PredictorMethod method_;
  PredictorContext ctx_;
  TimedSignal p_history_;
  detail::PredictorFlow flow_;
  std::optional<std::size_t> anchor_index_;
  double anchor_time_ = 0.0;
  Vector anchor_state_;
  bool diverged_ = false;
};

}  // namespace etpf
