#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "etpf/system_model.hpp"
#include "etpf/types.hpp"

namespace etpf {

enum class TriggerMode { Nonlinear, Linear, FixedRatio };

inline std::string_view to_string(TriggerMode m) {
  switch (m) {
    case TriggerMode::Nonlinear: return "nonlinear";
    case TriggerMode::Linear: return "linear";
    case TriggerMode::FixedRatio: return "fixed-ratio";
  }
  return "?";
}

inline TriggerMode parse_trigger_mode(std::string_view s) {
  if (s == "nonlinear") return TriggerMode::Nonlinear;
  if (s == "linear") return TriggerMode::Linear;
  if (s == "fixed-ratio") return TriggerMode::FixedRatio;
  throw ConfigError("unknown trigger mode '" + std::string(s) + "'");
}

struct TriggerConfig {
  double theta = 0.5;
  TriggerMode mode = TriggerMode::Nonlinear;
  std::optional<double> rho_bar;

  void validate() const {
    if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("trigger.theta must lie in (0, 1)");
    if (mode == TriggerMode::FixedRatio && !(rho_bar && *rho_bar > 0.0))
      throw ConfigError("trigger.rho_bar must be positive in fixed-ratio mode");
  }
};

struct EventLog {
  std::vector<double> event_times;
  std::vector<Vector> event_controls;
  std::vector<double> p_norms;
  std::vector<double> e_pre_reset;

  std::size_t size() const { return event_times.size(); }

  /// Smallest t_{k+1} - t_k; infinity with fewer than two events.
  double min_dwell_observed() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < event_times.size(); ++k)
      best = std::min(best, event_times[k] - event_times[k - 1]);
    return best;
  }

  void record(double t, Vector u, double p_norm, double e_norm) {
    if (!event_times.empty() && !(t > event_times.back()))
      throw std::invalid_argument("event times must be strictly increasing");
    event_times.push_back(t);
    event_controls.push_back(std::move(u));
    p_norms.push_back(p_norm);
    e_pre_reset.push_back(e_norm);
  }
};

/// e = p(t_k) - p(t); zero before the first event.
inline Vector triggering_error(const std::optional<Vector>& p_at_last_event, const Vector& p_now) {
  if (!p_at_last_event) return Vector::Zero(p_now.size());
  return *p_at_last_event - p_now;
}

/// Coefficient c with threshold = c |p| in linear mode:
/// lambda_min(Q) sqrt(theta) / (4 |PB| |K|).
inline double linear_threshold_coefficient(double lambda_min_Q, double theta, double pb_norm,
                                           double k_norm) {
  return lambda_min_Q * std::sqrt(theta) / (4.0 * pb_norm * k_norm);
}

/// Admissible |e| at prediction p.
///   nonlinear:   rho^{-1}(theta gamma(|p|)) / (2 L_K)
///   linear:      lambda_min(Q) sqrt(theta) / (4 |PB| |K|) |p|
///   fixed-ratio: rho_bar |p|
inline double threshold(const TriggerConfig& cfg, const ISSCertificate* cert, double lipschitz_K,
                        const Vector& p) {
  const double r = p.norm();
  switch (cfg.mode) {
    case TriggerMode::FixedRatio:
      if (!cfg.rho_bar) throw ConfigError("fixed-ratio trigger requires rho_bar");
      return *cfg.rho_bar * r;
    case TriggerMode::Nonlinear:
      if (cert == nullptr || !cert->rho_inv || !cert->gamma)
        throw ConfigError("nonlinear trigger requires an ISS certificate");
      if (!(lipschitz_K > 0.0)) throw ConfigError("nonlinear trigger requires L_K > 0");
      return cert->rho_inv(cfg.theta * cert->gamma(r)) / (2.0 * lipschitz_K);
    case TriggerMode::Linear:
      if (cert == nullptr || !cert->quadratic)
        throw ConfigError("linear trigger requires a quadratic (linear-system) certificate");
      return linear_threshold_coefficient(cert->quadratic->lambda_min_Q, cfg.theta,
                                          cert->quadratic->pb_norm, lipschitz_K) *
             r;
  }
  return 0.0;
}

struct FireDecision {
  bool fired = false;
  double e_norm = 0.0;
  double threshold = 0.0;
};

/// Fires iff |e| >= threshold(p) and e != 0. On fire the event is logged;
/// the caller resets e by storing p(t_k) = p(t).
inline FireDecision check_and_fire(const TriggerConfig& cfg, const ISSCertificate* cert,
                                   double lipschitz_K, const Vector& e, const Vector& p, double t,
                                   const Vector& u_on_fire, EventLog& log) {
  FireDecision d;
  d.e_norm = e.norm();
  d.threshold = threshold(cfg, cert, lipschitz_K, p);
  d.fired = d.e_norm > 0.0 && d.e_norm >= d.threshold;
  if (d.fired) log.record(t, u_on_fire, p.norm(), d.e_norm);
  return d;
}

/// Closed-form time for r' = (1 + r)(c + a r), r(0) = 0, to reach R:
/// ln((c + R a) / (c + R c)) / (a - c).
inline double min_dwell(double a, double c, double R) {
  if (!(a > 0.0) || !(c > 0.0) || !(R > 0.0))
    throw DomainError("min_dwell requires a, c, R > 0");
  if (a == c) return std::log1p(R) / c;  // limit a -> c of the closed form
  return std::log((c + R * a) / (c + R * c)) / (a - c);
}

/// Same quantity by RK4 integration of r' = (1 + r)(c + a r) until r = R,
/// with the crossing step located by bisection.
inline double min_dwell_numeric(double a, double c, double R, std::size_t steps_hint = 20000) {
  if (!(a > 0.0) || !(c > 0.0) || !(R > 0.0))
    throw DomainError("min_dwell_numeric requires a, c, R > 0");
  auto rhs = [a, c](double r) { return (1.0 + r) * (c + a * r); };
  auto rk4 = [&](double r, double dt) {
    const double k1 = rhs(r);
    const double k2 = rhs(r + 0.5 * dt * k1);
    const double k3 = rhs(r + 0.5 * dt * k2);
    const double k4 = rhs(r + dt * k3);
    return r + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };
  // initial rate c bounds the crossing time by R / c
  const double dt = (R / c) / static_cast<double>(steps_hint);
  double t = 0.0, r = 0.0;
  for (;;) {
    const double next = rk4(r, dt);
    if (next >= R) break;
    r = next;
    t += dt;
  }
  double lo = 0.0, hi = dt;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * (1.0 + t); ++it) {
    const double mid = 0.5 * (lo + hi);
    (rk4(r, mid) < R ? lo : hi) = mid;
  }
  return t + 0.5 * (lo + hi);
}

/// Lipschitz constant of G(r) = gamma^{-1}(rho(r) / theta) on [0, r_max],
/// from sampled difference quotients.
inline double lipschitz_gain_map(const ISSCertificate& cert, double theta, double r_max,
                                 std::size_t samples = 2000) {
  if (!(r_max > 0.0)) r_max = 1.0;
  auto G = [&](double r) { return cert.gamma_inv(cert.rho(r) / theta); };
  double best = 0.0;
  double prev_r = 0.0, prev_g = G(0.0);
  for (std::size_t k = 1; k <= samples; ++k) {
    const double r = r_max * static_cast<double>(k) / static_cast<double>(samples);
    const double g = G(r);
    best = std::max(best, std::abs(g - prev_g) / (r - prev_r));
    prev_r = r;
    prev_g = g;
  }
  return best;
}

/// Constants of the inter-event bound: a = M2 L_f L_K, c = M2 L_f (1 + L_K),
/// R the |e|/|p| ratio at which the trigger (or its sufficient form) fires.
struct DwellConstants {
  double a = 0.0;
  double c = 0.0;
  double R = 0.0;
  double delta() const { return min_dwell(a, c, R); }
};

inline DwellConstants dwell_constants(double M2, double lipschitz_f, double lipschitz_K, double R) {
  return {M2 * lipschitz_f * lipschitz_K, M2 * lipschitz_f * (1.0 + lipschitz_K), R};
}

}  // namespace etpf
