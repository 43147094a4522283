#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "etpf/delay_channel.hpp"
#include "etpf/signal_history.hpp"
#include "etpf/system_model.hpp"
#include "etpf/types.hpp"

namespace etpf {

enum class MonitorForm { Sup, Integral };

inline MonitorForm parse_monitor_form(std::string_view s) {
  if (s == "sup") return MonitorForm::Sup;
  if (s == "integral") return MonitorForm::Integral;
  throw ConfigError("unknown monitor form '" + std::string(s) + "'");
}

inline std::string_view to_string(MonitorForm f) {
  return f == MonitorForm::Sup ? "sup" : "integral";
}

struct MonitorConfig {
  double b = 10.0;
  MonitorForm form = MonitorForm::Sup;
  std::size_t stride = 10;  // 0 disables the monitor

  void validate() const {
    if (!(b > 0.0)) throw ConfigError("monitor.b must be positive");
  }
};

/// w(t) = u(t) - K(p(t) + e(t)).
inline Vector compute_w(const SystemModel& model, const Vector& u, const Vector& p,
                        const Vector& e) {
  return u - model.feedback(p + e);
}

/// L over the window [t, sigma(t)] sampled every h (plus the right end):
///   sup form:      max e^{b(tau-t)} |w(phi(tau))|
///   integral form: trapezoid of e^{b(tau-t)} |w(phi(tau))|^2
inline double compute_L(const MonitorConfig& cfg, const TimedSignal& w_history,
                        const ActuationDelay& delay, double t, double sigma_t, double h) {
  std::vector<double> taus;
  for (std::size_t j = 0;; ++j) {
    const double tau = t + static_cast<double>(j) * h;
    if (tau >= sigma_t) break;
    taus.push_back(tau);
  }
  taus.push_back(sigma_t);

  double sup = 0.0, integral = 0.0, prev_val = 0.0;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    const double s = delay.phi(taus[k]);
    if (!w_history.covers(s))
      throw OutOfRangeError("monitor: w history does not cover phi(tau) = " + std::to_string(s));
    const double wn = w_history.sample(s).norm();
    const double weight = std::exp(cfg.b * (taus[k] - t));
    if (cfg.form == MonitorForm::Sup) {
      sup = std::max(sup, weight * wn);
    } else {
      const double val = weight * wn * wn;
      if (k > 0) integral += 0.5 * (taus[k] - taus[k - 1]) * (val + prev_val);
      prev_val = val;
    }
  }
  return cfg.form == MonitorForm::Sup ? sup : integral;
}

/// \int_0^upper rho(r) / r dr by composite 5-point Gauss-Legendre.
inline double rho_over_r_integral(const ISSCertificate& cert, double upper,
                                  std::size_t panels = 64) {
  if (!(upper > 0.0)) return 0.0;
  static constexpr std::array<double, 5> nodes{0.0, -0.5384693101056831, 0.5384693101056831,
                                               -0.9061798459386640, 0.9061798459386640};
  static constexpr std::array<double, 5> weights{0.5688888888888889, 0.4786286704993665,
                                                 0.4786286704993665, 0.2369268850561891,
                                                 0.2369268850561891};
  const double width = upper / static_cast<double>(panels);
  double total = 0.0;
  for (std::size_t k = 0; k < panels; ++k) {
    const double mid = (static_cast<double>(k) + 0.5) * width;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const double r = mid + 0.5 * width * nodes[q];
      total += 0.5 * width * weights[q] * cert.rho(r) / r;
    }
  }
  return total;
}

/// Sup form: S(x) + (2/b) \int_0^{2L} rho(r)/r dr.
/// Integral form: x'Px + 4 |PB|^2 / lambda_min(Q) L.
inline double compute_V(const ISSCertificate& cert, const Vector& x, double L,
                        const MonitorConfig& cfg) {
  if (L < 0.0) throw DomainError("compute_V: L must be nonnegative");
  if (cfg.form == MonitorForm::Integral) {
    if (!cert.quadratic) throw ConfigError("integral-form V requires a linear-system certificate");
    const auto& q = *cert.quadratic;
    return x.dot(q.P * x) + 4.0 * q.pb_norm * q.pb_norm / q.lambda_min_Q * L;
  }
  const double tail = cert.rho_quadratic ? *cert.rho_quadratic * (2.0 * L) * (2.0 * L) / 2.0
                                         : rho_over_r_integral(cert, 2.0 * L);
  return cert.S(x) + 2.0 / cfg.b * tail;
}

/// Guaranteed exponential rate (2 - theta) lambda_min(Q) / (4 lambda_max(P)).
inline double linear_decay_rate(const ISSCertificate& cert, double theta) {
  if (!cert.quadratic) throw ConfigError("decay rate requires a linear-system certificate");
  return (2.0 - theta) * cert.quadratic->lambda_min_Q / (4.0 * cert.quadratic->lambda_max_P);
}

struct DecayReport {
  double max_positive_increment = 0.0;
  std::size_t samples = 0;
  bool at_equilibrium = false;
  std::optional<double> slope;  // least-squares d(log V)/dt
  std::optional<double> mu;
  std::optional<bool> rate_ok;  // slope <= -mu (1 - 0.1)

  std::string text() const {
    std::ostringstream os;
    os.precision(10);
    os << "decay_report:\n";
    os << "  samples: " << samples << "\n";
    os << "  max_positive_V_increment: " << max_positive_increment << "\n";
    if (at_equilibrium) os << "  status: at equilibrium (V == 0)\n";
    if (slope) os << "  log_V_slope: " << *slope << "\n";
    if (mu) os << "  guaranteed_rate_mu: " << *mu << "\n";
    if (rate_ok) os << "  rate_check: " << (*rate_ok ? "pass" : "fail") << "\n";
    return os.str();
  }
};

/// Positive V increments after t0 and, when `mu` is given, the log-V slope
/// over [t0, T] compared with -mu at 10% tolerance.
inline DecayReport decay_report(const std::vector<double>& times, const std::vector<double>& V,
                                double t0, std::optional<double> mu = std::nullopt) {
  DecayReport r;
  r.mu = mu;
  double prev = std::nan("");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n_log = 0;
  bool any_positive = false;
  for (std::size_t i = 0; i < times.size() && i < V.size(); ++i) {
    if (times[i] < t0 || std::isnan(V[i])) continue;
    ++r.samples;
    if (!std::isnan(prev)) r.max_positive_increment = std::max(r.max_positive_increment, V[i] - prev);
    prev = V[i];
    if (V[i] > 0.0) {
      any_positive = true;
      const double y = std::log(V[i]);
      sx += times[i];
      sy += y;
      sxx += times[i] * times[i];
      sxy += times[i] * y;
      ++n_log;
    }
  }
  r.at_equilibrium = r.samples > 0 && !any_positive;
  if (n_log >= 2) {
    const double n = static_cast<double>(n_log);
    const double den = n * sxx - sx * sx;
    if (den > 0.0) r.slope = (n * sxy - sx * sy) / den;
  }
  if (mu && r.slope) r.rate_ok = *r.slope <= -*mu * (1.0 - 0.1);
  return r;
}

}  // namespace etpf
