#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "etpf/types.hpp"

namespace etpf {

/// Actuation delay: a control issued at controller time s reaches the plant
/// at sigma(s), i.e. the plant at time t applies the control issued at phi(t).
///
/// Bounds follow the usual convention: t - phi(t) <= M0 and
/// m2 <= phi'(t) <= M1, with the reciprocal constants for sigma.
struct ActuationDelay {
  static constexpr double kInversionTolerance = 1e-12;

  std::string name;
  std::function<double(double)> phi;
  std::function<double(double)> phi_dot;
  double M0 = 0.0;
  double M1 = 1.0;
  double m2 = 1.0;

  double m0() const { return 1.0 / M0; }
  double m1() const { return 1.0 / M1; }
  double M2() const { return 1.0 / m2; }
  double delay_at(double t) const { return t - phi(t); }

  /// sigma = phi^{-1}: bracket [t, t + 2 M0], then Newton steps safeguarded
  /// by bisection until |phi(s) - t| <= 1e-12 (1 + |t|).
  double sigma(double t) const {
    const double tol = kInversionTolerance * (1.0 + std::abs(t));
    if (t < phi(0.0) - tol)
      throw DomainError("sigma(t) requires t >= phi(0)");
    double lo = t;
    double hi = t + 2.0 * M0;
    double f_lo = phi(lo) - t;
    double f_hi = phi(hi) - t;
    if (std::abs(f_lo) <= tol) return lo;
    if (std::abs(f_hi) <= tol) return hi;
    if (f_lo > 0.0 || f_hi < 0.0)
      throw ChannelError("sigma: cannot bracket phi^{-1}(" + std::to_string(t) +
                         "), delay bounds violated");
    double s = t + delay_at(t);  // exact for constant delays
    if (!(s > lo && s < hi)) s = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const double fs = phi(s) - t;
      if (std::abs(fs) <= tol) return s;
      if (fs < 0.0) {
        lo = s;
      } else {
        hi = s;
      }
      const double d = phi_dot ? phi_dot(s) : 0.0;
      double next = d > 0.0 ? s - fs / d : lo - 1.0;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      s = next;
      if (hi - lo <= std::numeric_limits<double>::epsilon() * (1.0 + std::abs(s))) return s;
    }
    return s;
  }

  /// Centered difference of sigma with the given spacing; one-sided when the
  /// left point falls before phi(0).
  double sigma_dot(double t, double spacing) const {
    if (t - spacing >= phi(0.0)) return (sigma(t + spacing) - sigma(t - spacing)) / (2.0 * spacing);
    return (sigma(t + spacing) - sigma(t)) / spacing;
  }
};

inline double sigma(const ActuationDelay& delay, double t) { return delay.sigma(t); }

/// phi(t) = t - D.
inline ActuationDelay constant_delay(double D) {
  if (!(D >= 0.0)) throw ConfigError("constant delay must be nonnegative");
  ActuationDelay d;
  d.name = "constant";
  d.phi = [D](double t) { return t - D; };
  d.phi_dot = [](double) { return 1.0; };
  d.M0 = D;
  d.M1 = 1.0;
  d.m2 = 1.0;
  return d;
}

/// phi(t) = t - ((t-5)^2 + 2) / (2 (t-5)^2 + 2).
inline ActuationDelay example1_delay() {
  ActuationDelay d;
  d.name = "example1";
  d.phi = [](double t) {
    const double y = t - 5.0;
    return t - (y * y + 2.0) / (2.0 * y * y + 2.0);
  };
  d.phi_dot = [](double t) {
    const double y = t - 5.0;
    const double den = y * y + 1.0;
    return 1.0 + y / (den * den);
  };
  d.M0 = 1.0;
  d.M1 = 1.0 + 3.0 * std::sqrt(3.0) / 16.0;
  d.m2 = 1.0 - 3.0 * std::sqrt(3.0) / 16.0;
  return d;
}

/// t - phi(t) = D + a sin(t).
inline ActuationDelay sinusoidal_delay(double D, double a) {
  if (!(D > std::abs(a))) throw ConfigError("sinusoidal delay requires D > |a|");
  ActuationDelay d;
  d.name = "sinusoidal";
  d.phi = [D, a](double t) { return t - D - a * std::sin(t); };
  d.phi_dot = [a](double t) { return 1.0 - a * std::cos(t); };
  d.M0 = D + std::abs(a);
  d.M1 = 1.0 + std::abs(a);
  d.m2 = 1.0 - std::abs(a);
  return d;
}

/// Piecewise-linear delay through (t, delay) points, held constant outside
/// the table. Bounds are derived from the table itself.
inline ActuationDelay table_delay(std::vector<std::pair<double, double>> points) {
  if (points.empty()) throw ConfigError("delay table is empty");
  std::sort(points.begin(), points.end());
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].first <= points[i - 1].first)
      throw ConfigError("delay table times must be strictly increasing");
  for (const auto& [t, v] : points)
    if (!(v >= 0.0)) throw ConfigError("delay table values must be nonnegative");

  auto shared = std::make_shared<const std::vector<std::pair<double, double>>>(std::move(points));
  auto segment = [shared](double t) -> std::size_t {
    const auto& p = *shared;
    auto it = std::upper_bound(p.begin(), p.end(), t,
                               [](double v, const auto& pt) { return v < pt.first; });
    return static_cast<std::size_t>(it - p.begin());
  };
  auto delay_fn = [shared, segment](double t) {
    const auto& p = *shared;
    const std::size_t j = segment(t);
    if (j == 0) return p.front().second;
    if (j == p.size()) return p.back().second;
    const auto& [t0, d0] = p[j - 1];
    const auto& [t1, d1] = p[j];
    return d0 + (d1 - d0) * (t - t0) / (t1 - t0);
  };
  auto slope_fn = [shared, segment](double t) {
    const auto& p = *shared;
    const std::size_t j = segment(t);
    if (j == 0 || j == p.size()) return 0.0;
    return (p[j].second - p[j - 1].second) / (p[j].first - p[j - 1].first);
  };

  ActuationDelay d;
  d.name = "custom-table";
  d.phi = [delay_fn](double t) { return t - delay_fn(t); };
  d.phi_dot = [slope_fn](double t) { return 1.0 - slope_fn(t); };
  double max_delay = 0.0, min_rate = 1.0, max_rate = 1.0;
  const auto& p = *shared;
  for (std::size_t i = 0; i < p.size(); ++i) {
    max_delay = std::max(max_delay, p[i].second);
    if (i > 0) {
      const double rate = 1.0 - (p[i].second - p[i - 1].second) / (p[i].first - p[i - 1].first);
      min_rate = std::min(min_rate, rate);
      max_rate = std::max(max_rate, rate);
    }
  }
  if (!(min_rate > 0.0)) throw ConfigError("delay table makes phi non-increasing");
  d.M0 = max_delay;
  d.M1 = max_rate;
  d.m2 = min_rate;
  return d;
}

/// Reads "t,delay" rows; blank lines and lines starting with '#' or a
/// non-numeric header are skipped.
inline ActuationDelay table_delay_from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open delay table: " + path);
  std::vector<std::pair<double, double>> points;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double t = 0.0, v = 0.0;
    if (!(row >> t >> v)) {
      if (points.empty() && lineno == 1) continue;  // header
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 't,delay'");
    }
    points.emplace_back(t, v);
  }
  return table_delay(std::move(points));
}

struct DelayBoundsReport {
  double max_delay = 0.0;
  double min_delay = std::numeric_limits<double>::infinity();
  double min_rate = std::numeric_limits<double>::infinity();
  double max_rate = -std::numeric_limits<double>::infinity();
  /// Smallest slack over all checks; negative means a violated bound.
  double worst_margin = std::numeric_limits<double>::infinity();
  bool passed = true;
};

/// Checks t - phi(t) in (0, M0] on the grid and finite-difference slopes of
/// phi in [m2, M1] between consecutive grid points.
inline DelayBoundsReport verify_delay_bounds(const ActuationDelay& delay,
                                             const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("verify_delay_bounds: empty grid");
  constexpr double kTol = 1e-12;
  DelayBoundsReport r;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw ConfigError("verify_delay_bounds: grid must be increasing");
    const double d = delay.delay_at(grid[i]);
    r.max_delay = std::max(r.max_delay, d);
    r.min_delay = std::min(r.min_delay, d);
    r.worst_margin = std::min({r.worst_margin, delay.M0 - d, d});
    if (i > 0) {
      const double rate =
          (delay.phi(grid[i]) - delay.phi(grid[i - 1])) / (grid[i] - grid[i - 1]);
      r.min_rate = std::min(r.min_rate, rate);
      r.max_rate = std::max(r.max_rate, rate);
      r.worst_margin = std::min({r.worst_margin, rate - delay.m2, delay.M1 - rate});
    }
  }
  r.passed = r.min_delay > 0.0 && r.max_delay <= delay.M0 + kTol &&
             (grid.size() < 2 || (r.min_rate >= delay.m2 - kTol && r.max_rate <= delay.M1 + kTol));
  return r;
}

/// Sensing-channel delay: fixed, or i.i.d. Gaussian per transmission
/// truncated to nonnegative values.
struct SensingDelayModel {
  enum class Kind { Fixed, Gaussian };
  Kind kind = Kind::Fixed;
  double fixed = 0.0;
  double mean = 0.0;
  double stddev = 0.0;

  static SensingDelayModel constant(double d) { return {Kind::Fixed, d, 0.0, 0.0}; }
  static SensingDelayModel gaussian(double mu, double sd) { return {Kind::Gaussian, 0.0, mu, sd}; }
};

struct Delivery {
  std::size_t index = 0;  // transmission index l
  double transmit_time = 0.0;
  double delivery_time = 0.0;
};

/// Plant-side transmissions tau_l and their delivery times at the
/// controller. Delays are drawn eagerly from the seed at construction;
/// deliveries are re-sequenced by arrival time.
class SensingSchedule {
 public:
  SensingSchedule(std::vector<double> transmit_times, SensingDelayModel model, std::uint64_t seed)
      : model_(model), seed_(seed) {
    if (transmit_times.empty()) throw ConfigError("sensing schedule needs at least one transmission");
    if (transmit_times.front() != 0.0) throw ConfigError("first transmission must be at t = 0");
    for (std::size_t i = 1; i < transmit_times.size(); ++i)
      if (transmit_times[i] < transmit_times[i - 1])
        throw ConfigError("transmission times must be nondecreasing");
    if (model.kind == SensingDelayModel::Kind::Fixed && !(model.fixed >= 0.0))
      throw ConfigError("sensing delay must be nonnegative");
    if (model.kind == SensingDelayModel::Kind::Gaussian && !(model.stddev >= 0.0))
      throw ConfigError("sensing delay standard deviation must be nonnegative");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(model.mean, model.stddev);
    by_index_.reserve(transmit_times.size());
    for (std::size_t l = 0; l < transmit_times.size(); ++l) {
      double d = model.fixed;
      if (model.kind == SensingDelayModel::Kind::Gaussian) {
        if (model.stddev == 0.0) {
          d = std::max(0.0, model.mean);
        } else {
          int tries = 0;
          do {
            d = normal(rng);
          } while (d < 0.0 && ++tries < 1000);
          d = std::max(0.0, d);
        }
      }
      by_index_.push_back({l, transmit_times[l], transmit_times[l] + d});
    }
    by_time_ = by_index_;
    std::stable_sort(by_time_.begin(), by_time_.end(), [](const Delivery& a, const Delivery& b) {
      return a.delivery_time < b.delivery_time;
    });
    newest_.reserve(by_time_.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < by_time_.size(); ++i) {
      best = i == 0 ? by_time_[i].index : std::max(best, by_time_[i].index);
      newest_.push_back(best);
    }
  }

  /// Periodic transmissions tau_l = l * delta_tau covering [0, horizon].
  static SensingSchedule periodic(double delta_tau, double horizon, SensingDelayModel model,
                                  std::uint64_t seed) {
    if (!(delta_tau > 0.0)) throw ConfigError("delta_tau must be positive");
    std::vector<double> taus;
    for (std::size_t l = 0;; ++l) {
      const double tau = static_cast<double>(l) * delta_tau;
      if (tau > horizon) break;
      taus.push_back(tau);
    }
    return SensingSchedule(std::move(taus), model, seed);
  }

  const std::vector<Delivery>& by_index() const { return by_index_; }
  const std::vector<Delivery>& by_delivery_time() const { return by_time_; }
  std::uint64_t seed() const { return seed_; }
  const SensingDelayModel& delay_model() const { return model_; }

  std::vector<double> delivery_times() const {
    std::vector<double> out;
    out.reserve(by_index_.size());
    for (const auto& d : by_index_) out.push_back(d.delivery_time);
    return out;
  }

  double first_delivery_time() const { return by_time_.front().delivery_time; }

  /// Newest transmission index delivered by time t (inclusive), if any.
  std::optional<std::size_t> latest_delivered_index(double t) const {
    auto it = std::upper_bound(by_time_.begin(), by_time_.end(), t,
                               [](double v, const Delivery& d) { return v < d.delivery_time; });
    if (it == by_time_.begin()) return std::nullopt;
    return newest_[static_cast<std::size_t>(it - by_time_.begin()) - 1];
  }

 private:
  SensingDelayModel model_;
  std::uint64_t seed_;
  std::vector<Delivery> by_index_;
  std::vector<Delivery> by_time_;
  std::vector<std::size_t> newest_;
};

inline std::optional<std::size_t> latest_delivered_index(const SensingSchedule& sched, double t) {
  return sched.latest_delivered_index(t);
}

}  // namespace etpf
