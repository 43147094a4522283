#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "etpf/types.hpp"

namespace etpf {

enum class Interpolation { PiecewiseConstant, PiecewiseLinear };

/// Append-only buffer of time-stamped vectors.
///
/// Piecewise-constant signals jump at their stamps and hold the new value
/// (u(t) = u(t_k) on [t_k, t_{k+1})), and may be sampled past the last
/// stamp. Piecewise-linear signals interpolate and are bounded by their
/// first and last stamps.
class TimedSignal {
 public:
  static constexpr double kStampTolerance = 1e-12;

  explicit TimedSignal(Interpolation mode = Interpolation::PiecewiseConstant) : mode_(mode) {}

  Interpolation mode() const { return mode_; }
  bool empty() const { return times_.empty(); }
  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Vector>& values() const { return values_; }
  double front_time() const { return times_.front(); }
  double back_time() const { return times_.back(); }
  const Vector& back_value() const { return values_.back(); }

  void append(double t, Vector v) {
    if (!times_.empty()) {
      if (!(t > times_.back()))
        throw std::invalid_argument("TimedSignal: stamps must be strictly increasing");
      if (v.size() != values_.back().size())
        throw std::invalid_argument("TimedSignal: value dimension changed");
    }
    times_.push_back(t);
    values_.push_back(std::move(v));
  }

  /// Overwrites the newest value in place, keeping its stamp.
  void replace_back(Vector v) {
    if (times_.empty()) throw std::invalid_argument("TimedSignal: replace_back on an empty signal");
    if (v.size() != values_.back().size())
      throw std::invalid_argument("TimedSignal: value dimension changed");
    values_.back() = std::move(v);
  }

  bool covers(double t) const {
    if (times_.empty() || t < times_.front()) return false;
    return mode_ == Interpolation::PiecewiseConstant || t <= times_.back();
  }

  Vector sample(double t) const {
    if (!covers(t))
      throw OutOfRangeError("TimedSignal: sample at t=" + std::to_string(t) +
                            " outside the covered span");
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t j = static_cast<std::size_t>(it - times_.begin()) - 1;  // times_[j] <= t
    if (mode_ == Interpolation::PiecewiseConstant) {
      // a query rounded just below a stamp belongs to that stamp
      if (j + 1 < times_.size() && times_[j + 1] - t <= kStampTolerance * (1.0 + std::abs(t))) ++j;
      return values_[j];
    }
    if (j + 1 == times_.size() || times_[j] == t) return values_[j];
    const double w = (t - times_[j]) / (times_[j + 1] - times_[j]);
    return (1.0 - w) * values_[j] + w * values_[j + 1];
  }

  /// Grid max of e^{b (tau - t)} |value(tau)| over stamps in [t, horizon_end]
  /// and both window endpoints. Empty window or buffer gives 0.
  double weighted_sup(double t, double horizon_end, double b) const {
    if (times_.empty() || horizon_end < t) return 0.0;
    double best = 0.0;
    auto consider = [&](double tau) {
      if (!covers(tau)) return;
      best = std::max(best, std::exp(b * (tau - t)) * sample(tau).norm());
    };
    consider(t);
    consider(horizon_end);
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    for (; it != times_.end() && *it <= horizon_end; ++it) {
      const std::size_t j = static_cast<std::size_t>(it - times_.begin());
      best = std::max(best, std::exp(b * (*it - t)) * values_[j].norm());
    }
    return best;
  }

  /// \int_a^b transform(value(s)) ds on the stored grid: trapezoid per
  /// segment for linear signals, exact rectangles for constant ones.
  Vector integrate(double a, double b,
                   const std::function<Vector(const Vector&)>& transform = {}) const {
    if (a > b) throw std::invalid_argument("TimedSignal::integrate requires a <= b");
    if (!covers(a) || !covers(b))
      throw OutOfRangeError("TimedSignal::integrate: [" + std::to_string(a) + ", " +
                            std::to_string(b) + "] not covered");
    auto apply = [&](const Vector& v) -> Vector { return transform ? transform(v) : v; };
    std::vector<double> knots{a};
    for (auto it = std::upper_bound(times_.begin(), times_.end(), a);
         it != times_.end() && *it < b; ++it)
      knots.push_back(*it);
    knots.push_back(b);

    Vector total = Vector::Zero(apply(sample(a)).size());
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
      const double len = knots[k + 1] - knots[k];
      if (len <= 0.0) continue;
      if (mode_ == Interpolation::PiecewiseConstant) {
        total += len * apply(sample(knots[k]));
      } else {
        total += 0.5 * len * (apply(sample(knots[k])) + apply(sample(knots[k + 1])));
      }
    }
    return total;
  }

  /// Drops stamps strictly older than `cutoff`, keeping the last stamp at or
  /// before it so that sampling at `cutoff` stays valid.
  void prune_before(double cutoff) {
    auto it = std::upper_bound(times_.begin(), times_.end(), cutoff);
    if (it == times_.begin()) return;
    const auto keep = static_cast<std::ptrdiff_t>(it - times_.begin()) - 1;
    if (keep <= 0) return;
    times_.erase(times_.begin(), times_.begin() + keep);
    values_.erase(values_.begin(), values_.begin() + keep);
  }

 private:
  Interpolation mode_;
  std::vector<double> times_;
  std::vector<Vector> values_;
};

}  // namespace etpf
