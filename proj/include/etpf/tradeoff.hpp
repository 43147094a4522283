#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "etpf/linalg.hpp"
#include "etpf/system_model.hpp"
#include "etpf/types.hpp"

namespace etpf {

/// Constants of the linear communication/convergence trade-off, with
/// theta = nu^2 and Q = q I scaled out through P1 (A_cl' P1 + P1 A_cl = -I).
struct TradeoffConstants {
  double a = 0.0;  // M2 L_f L_K
  double c = 0.0;  // M2 L_f (1 + L_K)
  Matrix P1;
  double lam_max_P1 = 0.0;
  double PB1 = 0.0;  // |P1 B|
  double K_norm = 0.0;

  /// |P1 B| |K|, the scale of nu inside delta(nu).
  double gain() const { return PB1 * K_norm; }

  /// Trigger ratio |e|/|p| at which the linear trigger fires for Q = I,
  /// theta = nu^2: nu / (4 |P1 B| |K|).
  double trigger_ratio(double nu) const { return nu / (4.0 * gain()); }

  void validate() const {
    if (!(a > 0.0) || !(c > 0.0) || !(a < c))
      throw ConfigError("trade-off constants require 0 < a < c");
    if (!(lam_max_P1 > 0.0) || !(PB1 > 0.0) || !(K_norm > 0.0))
      throw ConfigError("trade-off norms must be positive");
  }

  static TradeoffConstants from_linear(const Matrix& A, const Matrix& B, const Matrix& K,
                                       double M2, std::optional<double> lipschitz_f = std::nullopt) {
    const Eigen::Index n = A.rows();
    LinearSystem unit(A, B, K, Matrix::Identity(n, n));
    TradeoffConstants k;
    const double lf = lipschitz_f.value_or(unit.default_lipschitz_f());
    const double lk = unit.k_norm();
    k.a = M2 * lf * lk;
    k.c = M2 * lf * (1.0 + lk);
    k.P1 = unit.P();
    k.lam_max_P1 = linalg::lambda_max(unit.P());
    k.PB1 = unit.pb_norm();
    k.K_norm = lk;
    k.validate();
    return k;
  }
};

inline constexpr double kNuEpsilon = 1e-6;
inline double nu_upper_bound() { return std::sqrt(2.0) - kNuEpsilon; }

/// delta(nu) = ln((c + nu a / (|P1 B||K|)) / (c + nu c / (|P1 B||K|))) / (a - c).
inline double delta_of_nu(const TradeoffConstants& k, double nu) {
  if (!(nu > 0.0)) throw DomainError("delta_of_nu requires nu > 0");
  const double s = nu / k.gain();
  return std::log((k.c + s * k.a) / (k.c + s * k.c)) / (k.a - k.c);
}

/// mu(nu) = (2 - nu^2) / (4 lambda_max(P1)).
inline double mu_of_nu(const TradeoffConstants& k, double nu) {
  if (!(nu > 0.0) || !(nu < std::sqrt(2.0)))
    throw DomainError("mu_of_nu requires nu in (0, sqrt(2))");
  return (2.0 - nu * nu) / (4.0 * k.lam_max_P1);
}

/// J(nu) = lambda delta(nu) + (1 - lambda) mu(nu).
inline double aggregate_objective(const TradeoffConstants& k, double lambda, double nu) {
  return lambda * delta_of_nu(k, nu) + (1.0 - lambda) * mu_of_nu(k, nu);
}

/// Coefficients (c3, c2, c1, c0) of the stationarity cubic of J.
inline std::array<double, 4> stationarity_cubic(const TradeoffConstants& k, double lambda) {
  const double g = k.gain();
  return {k.a * (1.0 - lambda), (k.a + k.c) * g * (1.0 - lambda), k.c * g * g * (1.0 - lambda),
          -2.0 * k.lam_max_P1 * g * lambda};
}

struct NuOptimum {
  double nu = 0.0;
  double lambda = 0.0;
  bool boundary = false;     // clipped to an end of (0, sqrt(2))
  bool degenerate = false;   // lambda = 1: cubic collapses to c0 = 0
  bool theta_above_one = false;  // nu >= 1, outside the admissible theta range
  double cubic_residual = 0.0;   // relative |cubic(nu)|
  double grid_nu = 0.0;          // argmax of J on the validation grid
};

/// Brute-force argmax of J on nu_j = j (sqrt(2) - eps) / points.
inline double grid_argmax_nu(const TradeoffConstants& k, double lambda, std::size_t points) {
  double best_nu = 0.0, best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j <= points; ++j) {
    const double nu = nu_upper_bound() * static_cast<double>(j) / static_cast<double>(points);
    const double v = aggregate_objective(k, lambda, nu);
    if (v > best) {
      best = v;
      best_nu = nu;
    }
  }
  return best_nu;
}

/// Positive root of the stationarity cubic, by Newton steps safeguarded with
/// bisection on (0, sqrt(2) - eps]; cross-checked against a dense grid.
inline NuOptimum optimize_nu(const TradeoffConstants& k, double lambda,
                             std::size_t grid_points = 10000) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("optimize_nu requires lambda in [0, 1]");
  NuOptimum out;
  out.lambda = lambda;
  const double nu_max = nu_upper_bound();
  const auto [c3, c2, c1, c0] = stationarity_cubic(k, lambda);
  auto cubic = [&](double v) { return ((c3 * v + c2) * v + c1) * v + c0; };
  auto dcubic = [&](double v) { return (3.0 * c3 * v + 2.0 * c2) * v + c1; };

  if (lambda == 0.0) {
    out.nu = kNuEpsilon;
    out.boundary = true;
  } else if (lambda == 1.0) {
    out.nu = nu_max;
    out.degenerate = true;
  } else if (cubic(nu_max) <= 0.0) {
    out.nu = nu_max;
    out.boundary = true;
  } else {
    double lo = 0.0, hi = nu_max;
    double v = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const double f = cubic(v);
      if (f == 0.0) break;
      (f < 0.0 ? lo : hi) = v;
      double next = v - f / dcubic(v);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - v) <= 1e-16 * (1.0 + v) || hi - lo <= 1e-16) {
        v = next;
        break;
      }
      v = next;
    }
    out.nu = v;
    if (out.nu < kNuEpsilon) {
      out.nu = kNuEpsilon;
      out.boundary = true;
    }
  }
  const double scale = std::abs(c3 * out.nu * out.nu * out.nu) + std::abs(c2 * out.nu * out.nu) +
                       std::abs(c1 * out.nu) + std::abs(c0);
  out.cubic_residual = scale > 0.0 ? std::abs(cubic(out.nu)) / scale : 0.0;
  out.theta_above_one = out.nu >= 1.0;
  if (grid_points > 0) out.grid_nu = grid_argmax_nu(k, lambda, grid_points);
  return out;
}

struct TradeoffRow {
  double nu, delta, mu;
};

struct TradeoffTables {
  std::vector<TradeoffRow> by_nu;
  std::vector<NuOptimum> by_lambda;
};

inline TradeoffTables sweep(const TradeoffConstants& k, const std::vector<double>& nu_grid,
                            const std::vector<double>& lambda_grid) {
  if (nu_grid.empty() || lambda_grid.empty()) throw ConfigError("sweep grids must be nonempty");
  TradeoffTables t;
  for (double nu : nu_grid) t.by_nu.push_back({nu, delta_of_nu(k, nu), mu_of_nu(k, nu)});
  for (double lambda : lambda_grid) t.by_lambda.push_back(optimize_nu(k, lambda));
  return t;
}

}  // namespace etpf
