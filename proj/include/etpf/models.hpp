#pragma once

#include <cmath>
#include <memory>
#include <optional>

#include "etpf/linalg.hpp"
#include "etpf/system_model.hpp"
#include "etpf/types.hpp"

namespace etpf::models {

/// A plant together with its certificate and, when one exists, the linear
/// system whose closed loop coincides with the plant's.
struct ModelBundle {
  std::shared_ptr<const SystemModel> model;
  std::shared_ptr<const ISSCertificate> certificate;
  std::shared_ptr<const LinearSystem> linear;
};

/// A = [[1,1],[0,1]], B = e2, K = [-6,-5]: A + BK has eigenvalues -1, -2.
inline LinearSystem double_integrator_like(const Matrix& q = Matrix::Identity(2, 2)) {
  Matrix a(2, 2), b(2, 1), k(1, 2);
  a << 1.0, 1.0, 0.0, 1.0;
  b << 0.0, 1.0;
  k << -6.0, -5.0;
  return LinearSystem(a, b, k, q);
}

/// x1' = x1 + x2, x2' = tanh(x1) + x2 + u with u = -6 x1 - 5 x2 - tanh(x1).
/// The feedback cancels the tanh term, so the undelayed closed loop is the
/// linear system above and its quadratic certificate holds globally.
inline ModelBundle example1(const Matrix& q = Matrix::Identity(2, 2)) {
  auto lin = std::make_shared<const LinearSystem>(double_integrator_like(q));
  auto model = std::make_shared<const SystemModel>(
      2, 1,
      [](const Vector& x, const Vector& u) -> Vector {
        Vector dx(2);
        dx << x(0) + x(1), std::tanh(x(0)) + x(1) + u(0);
        return dx;
      },
      [](const Vector& x) -> Vector {
        Vector u(1);
        u << -6.0 * x(0) - 5.0 * x(1) - std::tanh(x(0));
        return u;
      },
      2.0 * std::sqrt(3.0), 7.0 * std::sqrt(2.0), "example1");
  auto cert = std::make_shared<const ISSCertificate>(linear_certificate(*lin));
  return {model, cert, lin};
}

/// x1' = x1 + x2, x2' = x1^3 + x2 + u with u = -6 x1 - 5 x2 - x1^3.
/// Neither f nor K is globally Lipschitz; both constants are taken on the
/// strip |x1| <= radius.
inline ModelBundle example2(double radius = 1.0, const Matrix& q = Matrix::Identity(2, 2)) {
  if (!(radius > 0.0)) throw ConfigError("example2 operating radius must be positive");
  auto lin = std::make_shared<const LinearSystem>(double_integrator_like(q));
  const double s = 3.0 * radius * radius;
  Matrix jac(2, 3);
  jac << 1.0, 1.0, 0.0, s, 1.0, 1.0;
  const double lf = linalg::spectral_norm(jac);
  const double lk = std::hypot(6.0 + s, 5.0);
  auto model = std::make_shared<const SystemModel>(
      2, 1,
      [](const Vector& x, const Vector& u) -> Vector {
        Vector dx(2);
        dx << x(0) + x(1), x(0) * x(0) * x(0) + x(1) + u(0);
        return dx;
      },
      [](const Vector& x) -> Vector {
        Vector u(1);
        u << -6.0 * x(0) - 5.0 * x(1) - x(0) * x(0) * x(0);
        return u;
      },
      lf, lk, "example2");
  auto cert = std::make_shared<const ISSCertificate>(linear_certificate(*lin));
  return {model, cert, lin};
}

inline ModelBundle linear(const LinearSystem& sys, std::optional<double> lipschitz_f = std::nullopt) {
  auto lin = std::make_shared<const LinearSystem>(sys);
  auto model = std::make_shared<const SystemModel>(lin->model(lipschitz_f));
  auto cert = std::make_shared<const ISSCertificate>(linear_certificate(*lin));
  return {model, cert, lin};
}

}  // namespace etpf::models
