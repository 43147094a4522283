#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "etpf/linalg.hpp"
#include "etpf/types.hpp"

namespace etpf {

using VectorField = std::function<Vector(const Vector& x, const Vector& u)>;
using FeedbackLaw = std::function<Vector(const Vector& x)>;
using ScalarMap = std::function<double(double)>;

/// Plant vector field f(x, u) together with a stabilizing feedback K.
///
/// `lipschitz_f` bounds f on the operating region of interest and
/// `lipschitz_K` is a global Lipschitz constant of K; both feed the
/// dwell-time bound and are not re-derived here.
class SystemModel {
 public:
  static constexpr double kEquilibriumTolerance = 1e-12;

  SystemModel(std::size_t state_dim, std::size_t input_dim, VectorField f, FeedbackLaw feedback,
              double lipschitz_f, double lipschitz_K, std::string name = {})
      : n_(state_dim),
        m_(input_dim),
        f_(std::move(f)),
        k_(std::move(feedback)),
        lf_(lipschitz_f),
        lk_(lipschitz_K),
        name_(std::move(name)) {
    if (n_ == 0 || m_ == 0) throw ConfigError("system dimensions must be positive");
    if (!f_ || !k_) throw ConfigError("system requires both a vector field and a feedback law");
    if (!(lf_ >= 0.0) || !(lk_ >= 0.0))
      throw ConfigError("Lipschitz constants must be nonnegative");
    const Vector f0 = f_(Vector::Zero(n_), Vector::Zero(m_));
    const Vector k0 = k_(Vector::Zero(n_));
    if (f0.size() != static_cast<Eigen::Index>(n_) || k0.size() != static_cast<Eigen::Index>(m_))
      throw ConfigError("vector field or feedback returns the wrong dimension");
    if (f0.norm() > kEquilibriumTolerance) throw ConfigError("f(0, 0) must vanish");
    if (k0.norm() > kEquilibriumTolerance) throw ConfigError("K(0) must vanish");
  }

  std::size_t state_dim() const { return n_; }
  std::size_t input_dim() const { return m_; }
  double lipschitz_f() const { return lf_; }
  double lipschitz_K() const { return lk_; }
  const std::string& name() const { return name_; }

  Vector f(const Vector& x, const Vector& u) const {
    if (x.size() != static_cast<Eigen::Index>(n_) || u.size() != static_cast<Eigen::Index>(m_))
      throw ConfigError("dimension mismatch in f(x, u): expected (" + std::to_string(n_) + ", " +
                        std::to_string(m_) + "), got (" + std::to_string(x.size()) + ", " +
                        std::to_string(u.size()) + ")");
    return f_(x, u);
  }

  Vector feedback(const Vector& x) const {
    if (x.size() != static_cast<Eigen::Index>(n_))
      throw ConfigError("dimension mismatch in K(x)");
    return k_(x);
  }

  /// Closed-loop field g(x, w) = f(x, K(x) + w).
  Vector closed_loop(const Vector& x, const Vector& w) const { return f(x, feedback(x) + w); }

 private:
  std::size_t n_;
  std::size_t m_;
  VectorField f_;
  FeedbackLaw k_;
  double lf_;
  double lk_;
  std::string name_;
};

inline Vector eval_f(const SystemModel& model, const Vector& x, const Vector& u) {
  return model.f(x, u);
}

/// Largest observed |K(x) - K(y)| / |x - y| over the given pairs.
inline double sampled_lipschitz_K(const SystemModel& model,
                                  const std::vector<std::pair<Vector, Vector>>& pairs) {
  double worst = 0.0;
  for (const auto& [x, y] : pairs) {
    const double d = (x - y).norm();
    if (d == 0.0) continue;
    worst = std::max(worst, (model.feedback(x) - model.feedback(y)).norm() / d);
  }
  return worst;
}

/// Solves A_cl^T P + P A_cl = -Q through the Kronecker-vectorized linear system.
inline Matrix solve_lyapunov(const Matrix& a_cl, const Matrix& q) {
  const Eigen::Index n = a_cl.rows();
  if (a_cl.cols() != n || q.rows() != n || q.cols() != n)
    throw ConfigError("solve_lyapunov: dimension mismatch");
  if (!linalg::is_positive_definite(q))
    throw ConfigError("solve_lyapunov: Q must be symmetric positive definite");
  if (!linalg::is_hurwitz(a_cl))
    throw DomainError("solve_lyapunov: closed loop is not Hurwitz, no positive-definite solution");

  const Matrix id = Matrix::Identity(n, n);
  const Matrix at = a_cl.transpose();
  // vec(A^T P) = (I (x) A^T) vec(P), vec(P A) = (A^T (x) I) vec(P), column-major vec.
  Matrix op = Matrix::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      op.block(i * n, j * n, n, n) += id(i, j) * at;
      op.block(i * n, j * n, n, n) += at(i, j) * id;
    }
  }
  Eigen::FullPivLU<Matrix> lu(op);
  if (!lu.isInvertible()) throw NumericalError("solve_lyapunov: singular Kronecker system");
  const Vector rhs = -Eigen::Map<const Vector>(q.data(), n * n);
  const Vector sol = lu.solve(rhs);
  Matrix p = Eigen::Map<const Matrix>(sol.data(), n, n);
  return 0.5 * (p + p.transpose());
}

/// Quadratic data of a certificate built from a Lyapunov solve.
struct QuadraticCertificateData {
  Matrix P;
  double lambda_min_P = 0.0;
  double lambda_max_P = 0.0;
  double lambda_min_Q = 0.0;
  double pb_norm = 0.0;
};

/// ISS-Lyapunov certificate (S, alpha1, alpha2, gamma, rho) for the
/// undelayed closed loop x' = f(x, K(x) + w).
struct ISSCertificate {
  std::function<double(const Vector&)> S;
  std::function<Vector(const Vector&)> grad_S;
  ScalarMap alpha1;
  ScalarMap alpha2;
  ScalarMap gamma;
  ScalarMap rho;
  ScalarMap gamma_inv;
  ScalarMap rho_inv;
  bool integrable = false;  // \int_0^1 rho(r)/r dr < inf
  std::optional<double> rho_quadratic;  // c with rho(r) = c r^2
  std::optional<QuadraticCertificateData> quadratic;

  /// Throws ConfigError unless every scalar map is zero at zero and
  /// strictly increasing on a log-spaced grid over [1e-6, 1e6].
  void validate() const {
    const std::pair<const char*, const ScalarMap*> maps[] = {
        {"alpha1", &alpha1}, {"alpha2", &alpha2}, {"gamma", &gamma},
        {"rho", &rho},       {"gamma_inv", &gamma_inv}, {"rho_inv", &rho_inv}};
    for (const auto& [name, fn] : maps) {
      if (!*fn) throw ConfigError(std::string("certificate is missing ") + name);
      if ((*fn)(0.0) != 0.0) throw ConfigError(std::string(name) + "(0) must be 0");
      double prev = 0.0;
      for (int k = 0; k <= 120; ++k) {
        const double r = std::pow(10.0, -6.0 + 0.1 * k);
        const double v = (*fn)(r);
        if (!(v > prev)) throw ConfigError(std::string(name) + " is not strictly increasing");
        prev = v;
      }
    }
    if (!S || !grad_S) throw ConfigError("certificate is missing S or its gradient");
  }
};

/// Linear plant x' = A x + B u with gain K and weight Q; P solves the
/// closed-loop Lyapunov equation.
class LinearSystem {
 public:
  static constexpr double kResidualTolerance = 1e-9;

  LinearSystem(Matrix a, Matrix b, Matrix k, Matrix q)
      : a_(std::move(a)), b_(std::move(b)), k_(std::move(k)), q_(std::move(q)) {
    const Eigen::Index n = a_.rows();
    if (n == 0 || a_.cols() != n) throw ConfigError("A must be square and nonempty");
    if (b_.rows() != n || b_.cols() == 0) throw ConfigError("B must have as many rows as A");
    if (k_.rows() != b_.cols() || k_.cols() != n) throw ConfigError("K must be m x n");
    if (q_.rows() != n || q_.cols() != n) throw ConfigError("Q must be n x n");
    p_ = solve_lyapunov(closed_loop(), q_);
    const Matrix acl = closed_loop();
    const Matrix residual = acl.transpose() * p_ + p_ * acl + q_;
    if (residual.cwiseAbs().maxCoeff() > kResidualTolerance * (1.0 + linalg::spectral_norm(q_)))
      throw NumericalError("Lyapunov residual exceeds tolerance");
  }

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& K() const { return k_; }
  const Matrix& Q() const { return q_; }
  const Matrix& P() const { return p_; }
  Matrix closed_loop() const { return a_ + b_ * k_; }
  std::size_t state_dim() const { return static_cast<std::size_t>(a_.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(b_.cols()); }

  double pb_norm() const { return linalg::spectral_norm(p_ * b_); }
  double k_norm() const { return linalg::spectral_norm(k_); }
  /// sqrt(2) (|A| + |B|), the Lipschitz bound used for linear plants.
  double default_lipschitz_f() const {
    return std::sqrt(2.0) * (linalg::spectral_norm(a_) + linalg::spectral_norm(b_));
  }

  SystemModel model(std::optional<double> lipschitz_f = std::nullopt) const {
    Matrix a = a_, b = b_, k = k_;
    return SystemModel(
        state_dim(), input_dim(),
        [a, b](const Vector& x, const Vector& u) -> Vector { return a * x + b * u; },
        [k](const Vector& x) -> Vector { return k * x; },
        lipschitz_f.value_or(default_lipschitz_f()), k_norm(), "linear");
  }

 private:
  Matrix a_, b_, k_, q_, p_;
};

/// S(x) = x'Px, alpha_{1,2}(r) = lambda_{min,max}(P) r^2,
/// gamma(r) = lambda_min(Q) r^2 / 2, rho(r) = 2 |PB|^2 r^2 / lambda_min(Q).
inline ISSCertificate linear_certificate(const LinearSystem& sys) {
  QuadraticCertificateData data;
  data.P = sys.P();
  data.lambda_min_P = linalg::lambda_min(sys.P());
  data.lambda_max_P = linalg::lambda_max(sys.P());
  data.lambda_min_Q = linalg::lambda_min(sys.Q());
  data.pb_norm = sys.pb_norm();

  const double lmin_p = data.lambda_min_P;
  const double lmax_p = data.lambda_max_P;
  const double c_gamma = 0.5 * data.lambda_min_Q;
  const double c_rho = 2.0 * data.pb_norm * data.pb_norm / data.lambda_min_Q;
  const Matrix p = data.P;

  ISSCertificate cert;
  cert.S = [p](const Vector& x) { return x.dot(p * x); };
  cert.grad_S = [p](const Vector& x) -> Vector { return 2.0 * (p * x); };
  cert.alpha1 = [lmin_p](double r) { return lmin_p * r * r; };
  cert.alpha2 = [lmax_p](double r) { return lmax_p * r * r; };
  cert.gamma = [c_gamma](double r) { return c_gamma * r * r; };
  cert.rho = [c_rho](double r) { return c_rho * r * r; };
  cert.gamma_inv = [c_gamma](double v) { return std::sqrt(v / c_gamma); };
  cert.rho_inv = [c_rho](double v) { return std::sqrt(v / c_rho); };
  cert.integrable = true;
  cert.rho_quadratic = c_rho;
  cert.quadratic = std::move(data);
  return cert;
}

struct CertificateReport {
  double max_sandwich_violation = 0.0;  // alpha1 <= S <= alpha2
  double max_decay_violation = 0.0;     // grad S . g <= -gamma + rho
  std::size_t samples = 0;
  bool passed = true;
  std::string warning;
};

/// Sampled check of the ISS-Lyapunov inequalities; passes iff the worst
/// violation is at most 1e-9.
inline CertificateReport verify_certificate(const SystemModel& model, const ISSCertificate& cert,
                                            const std::vector<Vector>& states,
                                            const std::vector<Vector>& disturbances) {
  CertificateReport report;
  if (states.empty()) {
    report.warning = "empty sample set, check is vacuous";
    return report;
  }
  for (const Vector& x : states) {
    const double r = x.norm();
    const double s = cert.S(x);
    report.max_sandwich_violation =
        std::max({report.max_sandwich_violation, cert.alpha1(r) - s, s - cert.alpha2(r)});
    for (const Vector& w : disturbances) {
      const double lie = cert.grad_S(x).dot(model.closed_loop(x, w));
      const double bound = -cert.gamma(r) + cert.rho(w.norm());
      report.max_decay_violation = std::max(report.max_decay_violation, lie - bound);
      ++report.samples;
    }
  }
  if (disturbances.empty()) report.warning = "no disturbance samples, decay inequality unchecked";
  report.passed = report.max_sandwich_violation <= 1e-9 && report.max_decay_violation <= 1e-9;
  return report;
}

}  // namespace etpf
