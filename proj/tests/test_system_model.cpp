#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "etpf/linalg.hpp"
#include "etpf/models.hpp"
#include "etpf/system_model.hpp"

using namespace etpf;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST(SystemModel, Example1VectorFieldAtOnes) {
  const auto b = models::example1();
  const Vector dx = eval_f(*b.model, vec2(1, 1), Vector::Zero(1));
  EXPECT_DOUBLE_EQ(dx(0), 2.0);
  EXPECT_NEAR(dx(1), std::tanh(1.0) + 1.0, 1e-15);
  EXPECT_NEAR(dx(1), 1.76159, 1e-5);
}

TEST(SystemModel, EquilibriumAtOrigin) {
  for (const auto& b : {models::example1(), models::example2()}) {
    EXPECT_EQ(eval_f(*b.model, Vector::Zero(2), Vector::Zero(1)).norm(), 0.0);
    EXPECT_EQ(b.model->feedback(Vector::Zero(2)).norm(), 0.0);
  }
}

TEST(SystemModel, LinearHandEvaluation) {
  Matrix a = mat2(0, 1, 0, 0), b(2, 1), k(1, 2);
  b << 0, 1;
  k << -1, -1;
  const LinearSystem sys(a, b, k, Matrix::Identity(2, 2));
  const SystemModel m = sys.model();
  const Vector dx = eval_f(m, vec2(1, 0), Vector::Constant(1, 2.0));
  EXPECT_DOUBLE_EQ(dx(0), 0.0);
  EXPECT_DOUBLE_EQ(dx(1), 2.0);
}

TEST(SystemModel, DimensionMismatchIsConfigError) {
  const auto b = models::example1();
  EXPECT_THROW(eval_f(*b.model, Vector::Zero(3), Vector::Zero(1)), ConfigError);
  EXPECT_THROW(eval_f(*b.model, Vector::Zero(2), Vector::Zero(2)), ConfigError);
}

TEST(SystemModel, RejectsNonzeroEquilibrium) {
  EXPECT_THROW(SystemModel(
                   1, 1, [](const Vector& x, const Vector&) -> Vector { return x.array() + 1.0; },
                   [](const Vector& x) -> Vector { return -x; }, 1.0, 1.0),
               ConfigError);
}

TEST(SystemModel, SampledLipschitzWithinDeclaredBound) {
  const auto b = models::example1();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 3.0);
  std::vector<std::pair<Vector, Vector>> pairs;
  for (int i = 0; i < 500; ++i) pairs.emplace_back(vec2(n(rng), n(rng)), vec2(n(rng), n(rng)));
  EXPECT_LE(sampled_lipschitz_K(*b.model, pairs), b.model->lipschitz_K());
}

TEST(Lyapunov, NegativeIdentity) {
  const Matrix p = solve_lyapunov(-Matrix::Identity(2, 2), 2.0 * Matrix::Identity(2, 2));
  EXPECT_NEAR((p - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(Lyapunov, Example1Linearization) {
  const Matrix p = solve_lyapunov(mat2(1, 1, -6, -4), Matrix::Identity(2, 2));
  // Hand solution of the 3x3 system for (p11, p12, p22).
  EXPECT_NEAR(p(0, 0), 4.5, 1e-12);
  EXPECT_NEAR(p(0, 1), 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(p(1, 0), 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(p(1, 1), 1.0 / 3.0, 1e-12);
}

TEST(Lyapunov, RejectsUnstable) {
  EXPECT_THROW(solve_lyapunov(mat2(1, 0, 0, -1), Matrix::Identity(2, 2)), DomainError);
}

TEST(Lyapunov, RejectsIndefiniteQ) {
  EXPECT_THROW(solve_lyapunov(-Matrix::Identity(2, 2), mat2(1, 0, 0, -1)), ConfigError);
}

TEST(Lyapunov, ResidualAndDefinitenessOnRandomStableSystems) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 2 + trial % 3;
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) m(i, j) = n(rng);
    const double shift = linalg::max_real_eigenvalue(m) + 0.5;
    const Matrix acl = m - shift * Matrix::Identity(dim, dim);
    Matrix g(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) g(i, j) = n(rng);
    const Matrix q = g * g.transpose() + Matrix::Identity(dim, dim);
    const Matrix p = solve_lyapunov(acl, q);
    const Matrix res = acl.transpose() * p + p * acl + q;
    EXPECT_LE(res.cwiseAbs().maxCoeff(), 1e-9 * (1.0 + linalg::spectral_norm(q)));
    EXPECT_GT(linalg::lambda_min(p), 0.0);
    EXPECT_TRUE(linalg::is_symmetric(p, 0.0));
  }
}

TEST(Certificate, LinearCertificateFormsFromStatedExample) {
  Matrix b(2, 1), k(1, 2);
  b << 0, 1;
  // A + BK = -I with A = [[-1,0],[0,0]], K = [0,-1].
  k << 0, -1;
  const LinearSystem sys(mat2(-1, 0, 0, 0), b, k, 2.0 * Matrix::Identity(2, 2));
  const ISSCertificate c = linear_certificate(sys);
  EXPECT_NEAR((sys.P() - Matrix::Identity(2, 2)).norm(), 0.0, 1e-12);
  for (double r : {0.5, 1.0, 3.0}) {
    EXPECT_NEAR(c.gamma(r), r * r, 1e-12);
    EXPECT_NEAR(c.rho(r), r * r, 1e-12);
  }
  EXPECT_TRUE(c.integrable);
  EXPECT_EQ(c.gamma(0.0), 0.0);
  EXPECT_EQ(c.rho(0.0), 0.0);
  EXPECT_NEAR(c.rho_inv(c.rho(3.0)), 3.0, 1e-12);
}

TEST(Certificate, InverseRoundTripsOnLogGrid) {
  const ISSCertificate c = linear_certificate(models::double_integrator_like());
  c.validate();
  for (int j = 0; j <= 120; ++j) {
    const double r = std::pow(10.0, -6.0 + 0.1 * j);
    EXPECT_NEAR(c.rho_inv(c.rho(r)), r, 1e-10 * r);
    EXPECT_NEAR(c.gamma_inv(c.gamma(r)), r, 1e-10 * r);
  }
}

TEST(Certificate, DissipationHoldsOnRandomPairs) {
  const auto b = models::example1();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  const ISSCertificate& c = *b.certificate;
  for (int i = 0; i < 1000; ++i) {
    Vector x = vec2(u(rng), u(rng));
    Vector w = Vector::Constant(1, u(rng));
    if (x.norm() > 10.0) x *= 10.0 / x.norm();
    const double lie = c.grad_S(x).dot(b.model->closed_loop(x, w));
    EXPECT_LE(lie, -c.gamma(x.norm()) + c.rho(w.norm()) + 1e-9);
  }
}

TEST(Certificate, VerifyPassesForOwnCertificate) {
  const LinearSystem sys = models::double_integrator_like();
  const SystemModel m = sys.model();
  const ISSCertificate c = linear_certificate(sys);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<Vector> xs, ws;
  for (int i = 0; i < 10; ++i) {
    xs.push_back(vec2(n(rng), n(rng)));
    ws.push_back(Vector::Constant(1, n(rng)));
  }
  const CertificateReport r = verify_certificate(m, c, xs, ws);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.samples, 100u);
}

TEST(Certificate, VerifyFailsForCorruptedGamma) {
  const LinearSystem sys = models::double_integrator_like();
  const SystemModel m = sys.model();
  ISSCertificate c = linear_certificate(sys);
  const auto g = c.gamma;
  c.gamma = [g](double r) { return 2.0 * g(r); };
  std::vector<Vector> xs, ws;
  for (int i = 0; i < 64; ++i) {
    const double a = 2.0 * M_PI * i / 64.0;
    xs.push_back(vec2(std::cos(a), std::sin(a)));
  }
  for (int j = -8; j <= 8; ++j) ws.push_back(Vector::Constant(1, 0.25 * j));
  const CertificateReport r = verify_certificate(m, c, xs, ws);
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.max_decay_violation, 0.0);
}

TEST(Certificate, EmptySampleSetIsVacuous) {
  const LinearSystem sys = models::double_integrator_like();
  const CertificateReport r = verify_certificate(sys.model(), linear_certificate(sys), {}, {});
  EXPECT_TRUE(r.passed);
  EXPECT_FALSE(r.warning.empty());
}

TEST(LinearSystem, NormsAndDefaultLipschitz) {
  const LinearSystem sys = models::double_integrator_like();
  EXPECT_NEAR(sys.k_norm(), std::sqrt(61.0), 1e-12);
  const Vector pb = sys.P() * sys.B();
  EXPECT_NEAR(sys.pb_norm(), pb.norm(), 1e-12);
  EXPECT_NEAR(sys.default_lipschitz_f(),
              std::sqrt(2.0) * (linalg::spectral_norm(sys.A()) + 1.0), 1e-12);
  EXPECT_NEAR(linalg::spectral_norm(sys.A()), (1.0 + std::sqrt(5.0)) / 2.0, 1e-12);
}

TEST(Linalg, ExpmAndInputIntegral) {
  const Matrix a = mat2(0, 1, 0, 0);
  Matrix b(2, 1);
  b << 0, 1;
  const auto [e, g] = linalg::expm_with_input_integral(a, b, 2.0);
  EXPECT_NEAR((e - mat2(1, 2, 0, 1)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(g(0, 0), 2.0, 1e-12);  // \int_0^2 s ds
  EXPECT_NEAR(g(1, 0), 2.0, 1e-12);
}
