#include <gtest/gtest.h>

#include <cmath>

#include "etpf/models.hpp"
#include "etpf/trigger.hpp"

using namespace etpf;

namespace {

ISSCertificate unit_quadratic_certificate() {
  // Q = I, |PB| = 1: gamma(r) = r^2 / 2, rho(r) = 2 r^2.
  ISSCertificate cert;
  QuadraticCertificateData q;
  q.P = Matrix::Identity(2, 2);
  q.lambda_min_P = q.lambda_max_P = 1.0;
  q.lambda_min_Q = 1.0;
  q.pb_norm = 1.0;
  cert.quadratic = q;
  cert.gamma = [](double r) { return 0.5 * r * r; };
  cert.rho = [](double r) { return 2.0 * r * r; };
  cert.gamma_inv = [](double v) { return std::sqrt(2.0 * v); };
  cert.rho_inv = [](double v) { return std::sqrt(0.5 * v); };
  return cert;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST(TriggeringError, Subtraction) {
  EXPECT_EQ(triggering_error(vec2(1, 1), vec2(1, 0)), vec2(0, 1));
  EXPECT_EQ(triggering_error(vec2(0.3, -2), vec2(0.3, -2)), vec2(0, 0));
  EXPECT_EQ(triggering_error(std::nullopt, vec2(4, 5)), vec2(0, 0));
}

TEST(Threshold, LinearModeHandExample) {
  const ISSCertificate cert = unit_quadratic_certificate();
  TriggerConfig cfg;
  cfg.mode = TriggerMode::Linear;
  cfg.theta = 0.25;
  EXPECT_DOUBLE_EQ(linear_threshold_coefficient(1.0, 0.25, 1.0, 1.0), 0.125);
  const Vector p = vec2(3.0, 4.0);
  EXPECT_NEAR(threshold(cfg, &cert, 1.0, p), 0.125 * 5.0, 1e-15);
}

TEST(Threshold, Example1LinearizationCoefficient) {
  const auto b = models::example1();
  const auto& q = *b.certificate->quadratic;
  const double coeff = linear_threshold_coefficient(q.lambda_min_Q, 0.5, q.pb_norm, 7.0 * std::sqrt(2.0));
  // |PB| = sqrt(29) / 6 for the hand-solved P.
  const double expected = std::sqrt(0.5) / (4.0 * std::sqrt(29.0) / 6.0 * 7.0 * std::sqrt(2.0));
  EXPECT_NEAR(coeff, expected, 1e-12);
  EXPECT_NEAR(coeff, 0.0199, 5e-5);
}

TEST(Threshold, FixedRatioAndOrigin) {
  TriggerConfig cfg;
  cfg.mode = TriggerMode::FixedRatio;
  cfg.rho_bar = 0.015;
  EXPECT_DOUBLE_EQ(threshold(cfg, nullptr, 1.0, vec2(0.0, 2.0)), 0.03);
  EXPECT_EQ(threshold(cfg, nullptr, 1.0, vec2(0.0, 0.0)), 0.0);

  const ISSCertificate cert = unit_quadratic_certificate();
  cfg.mode = TriggerMode::Nonlinear;
  EXPECT_EQ(threshold(cfg, &cert, 2.0, vec2(0.0, 0.0)), 0.0);
}

TEST(Threshold, NonlinearReducesToLinearForQuadraticCertificate) {
  const auto b = models::example1();
  TriggerConfig lin, nonlin;
  lin.mode = TriggerMode::Linear;
  nonlin.mode = TriggerMode::Nonlinear;
  const double lk = b.model->lipschitz_K();
  for (double theta : {0.1, 0.5, 0.9}) {
    lin.theta = nonlin.theta = theta;
    for (double r : {1e-3, 0.5, 7.0}) {
      const Vector p = vec2(r * 0.6, -r * 0.8);
      const double a = threshold(lin, b.certificate.get(), lk, p);
      EXPECT_NEAR(threshold(nonlin, b.certificate.get(), lk, p), a, 1e-12 * (1.0 + a));
    }
  }
}

TEST(Threshold, MissingDataIsConfigError) {
  TriggerConfig cfg;
  cfg.mode = TriggerMode::Nonlinear;
  EXPECT_THROW(threshold(cfg, nullptr, 1.0, vec2(1, 0)), ConfigError);
  cfg.mode = TriggerMode::Linear;
  ISSCertificate no_quadratic;
  EXPECT_THROW(threshold(cfg, &no_quadratic, 1.0, vec2(1, 0)), ConfigError);
  cfg.mode = TriggerMode::FixedRatio;
  EXPECT_THROW(threshold(cfg, nullptr, 1.0, vec2(1, 0)), ConfigError);
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.rho_bar = 0.1;
  EXPECT_NO_THROW(cfg.validate());
  cfg.theta = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(CheckAndFire, BelowAtAndResetSemantics) {
  TriggerConfig cfg;
  cfg.mode = TriggerMode::FixedRatio;
  cfg.rho_bar = 0.1;
  EventLog log;
  const Vector u = Vector::Constant(1, -1.0);
  const Vector p = vec2(0.0, 1.0);

  auto d = check_and_fire(cfg, nullptr, 1.0, vec2(0.0, 0.05), p, 0.5, u, log);
  EXPECT_FALSE(d.fired);
  EXPECT_EQ(log.size(), 0u);

  d = check_and_fire(cfg, nullptr, 1.0, vec2(0.0, 0.1), p, 0.6, u, log);
  EXPECT_TRUE(d.fired);
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log.event_times[0], 0.6);
  EXPECT_DOUBLE_EQ(log.e_pre_reset[0], 0.1);

  // caller stores p(t_k) = p(t); the next query sees e = 0
  const Vector e_next = triggering_error(p, p);
  d = check_and_fire(cfg, nullptr, 1.0, e_next, p, 0.61, u, log);
  EXPECT_FALSE(d.fired);
}

TEST(CheckAndFire, EquilibriumDoesNotRefire) {
  TriggerConfig cfg;
  cfg.mode = TriggerMode::FixedRatio;
  cfg.rho_bar = 0.1;
  EventLog log;
  const Vector zero = vec2(0, 0);
  EXPECT_FALSE(check_and_fire(cfg, nullptr, 1.0, zero, zero, 1.0, Vector::Zero(1), log).fired);
  EXPECT_TRUE(check_and_fire(cfg, nullptr, 1.0, vec2(1e-12, 0), zero, 1.1, Vector::Zero(1), log).fired);
  EXPECT_FALSE(check_and_fire(cfg, nullptr, 1.0, zero, zero, 1.2, Vector::Zero(1), log).fired);
  EXPECT_EQ(log.size(), 1u);
}

TEST(EventLog, StrictlyIncreasingTimes) {
  EventLog log;
  log.record(0.0, Vector::Zero(1), 1.0, 0.0);
  log.record(0.3, Vector::Zero(1), 1.0, 0.1);
  log.record(0.45, Vector::Zero(1), 1.0, 0.1);
  EXPECT_NEAR(log.min_dwell_observed(), 0.15, 1e-15);
  EXPECT_THROW(log.record(0.45, Vector::Zero(1), 1.0, 0.1), std::invalid_argument);
  EXPECT_TRUE(std::isinf(EventLog{}.min_dwell_observed()));
}

TEST(MinDwell, HandExample) {
  EXPECT_NEAR(min_dwell(1.0, 2.0, 1.0), std::log(4.0 / 3.0), 1e-15);
  EXPECT_NEAR(min_dwell(1.0, 2.0, 1.0), 0.28768, 5e-6);
}

TEST(MinDwell, VanishesWithR) {
  double prev = min_dwell(1.0, 2.0, 1e-2);
  for (double R : {1e-4, 1e-6, 1e-9}) {
    const double d = min_dwell(1.0, 2.0, R);
    EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_LT(prev, 1e-9);
}

TEST(MinDwell, NumericAgreesWithClosedForm) {
  EXPECT_NEAR(min_dwell_numeric(1.0, 2.0, 1.0), min_dwell(1.0, 2.0, 1.0), 1e-6);
  for (double a : {0.1, 3.0})
    for (double c_extra : {0.05, 2.0})
      for (double R : {1e-3, 0.4, 5.0}) {
        const double c = a + c_extra;
        EXPECT_NEAR(min_dwell_numeric(a, c, R), min_dwell(a, c, R), 1e-6 * (1.0 + min_dwell(a, c, R)))
            << a << " " << c << " " << R;
      }
}

TEST(MinDwell, MonotoneInRAndC) {
  for (double a : {0.2, 1.0, 4.0})
    for (double c = a + 0.1; c < a + 5.0; c += 0.7)
      for (double R = 0.01; R < 3.0; R += 0.23) {
        EXPECT_LT(min_dwell(a, c, R), min_dwell(a, c, R + 1e-3));
        EXPECT_GT(min_dwell(a, c, R), min_dwell(a, c + 1e-3, R));
      }
}

TEST(MinDwell, DomainErrors) {
  EXPECT_THROW(min_dwell(0.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(min_dwell(1.0, -1.0, 1.0), DomainError);
  EXPECT_THROW(min_dwell(1.0, 2.0, 0.0), DomainError);
  EXPECT_THROW(min_dwell_numeric(1.0, 2.0, -1.0), DomainError);
}

TEST(DwellConstants, OrderingAndGainMap) {
  const auto k = dwell_constants(1.2, 3.0, 5.0, 0.1);
  EXPECT_DOUBLE_EQ(k.a, 18.0);
  EXPECT_DOUBLE_EQ(k.c, 21.6);
  EXPECT_NEAR(k.c - k.a, 1.2 * 3.0, 1e-12);
  EXPECT_GT(k.delta(), 0.0);

  // G(r) = gamma^{-1}(rho(r) / theta) is linear for quadratic maps:
  // sqrt(2 * 2 r^2 / theta) = 2 r / sqrt(theta).
  const ISSCertificate cert = unit_quadratic_certificate();
  EXPECT_NEAR(lipschitz_gain_map(cert, 0.25, 3.0), 4.0, 1e-9);
}
