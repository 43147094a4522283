#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "etpf/experiments.hpp"
#include "etpf/tradeoff.hpp"

using namespace etpf;

namespace {

TradeoffConstants hand_constants() {
  TradeoffConstants k;
  k.a = 1.0;
  k.c = 2.0;
  k.P1 = Matrix::Identity(1, 1);
  k.lam_max_P1 = 1.0;
  k.PB1 = 1.0;
  k.K_norm = 1.0;
  return k;
}

double bisect_root(double (*f)(double), double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Tradeoff, DeltaHandExample) {
  const auto k = hand_constants();
  EXPECT_NEAR(delta_of_nu(k, 1.0), std::log(4.0 / 3.0), 1e-15);
  EXPECT_LT(delta_of_nu(k, 1e-9), 1e-8);
  EXPECT_THROW(delta_of_nu(k, 0.0), DomainError);
  EXPECT_THROW(delta_of_nu(k, -0.5), DomainError);
}

TEST(Tradeoff, MuHandExample) {
  const auto k = hand_constants();
  EXPECT_DOUBLE_EQ(mu_of_nu(k, 1.0), 0.25);
  EXPECT_NEAR(mu_of_nu(k, 1e-9), 0.5, 1e-15);
  EXPECT_THROW(mu_of_nu(k, std::sqrt(2.0)), DomainError);
  EXPECT_THROW(mu_of_nu(k, 2.0), DomainError);
}

TEST(Tradeoff, CubicCoefficients) {
  const auto c = stationarity_cubic(hand_constants(), 0.5);
  EXPECT_DOUBLE_EQ(c[0], 0.5);
  EXPECT_DOUBLE_EQ(c[1], 1.5);
  EXPECT_DOUBLE_EQ(c[2], 1.0);
  EXPECT_DOUBLE_EQ(c[3], -1.0);
}

TEST(Tradeoff, HalfLambdaRootAgainstGridAndBisection) {
  const auto k = hand_constants();
  const NuOptimum opt = optimize_nu(k, 0.5, 100000);
  const double root = bisect_root([](double v) { return 0.5 * v * v * v + 1.5 * v * v + v - 1.0; },
                                  0.0, std::sqrt(2.0));
  EXPECT_NEAR(opt.nu, root, 1e-12);
  EXPECT_NEAR(opt.grid_nu, opt.nu, 1e-4);
  EXPECT_LE(opt.cubic_residual, 1e-9);
  EXPECT_FALSE(opt.boundary);
  EXPECT_FALSE(opt.degenerate);
}

TEST(Tradeoff, EndpointLambdas) {
  const auto k = hand_constants();
  const NuOptimum zero = optimize_nu(k, 0.0);
  EXPECT_TRUE(zero.boundary);
  EXPECT_DOUBLE_EQ(zero.nu, kNuEpsilon);
  const NuOptimum one = optimize_nu(k, 1.0);
  EXPECT_TRUE(one.degenerate);
  EXPECT_DOUBLE_EQ(one.nu, std::sqrt(2.0) - kNuEpsilon);
  EXPECT_TRUE(one.theta_above_one);
  EXPECT_THROW(optimize_nu(k, 1.5), DomainError);
  EXPECT_THROW(optimize_nu(k, -0.1), DomainError);
}

TEST(Tradeoff, FirstOrderOptimalityAndMonotoneOptimizer) {
  const Experiment ex = presets::load("tradeoff");
  for (const auto& k : {hand_constants(), tradeoff_constants(ex)}) {
    double prev = 0.0;
    for (int i = 1; i <= 9; ++i) {
      const double lambda = 0.1 * i;
      const NuOptimum opt = optimize_nu(k, lambda, 20000);
      if (!opt.boundary) {
        EXPECT_LE(opt.cubic_residual, 1e-9);
      }
      EXPECT_NEAR(opt.grid_nu, opt.nu, 1e-4);
      EXPECT_GE(opt.nu, prev);
      prev = opt.nu;
      if (!opt.boundary) {
        const double h = 1e-6;
        const double J = aggregate_objective(k, lambda, opt.nu);
        const double dJ = (aggregate_objective(k, lambda, opt.nu + h) -
                           aggregate_objective(k, lambda, opt.nu - h)) /
                          (2.0 * h);
        EXPECT_LE(std::abs(dJ), 1e-6 * (1.0 + std::abs(J))) << "lambda=" << lambda;
      }
    }
  }
}

TEST(Tradeoff, SweepColumnsMonotone) {
  const Experiment ex = presets::load("tradeoff");
  const auto k = tradeoff_constants(ex);
  const auto tables = sweep(k, nu_grid(100), {0.0, 0.5, 1.0});
  ASSERT_EQ(tables.by_nu.size(), 100u);
  for (std::size_t i = 1; i < tables.by_nu.size(); ++i) {
    EXPECT_GT(tables.by_nu[i].delta, tables.by_nu[i - 1].delta);
    EXPECT_LT(tables.by_nu[i].mu, tables.by_nu[i - 1].mu);
  }
  ASSERT_EQ(tables.by_lambda.size(), 3u);
  EXPECT_LE(tables.by_lambda[0].nu, tables.by_lambda[1].nu);
  EXPECT_LE(tables.by_lambda[1].nu, tables.by_lambda[2].nu);
}

TEST(Tradeoff, SinglePointSweep) {
  const auto tables = sweep(hand_constants(), {0.7}, {0.3});
  ASSERT_EQ(tables.by_nu.size(), 1u);
  ASSERT_EQ(tables.by_lambda.size(), 1u);
  EXPECT_DOUBLE_EQ(tables.by_nu[0].nu, 0.7);
  EXPECT_THROW(sweep(hand_constants(), {}, {0.3}), ConfigError);
}

TEST(Tradeoff, ConstantsFromLinearSystem) {
  Matrix A(2, 2), B(2, 1), K(1, 2);
  A << 1, 1, 0, 1;
  B << 0, 1;
  K << -6, -5;
  const auto k = TradeoffConstants::from_linear(A, B, K, 1.0);
  const LinearSystem unit(A, B, K, Matrix::Identity(2, 2));
  const double lf = std::sqrt(2.0) * (linalg::spectral_norm(A) + linalg::spectral_norm(B));
  EXPECT_NEAR(k.a, lf * std::hypot(6.0, 5.0), 1e-12);
  EXPECT_NEAR(k.c - k.a, lf, 1e-12);
  EXPECT_NEAR(k.PB1, (unit.P() * B).norm(), 1e-12);
  const Matrix residual = unit.closed_loop().transpose() * k.P1 + k.P1 * unit.closed_loop() +
                          Matrix::Identity(2, 2);
  EXPECT_LE(residual.cwiseAbs().maxCoeff(), 1e-9);

  TradeoffConstants bad = k;
  bad.a = bad.c + 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Tradeoff, PropertyRandomConstants) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.1, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    TradeoffConstants k;
    k.a = U(rng);
    k.c = k.a + U(rng);
    k.lam_max_P1 = U(rng);
    k.PB1 = U(rng);
    k.K_norm = U(rng);
    double prev_delta = 0.0, prev_mu = std::numeric_limits<double>::infinity();
    for (double nu : nu_grid(50)) {
      const double d = delta_of_nu(k, nu), m = mu_of_nu(k, nu);
      EXPECT_GT(d, prev_delta);
      EXPECT_LT(m, prev_mu);
      prev_delta = d;
      prev_mu = m;
    }
    const NuOptimum opt = optimize_nu(k, 0.5, 20000);
    EXPECT_NEAR(opt.grid_nu, opt.nu, 2e-4) << trial;
  }
}
