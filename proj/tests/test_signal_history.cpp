#include <gtest/gtest.h>

#include <cmath>

#include "etpf/signal_history.hpp"

using namespace etpf;

namespace {

Vector s1(double v) { return Vector::Constant(1, v); }

}  // namespace

TEST(TimedSignal, ConstantHoldsLeftValue) {
  TimedSignal u(Interpolation::PiecewiseConstant);
  u.append(0.0, s1(1.0));
  u.append(2.0, s1(5.0));
  EXPECT_DOUBLE_EQ(u.sample(1.9)(0), 1.0);
  EXPECT_DOUBLE_EQ(u.sample(2.0)(0), 5.0);  // right-closed jump
  EXPECT_DOUBLE_EQ(u.sample(7.0)(0), 5.0);
}

TEST(TimedSignal, LinearMidpoint) {
  TimedSignal p(Interpolation::PiecewiseLinear);
  p.append(0.0, s1(0.0));
  p.append(2.0, s1(4.0));
  EXPECT_DOUBLE_EQ(p.sample(1.0)(0), 2.0);
  EXPECT_THROW(p.sample(2.5), OutOfRangeError);
  EXPECT_THROW(p.sample(-0.1), OutOfRangeError);
}

TEST(TimedSignal, AppendMustIncrease) {
  TimedSignal p(Interpolation::PiecewiseLinear);
  p.append(1.0, s1(0.0));
  EXPECT_THROW(p.append(1.0, s1(1.0)), std::invalid_argument);
  EXPECT_THROW(p.append(0.5, s1(1.0)), std::invalid_argument);
}

TEST(TimedSignal, ExactAtStamps) {
  TimedSignal p(Interpolation::PiecewiseLinear);
  for (int i = 0; i < 50; ++i) p.append(0.1 * i, s1(std::sin(0.37 * i)));
  for (int i = 0; i < 50; ++i) EXPECT_EQ(p.sample(p.times()[i])(0), std::sin(0.37 * i));
}

TEST(TimedSignal, WeightedSupExamples) {
  TimedSignal w(Interpolation::PiecewiseConstant);
  w.append(-1.0, s1(0.0));
  EXPECT_EQ(w.weighted_sup(0.0, 1.0, 3.0), 0.0);

  TimedSignal c(Interpolation::PiecewiseConstant);
  c.append(-1.0, s1(-2.5));
  EXPECT_DOUBLE_EQ(c.weighted_sup(0.0, 1.5, 0.0), 2.5);
  EXPECT_NEAR(c.weighted_sup(0.0, 1.5, 2.0), 2.5 * std::exp(3.0), 1e-12);
}

TEST(TimedSignal, WeightedSupWithZeroRateIsPlainMax) {
  TimedSignal s(Interpolation::PiecewiseLinear);
  double best = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double v = std::cos(0.21 * i) * i;
    s.append(0.05 * i, s1(v));
    if (0.05 * i >= 1.0 && 0.05 * i <= 3.0) best = std::max(best, std::abs(v));
  }
  EXPECT_NEAR(s.weighted_sup(1.0, 3.0, 0.0), best, 1e-12);
}

TEST(TimedSignal, IntegrateExactForConstantPieces) {
  TimedSignal u(Interpolation::PiecewiseConstant);
  u.append(0.0, s1(1.0));
  u.append(1.0, s1(3.0));
  EXPECT_NEAR(u.integrate(0.5, 2.0)(0), 0.5 * 1.0 + 1.0 * 3.0, 1e-15);
  EXPECT_NEAR(u.integrate(0.0, 2.0, [](const Vector& v) -> Vector { return v.array().square(); })(0),
              1.0 + 9.0, 1e-15);
}

TEST(TimedSignal, IntegrateIsAdditive) {
  for (auto mode : {Interpolation::PiecewiseConstant, Interpolation::PiecewiseLinear}) {
    TimedSignal s(mode);
    for (int i = 0; i <= 200; ++i) s.append(0.013 * i * i / 10.0, s1(std::exp(-0.01 * i) * std::sin(0.1 * i)));
    const double a = 0.2, b = 17.3, c = 40.0;
    const double whole = s.integrate(a, c)(0);
    const double parts = s.integrate(a, b)(0) + s.integrate(b, c)(0);
    EXPECT_NEAR(whole, parts, 1e-12 * (1.0 + std::abs(whole)));
  }
}

TEST(TimedSignal, LinearTrapezoidOfRamp) {
  TimedSignal p(Interpolation::PiecewiseLinear);
  p.append(0.0, s1(0.0));
  p.append(2.0, s1(4.0));
  EXPECT_NEAR(p.integrate(0.0, 2.0)(0), 4.0, 1e-15);
  EXPECT_NEAR(p.integrate(0.5, 1.5)(0), 2.0, 1e-15);
}

TEST(TimedSignal, PruneKeepsCoverage) {
  TimedSignal u(Interpolation::PiecewiseConstant);
  for (int i = 0; i < 10; ++i) u.append(i, s1(i));
  u.prune_before(4.5);
  EXPECT_TRUE(u.covers(4.5));
  EXPECT_DOUBLE_EQ(u.sample(4.5)(0), 4.0);
  EXPECT_FALSE(u.covers(3.0));
}
