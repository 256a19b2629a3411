#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qdc/time_operator.hpp"

using namespace qdc;

namespace {

TimeOperator rotating(const Matrix& m, double nu, int power = 0, Complex amp = 1.0) {
  TimeOperator t(static_cast<int>(m.rows()));
  t.add_term({m, amp, nu, power});
  return t;
}

}  // namespace

TEST(TimeOperator, EvaluateSumOfTerms) {
  Matrix a = oracle::sx(), b = oracle::sz();
  TimeOperator t = rotating(a, 0.5) + rotating(b, 0.0, 2, 3.0);
  double s = 1.3;
  Matrix expect = std::exp(Complex(0, 0.5 * s)) * a + 3.0 * s * s * b;
  EXPECT_LT((t.evaluate(s) - expect).norm(), 1e-14);
  EXPECT_FALSE(t.is_constant());
  EXPECT_TRUE(TimeOperator(Operator(oracle::sy())).is_constant());
}

TEST(TimeOperator, DerivativeMatchesFiniteDifference) {
  std::mt19937_64 rng(4);
  TimeOperator t = rotating(random_matrix(3, rng), 1.7) + rotating(random_matrix(3, rng), -0.4, 1) +
                   rotating(random_matrix(3, rng), 0.0, 3);
  TimeOperator d = t.time_derivative();
  for (double s : {0.0, 0.8, 2.5}) {
    double h = 1e-4;
    // Five-point stencil.
    Matrix fd = (-t.evaluate(s + 2 * h) + 8.0 * t.evaluate(s + h) - 8.0 * t.evaluate(s - h) + t.evaluate(s - 2 * h)) /
                (12.0 * h);
    EXPECT_LT((d.evaluate(s) - fd).norm(), 1e-8 * std::max(1.0, fd.norm()));
  }
}

TEST(TimeOperator, CanonicalMergesTags) {
  Matrix a = oracle::sx();
  TimeOperator t = rotating(a, 1.0) + rotating(a, 1.0 + 1e-14) + rotating(a, 1.0, 0, -2.0);
  TimeOperator c = t.canonical();
  EXPECT_EQ(c.terms().size(), 0u);
  EXPECT_NEAR(c.coefficient_norm(), 0.0, 1e-12);
  TimeOperator u = rotating(a, 2.0) + rotating(oracle::sz(), -1.0) + rotating(a, 2.0);
  EXPECT_EQ(u.canonical().terms().size(), 2u);
  EXPECT_LT(u.canonical().terms()[0].frequency, u.canonical().terms()[1].frequency);
}

TEST(TimeOperator, ProductAddsFrequencies) {
  TimeOperator a = rotating(oracle::sx(), 0.7, 1);
  TimeOperator b = rotating(oracle::sy(), 0.2, 2);
  TimeOperator p = (a * b).canonical();
  ASSERT_EQ(p.terms().size(), 1u);
  EXPECT_NEAR(p.terms()[0].frequency, 0.9, 1e-15);
  EXPECT_EQ(p.terms()[0].power, 3);
  double s = 0.9;
  EXPECT_LT(((a * b).evaluate(s) - a.evaluate(s) * b.evaluate(s)).norm(), 1e-14);
}

TEST(TimeOperator, CommutatorPointwise) {
  std::mt19937_64 rng(6);
  TimeOperator a = rotating(random_matrix(3, rng), 1.1) + rotating(random_matrix(3, rng), 0.0, 1);
  Matrix h = random_skew(3, rng);
  for (double s : {0.0, 1.0, 3.3}) {
    Matrix at = a.evaluate(s);
    EXPECT_LT((commutator(a, h).evaluate(s) - oracle::comm(at, h)).norm(), 1e-12);
    Matrix dd = ad_plus_dt(a, h).evaluate(s);
    EXPECT_LT((dd - oracle::comm(at, h) - a.time_derivative().evaluate(s)).norm(), 1e-12);
  }
}

TEST(TimeOperator, RotatingFrameIsAnnihilated) {
  // C(t) = a e^{i w t} + a+ e^{-i w t}, drift -i w a+a: (ad + d/dt) C = 0.
  const int n = 6;
  const double w = 1.3;
  Matrix a = oracle::lower(n);
  TimeOperator c = rotating(a, w) + rotating(a.adjoint(), -w);
  Matrix drift = Complex(0, -w) * (a.adjoint() * a);
  EXPECT_LT(ad_plus_dt(c, drift).canonical().coefficient_norm(), 1e-12);
}

TEST(TimeOperator, CompressedAppliesProjector) {
  Matrix p = Matrix::Zero(3, 3);
  p(0, 0) = p(1, 1) = 1.0;
  TimeOperator t = rotating(oracle::displacement(3), 0.3);
  Matrix expect = p * oracle::displacement(3) * p;
  EXPECT_LT((t.compressed(p).evaluate(0.0) - expect).norm(), 1e-15);
}

TEST(TimeOperator, Equality) {
  Matrix a = oracle::sx();
  TimeOperator x = rotating(a, 1.0) + rotating(a, 2.0);
  TimeOperator y = rotating(a, 2.0) + rotating(a, 1.0);
  EXPECT_TRUE(time_operators_equal(x, y));
  EXPECT_FALSE(time_operators_equal(x, rotating(a, 1.0)));
  EXPECT_FALSE(time_operators_equal(rotating(a, 1.0), rotating(a, 1.0 + 1e-3)));
}

TEST(TimeOperator, DimensionChecks) {
  TimeOperator t(2);
  EXPECT_THROW(t.add_term({oracle::id(3), 1.0, 0.0, 0}), DimensionError);
  EXPECT_THROW(t.add_term({oracle::id(2), 1.0, 0.0, -1}), DimensionError);
  EXPECT_THROW(TimeOperator(2) + TimeOperator(3), DimensionError);
}
