#include <gtest/gtest.h>

#include <random>

#include "hmpc/error.hpp"
#include "hmpc/linalg.hpp"
#include "hmpc/set_calculus.hpp"
#include "oracles.hpp"

using namespace hmpc;

TEST(BallCalculus, SumAndDifferenceExamples) {
  EXPECT_EQ(minkowski_sum(BallSet(2, 1), BallSet(2, 0)).radius, 1.0);
  EXPECT_EQ(minkowski_sum(BallSet(2, 1), BallSet(2, 2)).radius, 3.0);
  EXPECT_EQ(minkowski_diff(BallSet(2, 3), BallSet(2, 1)).radius, 2.0);
  EXPECT_EQ(minkowski_diff(BallSet(2, 1), BallSet(2, 1)).radius, 0.0);
  try {
    minkowski_diff(BallSet(2, 1), BallSet(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyResult);
  }
  EXPECT_THROW(minkowski_sum(BallSet(2, 1), BallSet(3, 1)), Error);
  EXPECT_THROW(BallSet(2, -1.0), Error);
}

TEST(BallCalculus, SumMembershipBySampledDecomposition) {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> radius(0.0, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    const BallSet a(3, radius(rng)), b(3, radius(rng));
    const BallSet s = minkowski_sum(a, b);
    EXPECT_DOUBLE_EQ(s.radius, a.radius + b.radius);
    EXPECT_DOUBLE_EQ(minkowski_diff(s, b).radius, a.radius);
    // Every boundary point of the sum splits as (a-part) + (b-part) along its direction.
    for (int k = 0; k < 1000; ++k) {
      const Vector dir = oracle::unit_sphere(3, rng);
      const Vector p = s.radius * dir;
      const Vector pa = a.radius * dir, pb = p - pa;
      EXPECT_TRUE(a.contains(pa, 1e-12));
      EXPECT_TRUE(b.contains(pb, 1e-12));
      EXPECT_FALSE(s.contains(p * (1 + 1e-9) + 1e-9 * dir, 0.0));
    }
  }
}

TEST(LinearImage, ExamplesAndSphereOracle) {
  EXPECT_DOUBLE_EQ(linear_image_outer(Matrix::Identity(2, 2), BallSet(2, 1.5)).radius, 1.5);
  EXPECT_DOUBLE_EQ(linear_image_outer(Matrix::Zero(2, 2), BallSet(2, 1.5)).radius, 0.0);
  Matrix k(2, 2);
  k << 2, 0, 0, 1;
  EXPECT_NEAR(linear_image_outer(k, BallSet(2, 1)).radius, 2.0, 1e-15);
  std::mt19937 rng(32);
  EXPECT_NEAR(oracle::sphere_max(k, 10000, rng), 2.0, 1e-12);
}

TEST(LinearImage, SampledSoundness) {
  std::mt19937 rng(33);
  const Matrix k = oracle::random_matrix(2, 4, rng);
  const BallSet a(4, 1.7);
  const BallSet img = linear_image_outer(k, a);
  EXPECT_LE(oracle::sphere_max(k, 20000, rng) * a.radius, img.radius * (1 + 1e-12));
  for (int s = 0; s < 1000; ++s) {
    const Vector x = a.radius * oracle::unit_ball(4, rng);
    EXPECT_TRUE(img.contains(k * x, 1e-12));
  }
}

TEST(RPI, ScalarAndZeroExamples) {
  const auto zero = rpi_outer(Matrix::Zero(2, 2), BallSet(2, 0.7));
  EXPECT_DOUBLE_EQ(zero.outer_radius, 0.7);
  const auto half = rpi_outer(Matrix::Constant(1, 1, 0.5), BallSet(1, 1.0));
  EXPECT_DOUBLE_EQ(half.outer_radius, 2.0);
  EXPECT_TRUE(half.invariant);
  try {
    rpi_outer(Matrix::Constant(1, 1, 1.0), BallSet(1, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotContractive);
  }
}

TEST(RPI, InvarianceInequalityOnRandomContractions) {
  std::mt19937 rng(34);
  std::uniform_real_distribution<double> target(0.05, 0.95), rw(0.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 4;
    Matrix f = oracle::random_matrix(n, n, rng);
    f *= target(rng) / norm2(f);
    const BallSet w(n, rw(rng));
    const auto z = rpi_outer(f, w, 1e-9);
    EXPECT_GE(z.outer_radius, w.radius);
    EXPECT_LE(norm2(f) * z.outer_radius + w.radius, z.outer_radius * (1 + 1e-9) + 1e-15);
    EXPECT_TRUE(z.invariant);
  }
}

TEST(TerminalSet, ScalarHandValueAndCaps) {
  const auto set = terminal_set(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0),
                                BallSet(1, 2.0));
  EXPECT_NEAR(set.level, 4.0, 1e-14);
  const auto capped = terminal_set(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1),
                                   BallSet(1, 2.0), 1e6);
  EXPECT_EQ(capped.level, 1e6);
  const auto degenerate = terminal_set(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0),
                                       Matrix::Constant(1, 1, 1.0), BallSet(1, 0.0));
  EXPECT_TRUE(degenerate.degenerate);
  EXPECT_EQ(degenerate.level, 0.0);
}

TEST(TerminalSet, SampledInvarianceAndBudget) {
  std::mt19937 rng(35);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix f = oracle::random_stable(2, 0.85, rng);
    const Matrix p = oracle::lyapunov_kron(f, Matrix::Identity(2, 2));
    const Matrix k = oracle::random_matrix(1, 2, rng);
    const BallSet budget(1, 1.3);
    const auto xf = terminal_set(f, p, k, budget);
    const Eigen::LLT<Matrix> llt(p);
    const Matrix l_inv_t = llt.matrixU().solve(Matrix::Identity(2, 2));  // maps unit ball onto the ellipsoid shape
    for (int s = 0; s < 1000; ++s) {
      const Vector x = std::sqrt(xf.level) * l_inv_t * oracle::unit_ball(2, rng);
      ASSERT_TRUE(xf.contains(x, 1e-9));
      EXPECT_LE((k * x).norm(), budget.radius * (1 + 1e-9));
      const Vector fx = f * x;
      EXPECT_LE(fx.dot(p * fx), x.dot(p * x) + 1e-12);
    }
  }
}
