#include <gtest/gtest.h>

#include <random>

#include "hmpc/lp_solver.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace hmpc;

TEST(LP, SingleVariableUpperBound) {
  const auto res = solve_lp(Vector::Ones(1), Matrix::Ones(1, 1), Vector::Ones(1), Vector::Zero(1));
  ASSERT_EQ(res.status, SolveStatus::Optimal);
  EXPECT_NEAR(res.x(0), 1.0, 1e-14);
}

TEST(LP, DegenerateFaceReturnsLexicographicallySmallestVertex) {
  const auto res = solve_lp(Vector::Ones(2), Matrix::Ones(1, 2), Vector::Ones(1), Vector::Zero(2));
  ASSERT_EQ(res.status, SolveStatus::Optimal);
  EXPECT_NEAR(res.objective, 1.0, 1e-12);
  // Vertices of the optimal face: (1,0) and (0,1); the smaller one first-coordinate-wise is (0,1).
  EXPECT_NEAR(res.x(0), 0.0, 1e-10);
  EXPECT_NEAR(res.x(1), 1.0, 1e-10);
  EXPECT_LE(res.dual_residual, 1e-8);
}

TEST(LP, InfeasibleAndUnbounded) {
  Matrix a(2, 1);
  a << 1, -1;
  const auto inf = solve_lp(Vector::Ones(1), a, Vector(Eigen::Vector2d(1.0, -2.0)), Vector::Zero(1));
  EXPECT_EQ(inf.status, SolveStatus::Infeasible);
  const auto unb = solve_lp(Vector::Ones(2), Matrix(Eigen::RowVector2d(1.0, -1.0)), Vector::Ones(1), Vector::Zero(2));
  EXPECT_EQ(unb.status, SolveStatus::Unbounded);
}

TEST(LP, NegativeLowerBoundsShiftCorrectly) {
  // max -x s.t. x >= -3 -> x = -3.
  const auto res = solve_lp(-Vector::Ones(1), Matrix::Zero(0, 1), Vector::Zero(0), Vector::Constant(1, -3.0));
  ASSERT_EQ(res.status, SolveStatus::Optimal);
  EXPECT_NEAR(res.x(0), -3.0, 1e-14);
}

TEST(LP, RandomInstancesMatchVertexEnumeration) {
  std::mt19937 rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    const auto lp = gen::random_lp(rng);
    const auto ref = oracle::vertex_enumeration(lp.c, lp.a, lp.b, lp.lower);
    ASSERT_TRUE(ref.feasible);
    const auto res = solve_lp(lp.c, lp.a, lp.b, lp.lower);
    ASSERT_EQ(res.status, SolveStatus::Optimal) << trial;
    EXPECT_LE(std::abs(res.objective - ref.objective), 1e-8 * std::max(1.0, std::abs(ref.objective))) << trial;
    EXPECT_LE(res.dual_residual, 1e-8) << trial;
    EXPECT_LE(res.primal_residual, 1e-9) << trial;
  }
}
