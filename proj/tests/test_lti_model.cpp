#include <gtest/gtest.h>

#include <random>

#include "hmpc/error.hpp"
#include "hmpc/lti_model.hpp"
#include "oracles.hpp"

using namespace hmpc;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

SubsystemModel sub(const Matrix& a, const Matrix& b, int p_s, int p_z, double radius = 1.0) {
  SubsystemModel s;
  s.A = a;
  s.B = b;
  s.E = Matrix::Identity(a.rows(), p_s);
  s.C = Matrix::Identity(p_z, a.rows());
  s.input_set = BallSet(static_cast<int>(b.cols()), radius);
  return s;
}

InterconnectedModel random_model(std::mt19937& rng, int m_sub, int n_each) {
  std::vector<SubsystemModel> subs;
  for (int i = 0; i < m_sub; ++i) {
    SubsystemModel s;
    s.A = oracle::random_stable(n_each, 0.6, rng);
    s.B = oracle::random_matrix(n_each, 1, rng);
    s.E = oracle::random_matrix(n_each, 2, rng);
    s.C = oracle::random_matrix(2, n_each, rng);
    s.input_set = BallSet(1, 1.0);
    subs.push_back(s);
  }
  CouplingMap l = CouplingMap::zero(subs);
  for (int i = 0; i < m_sub; ++i)
    for (int j = 0; j < m_sub; ++j)
      if (i != j) l.blocks[i][j] = 0.05 * oracle::random_matrix(2, 2, rng);
  return assemble(subs, l);
}

}  // namespace

TEST(Assemble, SingleSubsystemWithoutCoupling) {
  auto s = sub(scalar(0.3), scalar(2.0), 1, 1);
  const auto model = assemble({s}, CouplingMap{});
  EXPECT_EQ(model.A, s.A);
  EXPECT_EQ(model.B, s.B);
}

TEST(Assemble, ZeroCouplingIsBlockDiagonal) {
  Matrix a1(2, 2), a2(2, 2);
  a1 << 0.5, 0.1, 0.0, 0.4;
  a2 << 0.2, 0.0, 0.3, 0.1;
  std::vector<SubsystemModel> subs{sub(a1, Matrix::Identity(2, 1), 2, 2), sub(a2, Matrix::Identity(2, 1), 2, 2)};
  const auto model = assemble(subs, CouplingMap::zero(subs));
  EXPECT_EQ(model.A.topRightCorner(2, 2).norm(), 0.0);
  EXPECT_EQ(model.A.bottomLeftCorner(2, 2).norm(), 0.0);
  EXPECT_EQ(model.A.topLeftCorner(2, 2), a1);
  EXPECT_EQ(model.decoupled_A(), model.A);
}

TEST(Assemble, ScalarPairEigenvalues) {
  std::vector<SubsystemModel> subs{sub(scalar(0.5), scalar(1), 1, 1), sub(scalar(0.5), scalar(1), 1, 1)};
  CouplingMap l = CouplingMap::zero(subs);
  l.blocks[0][1] = scalar(0.1);
  l.blocks[1][0] = scalar(0.1);
  const auto model = assemble(subs, l);
  Matrix expected(2, 2);
  expected << 0.5, 0.1, 0.1, 0.5;
  EXPECT_EQ(model.A, expected);
  // Symmetric 2x2: eigenvalues a +- b.
  const auto roots = oracle::poly_roots(oracle::char_poly(model.A));
  std::vector<double> re{roots[0].real(), roots[1].real()};
  std::sort(re.begin(), re.end());
  EXPECT_NEAR(re[0], 0.4, 1e-12);
  EXPECT_NEAR(re[1], 0.6, 1e-12);
}

TEST(Assemble, RejectsSelfCouplingAndBadChains) {
  std::vector<SubsystemModel> subs{sub(scalar(0.5), scalar(1), 1, 1), sub(scalar(0.5), scalar(1), 1, 1)};
  CouplingMap l = CouplingMap::zero(subs);
  l.blocks[0][0] = scalar(0.2);
  try {
    assemble(subs, l);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonzeroSelfCoupling);
  }
  CouplingMap bad = CouplingMap::zero(subs);
  bad.blocks[0][1] = Matrix::Ones(2, 1);
  try {
    assemble(subs, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(StructuralChecks, SchurBoundaryAndReachability) {
  auto zero = assemble({sub(Matrix::Zero(3, 3), Matrix::Identity(3, 1), 3, 3)}, CouplingMap{});
  auto rep = validate_structure(zero);
  ASSERT_NE(rep.find("schur_A_L"), nullptr);
  EXPECT_TRUE(rep.find("schur_A_L")->pass);
  EXPECT_EQ(rep.find("schur_A_L")->value, 0.0);
  EXPECT_FALSE(rep.find("reachable_1")->pass);  // single input cannot reach R^3 through A = 0

  auto unit = assemble({sub(scalar(1.0), scalar(1.0), 1, 1)}, CouplingMap{});
  EXPECT_FALSE(validate_structure(unit).find("schur_A_L")->pass);

  Matrix shift(2, 2);
  shift << 0, 0, 1, 0;
  auto chain = assemble({sub(0.5 * shift, Matrix::Identity(2, 1), 2, 2)}, CouplingMap{});
  EXPECT_TRUE(validate_structure(chain).pass());
}

TEST(Step, ExamplesAndDimensionCheck) {
  auto model = assemble({sub(0.5 * Matrix::Identity(2, 2), Matrix::Identity(2, 2), 2, 2)}, CouplingMap{});
  EXPECT_EQ(model.step(Vector::Zero(2), Vector::Zero(2)).norm(), 0.0);
  EXPECT_EQ(model.step(Vector::Ones(2), Vector::Zero(2)), Vector::Constant(2, 0.5));
  try {
    model.step(Vector::Zero(3), Vector::Zero(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(Step, HundredStepsMatchMatrixPower) {
  std::mt19937 rng(21);
  const auto model = random_model(rng, 2, 2);
  Vector x = Vector::Ones(4);
  const Vector x0 = x;
  for (int h = 0; h < 100; ++h) x = model.step(x, Vector::Zero(2));
  Matrix p = Matrix::Identity(4, 4);
  for (int h = 0; h < 100; ++h) p = model.A * p;
  EXPECT_LT((x - p * x0).norm(), 1e-12 * (1 + x0.norm()));
}

TEST(Properties, BlockConsistencyAndLinearity) {
  std::mt19937 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = random_model(rng, 2 + trial % 2, 3);
    for (int i = 0; i < model.count(); ++i) {
      for (int j = 0; j < model.count(); ++j) {
        if (i == j) continue;
        const auto& bi = model.state_blocks[i];
        const auto& bj = model.state_blocks[j];
        const Matrix expect = model.subsystems[i].E * model.coupling.blocks[i][j] * model.subsystems[j].C;
        EXPECT_EQ((model.A.block(bi.offset, bj.offset, bi.size, bj.size) - expect).norm(), 0.0);
      }
    }
    const Vector x1 = oracle::random_matrix(model.n(), 1, rng), x2 = oracle::random_matrix(model.n(), 1, rng);
    const Vector u1 = oracle::random_matrix(model.m(), 1, rng), u2 = oracle::random_matrix(model.m(), 1, rng);
    const Vector lhs = model.step(x1 + x2, u1 + u2);
    const Vector rhs = model.step(x1, u1) + model.step(x2, u2) - model.step(Vector::Zero(model.n()), Vector::Zero(model.m()));
    EXPECT_LT((lhs - rhs).norm(), 1e-12 * (1 + lhs.norm()));
    EXPECT_NEAR(spectral_radius(model.A), oracle::spectral_radius(model.A), 1e-8);
  }
}

TEST(Simulate, TrajectoryLengthsAndResidual) {
  std::mt19937 rng(23);
  const auto model = random_model(rng, 2, 2);
  std::vector<Vector> inputs(15, Vector::Ones(2));
  const auto traj = simulate(model, Vector::Ones(4), inputs);
  ASSERT_EQ(traj.states.size(), 16u);
  ASSERT_EQ(traj.inputs.size(), 15u);
  for (std::size_t h = 0; h < inputs.size(); ++h) {
    EXPECT_LT((traj.states[h + 1] - model.A * traj.states[h] - model.B * inputs[h]).norm(), 1e-10);
  }
}
