#include <gtest/gtest.h>

#include <random>

#include "hmpc/error.hpp"
#include "hmpc/reduction.hpp"
#include "oracles.hpp"

using namespace hmpc;

namespace {

SubsystemModel make_sub(const Matrix& a, const Matrix& b, int p = 1) {
  SubsystemModel s;
  s.A = a;
  s.B = b;
  s.E = Matrix::Zero(a.rows(), p);
  s.E(0, 0) = 1.0;
  s.C = Matrix::Zero(p, a.rows());
  s.C(0, a.rows() - 1) = 1.0;
  s.input_set = BallSet(static_cast<int>(b.cols()), 1.0);
  return s;
}

/// Random subsystem with real, distinct eigenvalues in (0.1, 0.9).
Matrix real_spectrum(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.1, 0.9);
  Vector d(n);
  for (int i = 0; i < n; ++i) d(i) = u(rng);
  Matrix t = oracle::random_matrix(n, n, rng) + 3.0 * Matrix::Identity(n, n);
  return t * d.asDiagonal() * t.inverse();
}

InterconnectedModel random_coupled(std::mt19937& rng, int n1, int n2, double coupling) {
  std::vector<SubsystemModel> subs{make_sub(real_spectrum(n1, rng), oracle::random_matrix(n1, 1, rng)),
                                   make_sub(real_spectrum(n2, rng), oracle::random_matrix(n2, 1, rng))};
  CouplingMap l = CouplingMap::zero(subs);
  l.blocks[0][1] = Matrix::Constant(1, 1, coupling);
  l.blocks[1][0] = Matrix::Constant(1, 1, -coupling);
  return assemble(subs, l);
}

}  // namespace

TEST(Reduce, FullOrderPreservesDcGain) {
  std::mt19937 rng(41);
  const auto model = random_coupled(rng, 3, 2, 0.05);
  const auto r = reduce(model, {3, 2});
  EXPECT_EQ(numerical_rank(r.beta), 5);
  EXPECT_TRUE(verify_reduction(r, model).pass());
}

TEST(Reduce, DominantModeOfDiagonalChain) {
  Matrix a(2, 2);
  a << 0.9, 0.0, 0.0, 0.5;
  const auto model = assemble({make_sub(a, Matrix::Ones(2, 1))}, CouplingMap{});
  const auto r = reduce(model, {1});
  EXPECT_NEAR(r.A_H(0, 0), 0.9, 1e-14);
  EXPECT_NEAR(std::abs(r.beta(0, 0)), 1.0, 1e-14);
  EXPECT_NEAR(r.beta(0, 1), 0.0, 1e-14);
  ReductionOptions neg;
  neg.negative_convention = true;
  EXPECT_NEAR(reduce(model, {1}, neg).beta(0, 0), -1.0, 1e-14);
}

TEST(Reduce, RejectsComplexDominantPairAndBadOrders) {
  Matrix rot(2, 2);
  rot << 0.0, -0.8, 0.8, 0.0;
  const auto model = assemble({make_sub(rot, Matrix::Ones(2, 1))}, CouplingMap{});
  try {
    reduce(model, {1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ComplexDominantMode);
  }
  EXPECT_THROW(reduce(model, {3}), Error);
  EXPECT_THROW(reduce(model, {1, 1}), Error);
}

TEST(ReductionChecks, ZeroRowAndUnitEigenvalueFail) {
  std::mt19937 rng(42);
  const auto model = random_coupled(rng, 3, 3, 0.02);
  auto r = reduce(model, {1, 1});
  auto bad = r;
  bad.beta.row(0).setZero();
  EXPECT_FALSE(verify_reduction(bad, model).find("beta_full_rank_1")->pass);
  auto unstable = r;
  unstable.A_H(1, 1) = 1.0;
  EXPECT_FALSE(verify_reduction(unstable, model).find("schur_A_H")->pass);
}

TEST(ReductionChecks, DcResidualAgainstIndependentSolve) {
  std::mt19937 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = random_coupled(rng, 2 + trial % 5, 2 + (trial / 5) % 5, 0.03);
    const auto r = reduce(model, {1 + trial % 2, 1});
    const auto rep = verify_reduction(r, model);
    EXPECT_TRUE(rep.pass());
    // Independent dense solve of (I - A_L) X = B_L.
    const Matrix x = (Matrix::Identity(model.n(), model.n()) - model.A).householderQr().solve(model.B);
    const Matrix gh = (Matrix::Identity(r.n(), r.n()) - r.A_H).householderQr().solve(r.B_H);
    EXPECT_LE((r.beta * x - gh).norm(), 1e-8);
  }
}

TEST(Properties, SteadyStateConsistencyAndModeVisibility) {
  std::mt19937 rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = random_coupled(rng, 4, 3, 0.04);
    const auto r = reduce(model, {1, 2});
    const Vector u = oracle::random_matrix(model.m(), 1, rng);
    const Vector xss = (Matrix::Identity(model.n(), model.n()) - model.A).lu().solve(model.B * u);
    const Vector xbar = (Matrix::Identity(r.n(), r.n()) - r.A_H).lu().solve(r.B_H * u);
    EXPECT_LT((r.beta * xss - xbar).norm(), 1e-6);
    for (int i = 0; i < model.count(); ++i) {
      Eigen::EigenSolver<Matrix> es(model.subsystems[i].A);
      Eigen::Index k;
      es.eigenvalues().cwiseAbs().maxCoeff(&k);
      const Vector right = es.eigenvectors().col(k).real();
      EXPECT_GT((r.beta_block(model, i) * right).norm(), 1e-6);
    }
  }
}
