#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hmpc/error.hpp"
#include "hmpc/hl_controller.hpp"
#include "oracles.hpp"

using namespace hmpc;

namespace {

ReducedModel scalar_reduced(double a, double b) {
  ReducedModel r;
  r.A_H = Matrix::Constant(1, 1, a);
  r.B_H = Matrix::Constant(1, 1, b);
  r.beta = Matrix::Identity(1, 1);
  r.orders = {1};
  r.blocks = {{0, 1}};
  return r;
}

InterconnectedModel scalar_full(double a, double b) {
  SubsystemModel s;
  s.A = Matrix::Constant(1, 1, a);
  s.B = Matrix::Constant(1, 1, b);
  s.E = Matrix::Zero(1, 1);
  s.C = Matrix::Zero(1, 1);
  s.input_set = BallSet(1, 100.0);
  return assemble({s}, CouplingMap{});
}

SlowModel scalar_slow(double a, double b) { return {Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), 1}; }

/// Two-state slow model with one input per subsystem, used for the random tests.
struct TwoByTwo {
  SlowModel slow;
  HLDesign design;
};

TwoByTwo two_by_two(double w_radius, double u_radius) {
  TwoByTwo t;
  t.slow.A_slow = Matrix(2, 2);
  t.slow.A_slow << 0.9, 0.1, 0.0, 1.05;
  t.slow.B_slow = Matrix(2, 2);
  t.slow.B_slow << 1.0, 0.2, 0.1, 0.8;
  t.slow.N_L = 1;
  GainDesign g;
  g.K_H = dlqr_gain(t.slow.A_slow, t.slow.B_slow, Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  g.F_H = t.slow.A_slow + t.slow.B_slow * g.K_H;
  g.F_L_NL = g.F_H;
  t.design = make_hl_design(g, Matrix::Identity(2, 2), 0.1 * Matrix::Identity(2, 2), 4, {{0, 1}, {1, 1}},
                            Vector::Constant(2, u_radius), BallSet(2, w_radius));
  return t;
}

}  // namespace

TEST(Lift, SingleStepIsIdentity) {
  const auto r = scalar_reduced(0.7, 2.0);
  const auto s = lift(r, 1);
  EXPECT_DOUBLE_EQ(s.A_slow(0, 0), 0.7);
  EXPECT_DOUBLE_EQ(s.B_slow(0, 0), 2.0);
}

TEST(Lift, ScalarGeometricSum) {
  const auto s = lift(scalar_reduced(0.5, 1.0), 2);
  EXPECT_NEAR(s.A_slow(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(s.B_slow(0, 0), 1.5, 1e-15);
}

TEST(Lift, BenchmarkDiagonalPower) {
  ReducedModel r;
  r.A_H = 0.97 * Matrix::Identity(2, 2);
  r.B_H = Matrix::Identity(2, 2);
  r.beta = Matrix::Identity(2, 2);
  const auto s = lift(r, 20);
  EXPECT_NEAR(s.A_slow(0, 0), 0.5438, 5e-5);
  EXPECT_NEAR(s.A_slow(1, 1), 0.5438, 5e-5);
  EXPECT_NEAR(s.A_slow(0, 1), 0.0, 1e-15);
  // Closed form of the geometric sum for a scalar ratio.
  const double sum = (1.0 - std::pow(0.97, 20)) / (1.0 - 0.97);
  EXPECT_NEAR(s.B_slow(0, 0), sum, 1e-12);
}

TEST(Lift, RejectsZeroPeriod) {
  try {
    lift(scalar_reduced(0.5, 1.0), 0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(DesignGain, ZeroInputMatrixGivesZeroGain) {
  SlowModel slow{0.5 * Matrix::Identity(2, 2), Matrix::Zero(2, 1), 3};
  SubsystemModel s;
  s.A = 0.6 * Matrix::Identity(2, 2);
  s.B = Matrix::Zero(2, 1);
  s.E = Matrix::Zero(2, 1);
  s.C = Matrix::Zero(1, 2);
  s.input_set = BallSet(1, 1.0);
  const auto full = assemble({s}, CouplingMap{});
  ReducedModel r;
  r.beta = Matrix::Identity(2, 2);
  const auto g = design_gain(slow, full, r, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
  EXPECT_NEAR(g.K_H.norm(), 0.0, 1e-14);
  EXPECT_NEAR(g.rho_F_H, 0.5, 1e-12);
  EXPECT_NEAR(g.rho_F_L_NL, std::pow(0.6, 3), 1e-12);
  EXPECT_EQ(g.detune_rounds, 0);
}

TEST(DesignGain, ScalarMatchesHandRiccati) {
  // P^2 - P/4 - 1 = 0 for a = 0.5, b = q = r = 1.
  const double p = (0.25 + std::sqrt(0.0625 + 4.0)) / 2.0;
  const double k = -0.5 * p / (1.0 + p);
  const auto g = design_gain(scalar_slow(0.5, 1.0), scalar_full(0.5, 1.0), scalar_reduced(0.5, 1.0),
                             Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  EXPECT_LT(g.K_H(0, 0), 0.0);
  EXPECT_NEAR(g.K_H(0, 0), k, 1e-10);
  EXPECT_LT(std::abs(g.F_H(0, 0)), 0.5);
  EXPECT_NEAR(g.F_L_NL(0, 0), 0.5 + k, 1e-10);
  EXPECT_NEAR(g.rho_F_L_NL, std::abs(0.5 + k), 1e-10);
}

TEST(DesignGain, DetunesWhenFullLoopUnstable) {
  // The reduced model believes the input is 10x weaker than it is, so an
  // aggressive gain overshoots on the full model until R grows.
  const auto g = design_gain(scalar_slow(0.9, 0.1), scalar_full(0.9, 1.0), scalar_reduced(0.9, 0.1),
                             Matrix::Identity(1, 1), 1e-4 * Matrix::Identity(1, 1));
  EXPECT_GT(g.detune_rounds, 0);
  EXPECT_LT(g.rho_F_H, 1.0);
  EXPECT_LT(g.rho_F_L_NL, 1.0);
  EXPECT_NEAR(g.R_used(0, 0), 1e-4 * std::pow(4.0, g.detune_rounds), 1e-16);
  EXPECT_NEAR(oracle::spectral_radius(g.F_L_NL), g.rho_F_L_NL, 1e-10);
}

TEST(DesignGain, FailsWhenNoDetuningHelps) {
  // Full model unstable and uncontrollable: no gain can fix it.
  SubsystemModel s;
  s.A = Matrix::Constant(1, 1, 1.2);
  s.B = Matrix::Zero(1, 1);
  s.E = Matrix::Zero(1, 1);
  s.C = Matrix::Zero(1, 1);
  s.input_set = BallSet(1, 1.0);
  const auto full = assemble({s}, CouplingMap{});
  try {
    design_gain(scalar_slow(0.5, 1.0), full, scalar_reduced(0.5, 1.0), Matrix::Identity(1, 1),
                Matrix::Identity(1, 1));
    FAIL() << "expected DesignFailed";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DesignFailed);
  }
}

TEST(TerminalCost, ZeroClosedLoopIsOneStep) {
  Matrix k(1, 2);
  k << 0.3, -0.7;
  const Matrix q = Matrix::Identity(2, 2);
  const Matrix r = 0.1 * Matrix::Identity(1, 1);
  const Matrix p = terminal_cost(Matrix::Zero(2, 2), k, q, r);
  EXPECT_LT((p - (q + k.transpose() * r * k)).norm(), 1e-14);
}

TEST(TerminalCost, ScalarClosedForm) {
  // Q + K^2 R = 1 + 2^2 * 0.5 = 3 and F = 0.5.
  const Matrix p = terminal_cost(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 2.0), Matrix::Identity(1, 1),
                                 Matrix::Constant(1, 1, 0.5));
  EXPECT_NEAR(p(0, 0), 4.0, 1e-12);
}

TEST(TerminalCost, RandomAgainstKroneckerSolve) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix f = oracle::random_stable(3, 0.8, rng);
    const Matrix k = oracle::random_matrix(2, 3, rng);
    const Matrix q = Matrix::Identity(3, 3);
    const Matrix r = 0.1 * Matrix::Identity(2, 2);
    const Matrix p = terminal_cost(f, k, q, r);
    const Matrix ref = oracle::lyapunov_kron(f, q + k.transpose() * r * k);
    EXPECT_LT((p - ref).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, ref.norm()));
    EXPECT_LT((f.transpose() * p * f - p + q + k.transpose() * r * k).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(TerminalCost, UnstableLoopRejected) {
  EXPECT_THROW(terminal_cost(Matrix::Constant(1, 1, 1.5), Matrix::Zero(1, 1), Matrix::Identity(1, 1),
                             Matrix::Identity(1, 1)),
               Error);
}

TEST(MakeHLDesign, TightenedInputsAndTerminalLevel) {
  const auto t = two_by_two(0.05, 5.0);
  const auto& d = t.design;
  ASSERT_EQ(d.U_tight.size(), 2u);
  for (int i = 0; i < 2; ++i) {
    const double expected = 5.0 - d.K_H.row(i).norm() * d.Z.radius;
    EXPECT_NEAR(d.U_tight[i].radius, expected, 1e-12);
  }
  // Every point of X_F keeps K x within the tightened balls.
  std::mt19937 rng(3);
  const Eigen::LLT<Matrix> llt(d.P_H);
  for (int s = 0; s < 200; ++s) {
    const Vector dir = oracle::unit_sphere(2, rng);
    const Vector x = llt.matrixU().solve(dir) * std::sqrt(d.X_F.level);
    EXPECT_NEAR(x.dot(d.P_H * x), d.X_F.level, 1e-9 * d.X_F.level);
    for (int i = 0; i < 2; ++i) EXPECT_LE(std::abs(d.K_H.row(i).dot(x)), d.U_tight[i].radius * (1 + 1e-9));
  }
}

TEST(MakeHLDesign, EmptyTighteningThrows) {
  try {
    two_by_two(5.0, 0.1);
    FAIL() << "expected EmptyResult";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyResult);
  }
}

TEST(SolveHL, OriginStaysAtOrigin) {
  const auto t = two_by_two(0.05, 5.0);
  const auto sol = solve_hl(t.design, t.slow, Vector::Zero(2), Matrix::Identity(2, 2));
  EXPECT_LT(sol.x_nominal_0.norm(), 1e-8);
  for (const auto& u : sol.u_nominal_seq) EXPECT_LT(u.norm(), 1e-8);
  EXPECT_LT(sol.u_applied.norm(), 1e-8);
  EXPECT_NEAR(sol.objective, 0.0, 1e-12);
}

TEST(SolveHL, ScalarMatchesDynamicProgramming) {
  const double a = 1.2, b = 1.0, q = 1.0, r = 0.1;
  GainDesign g;
  g.K_H = dlqr_gain(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), Matrix::Identity(1, 1),
                    Matrix::Identity(1, 1));
  g.F_H = Matrix::Constant(1, 1, a + b * g.K_H(0, 0));
  g.F_L_NL = g.F_H;
  const auto d = make_hl_design(g, Matrix::Constant(1, 1, q), Matrix::Constant(1, 1, r), 2, {{0, 1}},
                                Vector::Constant(1, 1e4), BallSet(1, 0.01));
  const double x = 3.0;
  const auto sol = solve_hl_projected(d, scalar_slow(a, b), Vector::Constant(1, x));

  // The cost-to-go is P_0 x0^2 with P_0 > 0, so the free initial nominal
  // state moves toward the origin by the full tube radius.
  const double x0 = x - d.Z.radius;
  std::vector<double> p(3), k(2);
  p[2] = d.P_H(0, 0);
  for (int j = 1; j >= 0; --j) {
    k[j] = -a * b * p[j + 1] / (r + b * b * p[j + 1]);
    p[j] = q + a * a * p[j + 1] + a * b * p[j + 1] * k[j];
  }
  const double u0 = k[0] * x0;
  const double x1 = a * x0 + b * u0;
  const double u1 = k[1] * x1;
  EXPECT_NEAR(sol.x_nominal_0(0), x0, 1e-6);
  EXPECT_NEAR(sol.u_nominal_seq[0](0), u0, 1e-6);
  EXPECT_NEAR(sol.u_nominal_seq[1](0), u1, 1e-6);
  EXPECT_NEAR(sol.objective, p[0] * x0 * x0, 1e-6 * p[0] * x0 * x0);
  EXPECT_NEAR(sol.u_applied(0), u0 + g.K_H(0, 0) * (x - x0), 1e-6);
  EXPECT_NEAR(sol.x_bar_pred(0), a * x + b * sol.u_applied(0), 1e-12);
}

TEST(SolveHL, TubePropertyOnRandomStates) {
  const auto t = two_by_two(0.05, 5.0);
  const auto& d = t.design;
  const double bound = norm2(d.K_H) * d.Z.radius;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> scale(0.0, 6.0);
  int feasible = 0;
  for (int s = 0; s < 100; ++s) {
    const Vector x = oracle::unit_sphere(2, rng) * scale(rng);
    HLOptions opt;
    opt.diagnose = false;
    HLSolution sol;
    try {
      sol = solve_hl_projected(d, t.slow, x, opt);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InfeasibleHL);
      continue;
    }
    ++feasible;
    EXPECT_LE((sol.u_applied - sol.u_nominal_seq[0]).norm(), bound * (1 + 1e-9) + 1e-9);
    EXPECT_LE(sol.tube_distance, d.Z.radius * (1 + 1e-6) + 1e-9);
    EXPECT_TRUE(d.X_F.contains(sol.x_nominal_seq.back(), 1e-6 * std::max(1.0, d.X_F.level)));
    for (const auto& u : sol.u_nominal_seq) {
      for (int i = 0; i < 2; ++i) EXPECT_LE(std::abs(u(i)), d.U_tight[i].radius * (1 + 1e-6) + 1e-9);
    }
    for (int i = 0; i < 2; ++i) EXPECT_LE(std::abs(sol.u_applied(i)), 5.0 * (1 + 1e-6));
    for (int j = 0; j < d.N_H; ++j) {
      const Vector next = t.slow.A_slow * sol.x_nominal_seq[j] + t.slow.B_slow * sol.u_nominal_seq[j];
      EXPECT_LT((next - sol.x_nominal_seq[j + 1]).norm(), 1e-7);
    }
  }
  EXPECT_GT(feasible, 50);
}

TEST(SolveHL, FarStateReportsPhaseOneDistance) {
  const auto t = two_by_two(0.05, 0.5);
  try {
    solve_hl_projected(t.design, t.slow, Vector::Constant(2, 1e3));
    FAIL() << "expected InfeasibleHL";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InfeasibleHL);
    EXPECT_NE(std::string(e.what()).find("closest admissible"), std::string::npos);
  }
  EXPECT_GT(hl_phase1_distance(t.design, t.slow, Vector::Constant(2, 1e3)), 100.0);
  EXPECT_LT(hl_phase1_distance(t.design, t.slow, Vector::Zero(2)), 1e-6);
}

TEST(SolveHL, ProjectionUsesBeta) {
  const auto t = two_by_two(0.05, 5.0);
  Matrix beta = Matrix::Zero(2, 4);
  beta(0, 1) = 1.0;
  beta(1, 3) = -1.0;
  Vector x(4);
  x << 9.0, 0.5, -7.0, 0.25;
  const auto sol = solve_hl(t.design, t.slow, x, beta);
  EXPECT_NEAR(sol.projected(0), 0.5, 1e-15);
  EXPECT_NEAR(sol.projected(1), -0.25, 1e-15);
  EXPECT_THROW(solve_hl(t.design, t.slow, Vector::Zero(3), beta), Error);
}
