#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "freespec/errors.hpp"
#include "freespec/extremality.hpp"
#include "freespec/pencil.hpp"
#include "freespec/solver.hpp"
#include "support.hpp"

using namespace freespec;

namespace {

LinearFunctional rc_functional(int level, std::vector<Matrix> coeffs) {
  LinearFunctional l;
  l.level = level;
  l.coefficients = std::move(coeffs);
  return l;
}

/// Random program with G0 > 0 (x = 0 is interior) and c = <G_i, Z0> for a
/// positive definite Z0, which makes the dual strictly feasible and the
/// optimum finite.
LmiProgram random_program(int m, int size, Rng& rng) {
  LmiProgram prog;
  const Matrix b = Matrix::NullaryExpr(size, size, [&] { return rng.normal(); });
  prog.g0 = b * b.transpose() / size + Matrix::Identity(size, size);
  const Matrix w = Matrix::NullaryExpr(size, size, [&] { return rng.normal(); });
  const Matrix z0 = w * w.transpose() / size + 0.1 * Matrix::Identity(size, size);
  prog.c.resize(m);
  for (int i = 0; i < m; ++i) {
    prog.g.push_back(random_symmetric(size, rng).matrix());
    prog.c(i) = (prog.g.back().array() * z0.array()).sum();
  }
  return prog;
}

}  // namespace

TEST(Solve, DiscMinimumOfFirstCoordinate) {
  const LinearFunctional l = rc_functional(1, {Matrix::Ones(1, 1), Matrix::Zero(1, 1)});
  const FunctionalMinimum m = minimize_functional(free_disc(), l);
  ASSERT_EQ(m.result.status, SolveStatus::optimal);
  EXPECT_NEAR(m.optimizer[0](0, 0), -1.0, 1e-7);
  EXPECT_NEAR(m.optimizer[1](0, 0), 0.0, 1e-7);
  EXPECT_NEAR(m.result.primal_objective, -1.0, 1e-7);
}

TEST(Solve, ZeroObjective) {
  const LinearFunctional l = rc_functional(2, {Matrix::Zero(2, 2), Matrix::Zero(2, 2)});
  const FunctionalMinimum m = minimize_functional(free_disc(), l);
  ASSERT_EQ(m.result.status, SolveStatus::optimal);
  EXPECT_NEAR(m.result.primal_objective, 0.0, 1e-12);
  EXPECT_TRUE(is_member(free_disc(), m.optimizer));
}

TEST(Solve, VacuousConstraintIsUnbounded) {
  const LinearPencil p{MatrixTuple({SymMatrix::zero(1)})};
  const LinearFunctional l = rc_functional(1, {Matrix::Ones(1, 1)});
  EXPECT_EQ(solve(functional_program(p, l)).status, SolveStatus::unbounded);
}

TEST(Solve, InfeasibleProgram) {
  // x >= 1 and x <= -1. The dual is feasible and unbounded.
  LmiProgram prog;
  prog.c = Vector::Constant(1, 0.5);
  prog.g0 = -Matrix::Identity(2, 2);
  prog.g = {Matrix(Eigen::Vector2d(1.0, -1.0).asDiagonal())};
  EXPECT_EQ(solve(prog).status, SolveStatus::infeasible);
}

TEST(Solve, RejectsInconsistentShapes) {
  LmiProgram prog;
  prog.c = Vector::Ones(2);
  prog.g0 = Matrix::Identity(2, 2);
  prog.g = {Matrix::Identity(2, 2)};
  EXPECT_THROW(solve(prog), ArgumentError);
}

TEST(MinimizeFunctional, DiscDiagonalDirection) {
  const LinearFunctional l = rc_functional(1, {Matrix::Ones(1, 1), Matrix::Ones(1, 1)});
  const FunctionalMinimum m = minimize_functional(free_disc(), l);
  ASSERT_EQ(m.result.status, SolveStatus::optimal);
  EXPECT_NEAR(m.optimizer[0](0, 0), -std::numbers::sqrt2 / 2, 1e-6);
  EXPECT_NEAR(m.optimizer[1](0, 0), -std::numbers::sqrt2 / 2, 1e-6);
}

TEST(MinimizeFunctional, DiscTraceAtLevelTwo) {
  const LinearFunctional l = rc_functional(2, {Matrix::Identity(2, 2), Matrix::Zero(2, 2)});
  const FunctionalMinimum m = minimize_functional(free_disc(), l);
  ASSERT_EQ(m.result.status, SolveStatus::optimal);
  EXPECT_NEAR(m.result.primal_objective, -2.0, 1e-6);
  EXPECT_NEAR(apply_functional(l, m.optimizer), -2.0, 1e-6);
}

TEST(MinimizeFunctional, BeatsRandomFeasiblePoints) {
  PencilGenConfig cfg;
  cfg.g = 3;
  cfg.d = 3;
  cfg.seed = 21;
  const LinearPencil p = random_pencil(cfg);
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const LinearFunctional l = random_functional(FunctionalKind::rc, p, 2, 100 + trial);
    const FunctionalMinimum m = minimize_functional(p, l);
    ASSERT_EQ(m.result.status, SolveStatus::optimal);
    EXPECT_TRUE(is_member(p, m.optimizer));
    const double best = apply_functional(l, m.optimizer);
    for (int k = 0; k < 20; ++k) {
      const MatrixTuple y = freespec::testing::interior_point(p, 2, rng);
      EXPECT_LE(best, apply_functional(l, y) + 1e-7 * (1 + std::abs(best)));
    }
  }
}

TEST(LevelEncoding, RoundTrip) {
  Rng rng(22);
  const LevelEncoding enc{3, 4};
  const MatrixTuple x = freespec::testing::random_tuple(3, 4, rng);
  EXPECT_EQ(enc.size(), 30);
  EXPECT_LE(freespec::testing::max_abs_diff(enc.decode(enc.encode(x)), x), 1e-15);
}

TEST(SolverProperties, RandomProgramsAreCertified) {
  Rng rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    const int m = 1 + static_cast<int>(rng.uniform_int(0, 9));
    const int size = 2 + static_cast<int>(rng.uniform_int(0, 10));
    const LmiProgram prog = random_program(m, size, rng);
    const SolveResult r = solve(prog);
    ASSERT_EQ(r.status, SolveStatus::optimal) << "trial " << trial;
    const double g0_norm = prog.g0.norm();
    Eigen::SelfAdjointEigenSolver<Matrix> primal(prog.constraint_at(r.x), Eigen::EigenvaluesOnly);
    EXPECT_GE(primal.eigenvalues()(0), -1e-9 * (1 + g0_norm));
    Eigen::SelfAdjointEigenSolver<Matrix> dual(r.dual, Eigen::EigenvaluesOnly);
    EXPECT_GE(dual.eigenvalues()(0), -1e-9 * (1 + r.dual.norm()));
    const double pcost = prog.c.dot(r.x);
    const double dcost = -(prog.g0.array() * r.dual.array()).sum();
    EXPECT_GE(pcost, dcost - 1e-8 * (1 + std::abs(pcost)));
    EXPECT_LE(std::abs(pcost - dcost) / std::max(1.0, std::abs(pcost)), 1e-9);
    EXPECT_LE(r.relative_gap, 1e-9);
  }
}

TEST(SolverProperties, GapShrinksAtTheEnd) {
  Rng rng(24);
  const LmiProgram prog = random_program(6, 8, rng);
  const SolveResult r = solve(prog);
  ASSERT_EQ(r.status, SolveStatus::optimal);
  const auto& h = r.gap_history;
  ASSERT_GE(h.size(), 2u);
  const std::size_t first = h.size() > 10 ? h.size() - 10 : 0;
  for (std::size_t i = first + 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1]);
}

TEST(SolverProperties, Deterministic) {
  Rng rng(25);
  const LmiProgram prog = random_program(5, 7, rng);
  const SolveResult a = solve(prog);
  const SolveResult b = solve(prog);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.gap_history, b.gap_history);
}

TEST(DilationAlpha, DiscFromOrigin) {
  const MatrixTuple y = MatrixTuple::zeros(2, 1);
  const DilationColumn beta{Vector::Ones(1), Vector::Zero(1)};
  const AlphaMaximum a = maximize_dilation_alpha(free_disc(), y, beta);
  ASSERT_EQ(a.result.status, SolveStatus::optimal);
  EXPECT_NEAR(a.alpha, 1.0, 1e-7);
}

TEST(DilationAlpha, ScalesInverselyWithBeta) {
  PencilGenConfig cfg;
  cfg.g = 2;
  cfg.d = 3;
  cfg.seed = 26;
  const LinearPencil p = random_pencil(cfg);
  Rng rng(26);
  const MatrixTuple y = freespec::testing::interior_point(p, 2, rng);
  const DilationColumn beta{Vector::NullaryExpr(2, [&] { return rng.normal(); }), Vector::NullaryExpr(2, [&] { return rng.normal(); })};
  DilationColumn scaled = beta;
  for (auto& b : scaled) b *= 3.0;
  const AlphaMaximum a = maximize_dilation_alpha(p, y, beta);
  const AlphaMaximum b = maximize_dilation_alpha(p, y, scaled);
  ASSERT_EQ(a.result.status, SolveStatus::optimal);
  ASSERT_EQ(b.result.status, SolveStatus::optimal);
  EXPECT_GT(a.alpha, 0.0);
  EXPECT_NEAR(b.alpha * 3.0, a.alpha, 1e-6 * a.alpha);
}

TEST(DilationGamma, DiscPinnedAfterMaximalAlpha) {
  const LinearPencil p = free_disc();
  const MatrixTuple y = MatrixTuple::zeros(2, 1);
  const DilationColumn beta{Vector::Ones(1), Vector::Zero(1)};
  const AlphaMaximum a = maximize_dilation_alpha(p, y, beta);
  DilationColumn scaled = beta;
  for (auto& b : scaled) b *= a.alpha;
  const Matrix kernel(2, 0);
  const GammaMaximum g = maximize_gamma(p, y, scaled, kernel, a.gamma, Vector::Ones(2));
  ASSERT_EQ(g.result.status, SolveStatus::optimal);
  EXPECT_LE(g.gamma.norm(), 1e-6);
}

// Simplex at level 1 with the column pinned at zero: the gamma set is the
// triangle itself, so a generic direction lands on one of its vertices.
TEST(DilationGamma, LandsOnVertex) {
  const LinearPencil p = free_simplex();
  const MatrixTuple y = MatrixTuple::zeros(2, 1);
  const DilationColumn zero{Vector::Zero(1), Vector::Zero(1)};
  Vector dir(2);
  dir << 0.3, 1.0;
  const GammaMaximum g = maximize_gamma(p, y, zero, Matrix(3, 0), Vector::Zero(2), dir);
  ASSERT_EQ(g.result.status, SolveStatus::optimal);
  // max 0.3 g1 + g2 over {g1 <= 1, g2 <= 1, g1 + g2 >= -1} is at (1, 1).
  EXPECT_NEAR(g.gamma(0), 1.0, 1e-6);
  EXPECT_NEAR(g.gamma(1), 1.0, 1e-6);
}
