#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "freespec/dilation.hpp"
#include "freespec/errors.hpp"
#include "freespec/extremality.hpp"
#include "freespec/pencil.hpp"
#include "support.hpp"

using namespace freespec;

namespace {

MatrixTuple scalars(std::initializer_list<double> values) {
  std::vector<SymMatrix> items;
  for (double v : values) items.emplace_back(Matrix::Constant(1, 1, v));
  return MatrixTuple(std::move(items));
}

LinearPencil random_test_pencil(int g, int d, std::uint64_t seed) {
  PencilGenConfig cfg;
  cfg.g = g;
  cfg.d = d;
  cfg.seed = seed;
  return random_pencil(cfg);
}

/// Unitary invariants of a tuple: sorted spectra of X_1, X_2 and X_1 + X_2.
std::vector<double> fingerprint(const MatrixTuple& x) {
  std::vector<double> out;
  for (const Matrix& m : {x[0].matrix(), x[1].matrix(), Matrix(x[0].matrix() + x[1].matrix())}) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
  }
  return out;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol);
}

}  // namespace

TEST(PickBeta, NoneAtArvesonExtremePoint) {
  const MatrixTuple x = scalars({1, 0});
  Rng rng(1);
  EXPECT_FALSE(pick_beta(free_disc(), x, kernel_of(free_disc(), x), rng).has_value());
}

TEST(PickBeta, UnitDirectionAtInteriorPoint) {
  const LinearPencil p = random_test_pencil(3, 3, 2);
  Rng rng(2);
  const MatrixTuple y = freespec::testing::interior_point(p, 2, rng);
  const auto beta = pick_beta(p, y, kernel_of(p, y), rng);
  ASSERT_TRUE(beta.has_value());
  ASSERT_EQ(beta->size(), 3u);
  double norm2 = 0.0;
  for (const auto& b : *beta) {
    EXPECT_EQ(b.size(), 2);
    norm2 += b.squaredNorm();
  }
  EXPECT_NEAR(norm2, 1.0, 1e-12);
}

TEST(MaximalOneDilation, DiscOriginHasUnitScale) {
  // The disc is rotation invariant, so every unit column reaches scale 1.
  Rng rng(3);
  const MatrixTuple y = MatrixTuple::zeros(2, 1);
  const auto beta = pick_beta(free_disc(), y, kernel_of(free_disc(), y), rng);
  ASSERT_TRUE(beta.has_value());
  const DilationStep s = maximal_one_dilation(free_disc(), y, *beta, rng);
  EXPECT_NEAR(s.scale, 1.0, 1e-7);
  EXPECT_EQ(s.kernel_before, 0);
  EXPECT_GT(s.kernel_after, 0);
  EXPECT_EQ(s.next.order(), 2);
  EXPECT_TRUE(is_member(free_disc(), s.next));
  EXPECT_EQ(s.next[0](0, 0), 0.0);
  EXPECT_LE(s.beta_residual, 1e-12);
}

TEST(MaximalOneDilation, RejectsDirectionOffTheNullSpace) {
  // At (1, 0) the Arveson system is injective, so no nonzero beta qualifies.
  Rng rng(4);
  const DilationColumn beta{Vector::Ones(1), Vector::Zero(1)};
  EXPECT_THROW(maximal_one_dilation(free_disc(), scalars({1, 0}), beta, rng), ArgumentError);
}

TEST(DilateToArveson, ExtremeStartTakesNoSteps) {
  Rng rng(5);
  const MatrixTuple x = scalars({0.6, 0.8});
  const DilationCertificate cert = decompose(free_disc(), x, rng);
  EXPECT_EQ(cert.step_count(), 0);
  EXPECT_EQ(cert.mu, 0);
  ASSERT_EQ(cert.summands.size(), 1u);
  EXPECT_LE(freespec::testing::max_abs_diff(cert.summands[0], x), 1e-12);
  EXPECT_NEAR(std::abs(cert.contractions[0](0, 0)), 1.0, 1e-12);
  EXPECT_FALSE(cert.flagged);
}

TEST(DilateToArveson, DiscOrigin) {
  Rng rng(6);
  const DilationCertificate cert = decompose(free_disc(), MatrixTuple::zeros(2, 1), rng);
  EXPECT_EQ(cert.mu, 2);
  EXPECT_GE(cert.step_count(), 1);
  EXPECT_LE(cert.step_count(), 2);
  EXPECT_LE(cert.summand_size_total(), 3);
  EXPECT_LE(cert.identity_residual, 1e-8);
  EXPECT_LE(cert.reconstruction_residual, 1e-6);
  for (Verdict v : cert.summand_verdicts) EXPECT_EQ(v, Verdict::free_extreme);
  EXPECT_TRUE(verify_certificate(free_disc(), cert).passed);
}

TEST(DilateToArveson, KernelGrowsEveryStep) {
  const LinearPencil p = random_test_pencil(2, 3, 7);
  Rng rng(7);
  const MatrixTuple x = freespec::testing::interior_point(p, 2, rng);
  const DilationCertificate cert = dilate_to_arveson(p, x, rng);
  EXPECT_LE(cert.step_count(), 4);
  int order = 2;
  for (const auto& s : cert.steps) {
    EXPECT_EQ(s.y.order(), order);
    EXPECT_GT(s.kernel_after, s.kernel_before);
    EXPECT_GT(s.scale, 0.0);
    ++order;
  }
  EXPECT_EQ(cert.final_point.order(), order);
  EXPECT_EQ(classify(p, cert.final_point).arveson_nullity, 0);
  // The start point is the compression of the final point to its first n rows.
  const Matrix v = Matrix::Identity(order, 2);
  EXPECT_LE(freespec::testing::max_abs_diff(cert.final_point.congruence(v), x), 1e-9);
}

TEST(DilateToArveson, RejectsNonMembers) {
  Rng rng(8);
  EXPECT_THROW(dilate_to_arveson(free_disc(), scalars({2, 0}), rng), ArgumentError);
}

TEST(Decompose, RandomPencilLevelTwo) {
  const LinearPencil p = random_test_pencil(2, 3, 9);
  Rng rng(9);
  const MatrixTuple x = freespec::testing::interior_point(p, 2, rng);
  const DilationCertificate cert = decompose(p, x, rng);
  EXPECT_LE(cert.step_count(), 4);
  EXPECT_LE(cert.summand_size_total(), 6);
  const CertificateCheck check = verify_certificate(p, cert);
  EXPECT_TRUE(check.passed) << (check.failures.empty() ? "" : check.failures.front());
  EXPECT_LE(check.identity_residual, 1e-8);
  EXPECT_LE(check.reconstruction_residual, 1e-6);
}

TEST(Decompose, DeterministicUnderSeed) {
  const LinearPencil p = random_test_pencil(2, 3, 10);
  Rng point_rng(10);
  const MatrixTuple x = freespec::testing::interior_point(p, 2, point_rng);
  Rng a(11), b(11);
  const DilationCertificate first = decompose(p, x, a);
  const DilationCertificate second = decompose(p, x, b);
  EXPECT_EQ(first.final_point, second.final_point);
  EXPECT_EQ(first.unitary, second.unitary);
}

TEST(SplitIrreducible, IrreducibleTupleStaysWhole) {
  Rng rng(12);
  const MatrixTuple x = freespec::testing::random_tuple(2, 3, rng);
  const IrreducibleSplit s = split_irreducible(x, rng);
  ASSERT_EQ(s.summands.size(), 1u);
  EXPECT_LE((s.unitary.transpose() * s.unitary - Matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(SplitIrreducible, DiagonalPairSplitsIntoScalars) {
  Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
  a.diagonal() << 1, 2;
  b.diagonal() << 3, -1;
  const MatrixTuple x({SymMatrix(a), SymMatrix(b)});
  Rng rng(13);
  const IrreducibleSplit s = split_irreducible(x, rng);
  ASSERT_EQ(s.summands.size(), 2u);
  std::vector<std::pair<double, double>> found;
  for (const auto& z : s.summands) {
    ASSERT_EQ(z.order(), 1);
    found.emplace_back(z[0](0, 0), z[1](0, 0));
  }
  std::sort(found.begin(), found.end());
  EXPECT_NEAR(found[0].first, 1.0, 1e-12);
  EXPECT_NEAR(found[0].second, 3.0, 1e-12);
  EXPECT_NEAR(found[1].first, 2.0, 1e-12);
  EXPECT_NEAR(found[1].second, -1.0, 1e-12);
}

TEST(SplitIrreducible, RecoversConjugatedDirectSum) {
  Rng rng(14);
  for (int trial = 0; trial < 5; ++trial) {
    const MatrixTuple small = freespec::testing::random_tuple(2, 2, rng);
    const MatrixTuple large = freespec::testing::random_tuple(2, 3, rng);
    const Matrix u = random_orthogonal(5, rng);
    const MatrixTuple mixed = direct_sum(small, large).congruence(u.transpose());
    const IrreducibleSplit s = split_irreducible(mixed, rng);
    ASSERT_EQ(s.summands.size(), 2u);
    EXPECT_LE(s.off_block_residual, 1e-8);
    for (const auto& z : s.summands) {
      ASSERT_TRUE(z.order() == 2 || z.order() == 3);
      expect_close(fingerprint(z), fingerprint(z.order() == 2 ? small : large), 1e-9);
    }
  }
}

TEST(ExtractCombination, RejectsMismatchedSplit) {
  Rng rng(15);
  DilationCertificate cert = dilate_to_arveson(free_disc(), MatrixTuple::zeros(2, 1), rng);
  const IrreducibleSplit wrong = split_irreducible(freespec::testing::random_tuple(2, 5, rng), rng);
  EXPECT_THROW(extract_combination(cert, wrong), ArgumentError);
}

TEST(VerifyCertificate, DetectsTamperedContraction) {
  Rng rng(16);
  DilationCertificate cert = decompose(free_disc(), MatrixTuple::zeros(2, 1), rng);
  ASSERT_TRUE(verify_certificate(free_disc(), cert).passed);
  cert.contractions[0] *= 1.1;
  const CertificateCheck check = verify_certificate(free_disc(), cert);
  EXPECT_FALSE(check.passed);
  EXPECT_GT(check.identity_residual, 1e-3);
}
