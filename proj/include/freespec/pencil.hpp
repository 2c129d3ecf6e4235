#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "freespec/matcore.hpp"

namespace freespec {

/// Monic linear pencil L_A(x) = I - A_1 x_1 - ... - A_g x_g, stored by its
/// defining tuple A. The optional flags cache certificates computed by
/// random_pencil; they are never consulted implicitly.
class LinearPencil {
 public:
  LinearPencil() = default;
  explicit LinearPencil(MatrixTuple coefficients) : coefficients_(std::move(coefficients)) {}

  int g() const { return coefficients_.count(); }
  int d() const { return coefficients_.order(); }
  const MatrixTuple& coefficients() const { return coefficients_; }
  const SymMatrix& operator[](int i) const { return coefficients_[i]; }

  std::optional<bool> irreducible;
  std::optional<bool> bounded;

 private:
  MatrixTuple coefficients_;
};

inline constexpr double kMembershipTolerance = 1e-9;

/// I_{dn} - sum_i A_i (x) X_i.
SymMatrix evaluate(const LinearPencil& p, const MatrixTuple& x);

/// sum_i A_i (x) X_i. Blocks may be rectangular (e.g. n x 1 dilation columns).
Matrix linear_part(const LinearPencil& p, std::span<const Matrix> blocks);
Matrix linear_part(const LinearPencil& p, const MatrixTuple& x);

/// Minimum eigenvalue of evaluate(p, x) is at least -tol.
bool is_member(const LinearPencil& p, const MatrixTuple& x, double tol = kMembershipTolerance);

/// Decides boundedness of D_A(1) with 2g scalar SDPs (min and max of each
/// coordinate). Throws NumericalFailure if a solve is ill-conditioned.
bool is_bounded(const LinearPencil& p);

struct PencilGenConfig {
  int g = 2;
  int d = 3;
  int entry_bound = 25;
  double scale_divisor = 10.0;
  std::uint64_t seed = 0;
  int retry_cap = 1000;
};

/// A = (Ã + Ã^T)/divisor with integer Ã entries uniform in [-bound, bound];
/// resampled until A is irreducible and D_A is bounded.
LinearPencil random_pencil(const PencilGenConfig& cfg);

enum class FunctionalKind { rc, rpt };

enum class CoefficientDistribution { integer, gaussian, uniform_real };

struct FunctionalGenConfig {
  int bound = 20;
  double divisor = 10.0;
  CoefficientDistribution distribution = CoefficientDistribution::integer;
};

/// Random linear functional on SM_n(R)^g.
///
/// RC:  l(X) = sum_k sum_{i >= j} alpha^k_{ij} X^k_{ij}; coefficients[k] holds
///      alpha^k in its lower triangle (strict upper triangle is zero).
/// RPT: l(X) = tr(V^T V Lambda_A(X)) with V upper triangular of order dn;
///      pencil holds the tuple A it was built against.
struct LinearFunctional {
  FunctionalKind kind = FunctionalKind::rc;
  int level = 1;
  std::vector<Matrix> coefficients;
  Matrix weight;
  MatrixTuple pencil;

  int g() const;
};

LinearFunctional random_functional(FunctionalKind kind, const LinearPencil& p, int n, std::uint64_t seed,
                                   const FunctionalGenConfig& cfg = {});

double apply_functional(const LinearFunctional& l, const MatrixTuple& x);

/// The pencils used as analytic references.
LinearPencil free_disc();
/// g = 2 free simplex: the triangle x1 <= 1, x2 <= 1, x1 + x2 >= -1.
LinearPencil free_simplex();

}  // namespace freespec
