#pragma once

#include <optional>
#include <string>
#include <vector>

#include "freespec/matcore.hpp"
#include "freespec/pencil.hpp"

namespace freespec {

/// minimize c.x subject to G0 + sum_i x_i G_i >= 0 (a single dense LMI).
struct LmiProgram {
  Vector c;
  Matrix g0;
  std::vector<Matrix> g;

  int variable_count() const { return static_cast<int>(g.size()); }
  int order() const { return static_cast<int>(g0.rows()); }
  /// Throws ArgumentError on inconsistent shapes.
  void validate() const;
  /// G0 + sum_i x_i G_i.
  Matrix constraint_at(const Vector& x) const;
};

enum class SolveStatus { optimal, unbounded, infeasible, ill_conditioned };

const char* to_string(SolveStatus s);

struct SolverOptions {
  /// Required relative gap and residuals for an optimal verdict.
  double gap_tolerance = 1e-9;
  double feasibility_tolerance = 1e-9;
  /// Iteration continues past gap_tolerance until this gap is reached or
  /// progress stalls. Defaults to gap_tolerance.
  std::optional<double> target_gap;
  int max_iterations = 200;
  double divergence_cap = 1e8;
  double step_fraction = 0.98;
};

struct SolveResult {
  SolveStatus status = SolveStatus::ill_conditioned;
  Vector x;
  /// Dual matrix Z >= 0 with <G_i, Z> = c_i at optimality.
  Matrix dual;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double relative_gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  std::vector<double> gap_history;
  std::string message;
};

/// Primal-dual interior point method with Nesterov-Todd scaling and a
/// Mehrotra predictor-corrector step. Starts from x = 0 with S = G0 when G0 is
/// positive definite, otherwise from an infeasible point.
SolveResult solve(const LmiProgram& prog, const SolverOptions& opts = {});

/// Coordinates of a g-tuple of symmetric n x n matrices: one variable per
/// lower-triangle entry X^k_{ij}, i >= j, with the variable equal to the entry.
struct LevelEncoding {
  int g = 1;
  int n = 1;

  int size() const { return g * n * (n + 1) / 2; }
  int index(int k, int i, int j) const;
  MatrixTuple decode(const Vector& x) const;
  Vector encode(const MatrixTuple& x) const;
  /// Unit coordinate tuple for variable v: E_ij + E_ji (or E_ii) in coordinate k.
  MatrixTuple unit(int v) const;
};

/// LMI program for min l(X) over D_A(n).
LmiProgram functional_program(const LinearPencil& p, const LinearFunctional& l);

struct FunctionalMinimum {
  MatrixTuple optimizer;
  SolveResult result;
};

/// Minimizes l over D_A(n); the caller is responsible for D_A being bounded.
FunctionalMinimum minimize_functional(const LinearPencil& p, const LinearFunctional& l,
                                      const SolverOptions& opts = {});

/// Direction column blocks for a one-row dilation: beta[i] is n x 1.
using DilationColumn = std::vector<Vector>;

struct AlphaMaximum {
  double alpha = 0.0;
  Vector gamma;
  SolveResult result;
};

/// max alpha over (alpha, gamma) with [[Y, alpha beta], [alpha beta^T, gamma]]
/// in D_A(n+1). The kernel of L_A(Y) is factored out first (beta must
/// annihilate it), which leaves a strictly feasible program at alpha = 0.
/// kernel_basis holds an orthonormal basis of ker L_A(Y) (dn x k).
AlphaMaximum maximize_dilation_alpha(const LinearPencil& p, const MatrixTuple& y, const DilationColumn& beta,
                                     const Matrix& kernel_basis, const SolverOptions& opts = {});

/// Convenience overload that computes the kernel with the standard policy.
AlphaMaximum maximize_dilation_alpha(const LinearPencil& p, const MatrixTuple& y, const DilationColumn& beta,
                                     const SolverOptions& opts = {});

struct GammaMaximum {
  Vector gamma;
  /// Dimension of the affine hull of the gamma spectrahedron that was searched.
  int face_dimension = 0;
  SolveResult result;
};

/// max direction.gamma over gamma with [[Y, alpha beta], [alpha beta^T, gamma]]
/// in D_A(n+1) for the fixed column alpha*beta. gamma_hint must be a point of
/// the relative interior of that set (the alpha solve returns one); the search
/// runs over the face of the gamma set it exposes.
GammaMaximum maximize_gamma(const LinearPencil& p, const MatrixTuple& y, const DilationColumn& scaled_beta,
                            const Matrix& kernel_basis, const Vector& gamma_hint, const Vector& direction,
                            const SolverOptions& opts = {});

}  // namespace freespec
