#pragma once

#include <optional>
#include <vector>

#include "freespec/extremality.hpp"
#include "freespec/matcore.hpp"
#include "freespec/pencil.hpp"
#include "freespec/random.hpp"
#include "freespec/solver.hpp"

namespace freespec {

struct DilationOptions {
  /// Boundary points feed later kernel decisions, so solves run past the
  /// default gap.
  SolverOptions solver{.target_gap = 1e-13};
  ClassifyPolicies policies;
  /// Fresh directions tried after a step that does not grow the kernel.
  int stall_retries = 5;
  /// Relative eigenvalue gap separating clusters of a commutant element.
  double cluster_gap = 1e-7;
  double beta_residual_tolerance = 1e-6;
  double identity_tolerance = 1e-8;
  double reconstruction_tolerance = 1e-6;
  double off_block_tolerance = 1e-8;
  /// Contractions with Frobenius norm at or below this are dropped.
  double prune_tolerance = 1e-10;
};

struct DilationStep {
  MatrixTuple y;
  /// Unit direction: beta[i] is the n_j x 1 block for coordinate i.
  DilationColumn beta;
  double scale = 0.0;
  Vector gamma;
  MatrixTuple next;
  int kernel_before = 0;
  int kernel_after = 0;
  /// ||Lambda_A(beta^T) P|| for the kernel basis P of L_A(y).
  double beta_residual = 0.0;
  /// Directions discarded before this one for failing to grow the kernel.
  int retries = 0;
};

struct DilationCertificate {
  MatrixTuple start;
  std::vector<DilationStep> steps;
  MatrixTuple final_point;
  /// Arveson-system nullity at the start point.
  int mu = 0;
  /// Orthogonal U with U^T final_point U block diagonal.
  Matrix unitary;
  std::vector<MatrixTuple> summands;
  /// V_j is n_j x n.
  std::vector<Matrix> contractions;
  std::vector<Verdict> summand_verdicts;
  double identity_residual = 0.0;
  /// Largest per-coordinate Frobenius residual of sum_j V_j^T Z^j V_j - X.
  double reconstruction_residual = 0.0;
  /// Set when some summand does not classify as free_extreme.
  bool flagged = false;

  int level() const { return start.order(); }
  int step_count() const { return static_cast<int>(steps.size()); }
  int summand_size_total() const;
};

/// Unit-norm random element of the Arveson-system null space at y, or none
/// when y is already an Arveson extreme point. Throws IllConditioned.
std::optional<DilationColumn> pick_beta(const LinearPencil& p, const MatrixTuple& y, const KernelData& kernel,
                                        Rng& rng, const DilationOptions& opts = {});

/// One maximal 1-dilation of y along beta. Throws AlgorithmStall when the
/// kernel of the dilated point does not grow.
DilationStep maximal_one_dilation(const LinearPencil& p, const MatrixTuple& y, const DilationColumn& beta, Rng& rng,
                                  const DilationOptions& opts = {});

/// Dilates x until it is an Arveson extreme point. The certificate has no
/// summands yet. Throws CaratheodoryViolation past n*g steps.
DilationCertificate dilate_to_arveson(const LinearPencil& p, const MatrixTuple& x, Rng& rng,
                                      const DilationOptions& opts = {});

struct IrreducibleSplit {
  Matrix unitary;
  std::vector<MatrixTuple> summands;
  /// Largest Frobenius norm of an off-block part of U^T y U.
  double off_block_residual = 0.0;
};

/// Block-diagonalizes y into irreducible summands via random commutant elements.
IrreducibleSplit split_irreducible(const MatrixTuple& y, Rng& rng, const DilationOptions& opts = {});

/// Fills summands and contractions of cert from a split of its final point
/// and checks the identity and reconstruction residuals.
void extract_combination(DilationCertificate& cert, const IrreducibleSplit& split, const DilationOptions& opts = {});

/// dilate_to_arveson, split_irreducible and extract_combination, then
/// classifies every summand.
DilationCertificate decompose(const LinearPencil& p, const MatrixTuple& x, Rng& rng,
                              const DilationOptions& opts = {});

struct CertificateCheck {
  bool passed = false;
  double identity_residual = 0.0;
  double reconstruction_residual = 0.0;
  bool steps_within_cap = false;
  bool size_bound_holds = false;
  bool summands_are_members = false;
  bool summands_free_extreme = false;
  std::vector<std::string> failures;
};

/// Recomputes the residuals and bounds of a certificate from its data alone.
CertificateCheck verify_certificate(const LinearPencil& p, const DilationCertificate& cert,
                                    const DilationOptions& opts = {});

}  // namespace freespec
