#pragma once

#include <optional>
#include <span>
#include <string>

#include "freespec/matcore.hpp"
#include "freespec/pencil.hpp"

namespace freespec {

/// Two-threshold rule for deciding which entries of a spectrum are zero.
///
/// With values sorted by descending magnitude, the first index j > 1 with
/// |s_j| < eps1 and |s_j| / |s_{j-1}| < eps2 starts the zero block. If no
/// such index exists but one passes the thresholds relaxed by 10^relax, the
/// decision is reported as ill-conditioned.
struct ZeroDecisionPolicy {
  double eps1 = 1e-6;
  double eps2 = 1e-5;
  double relax_exponent = 2.0;
  SpectrumKind kind = SpectrumKind::eigenvalues;

  static ZeroDecisionPolicy kernel_dimension();
  static ZeroDecisionPolicy free_extreme();
  static ZeroDecisionPolicy euclidean_extreme();
  static ZeroDecisionPolicy irreducibility();
};

enum class Conditioning { clean, ill_conditioned };

struct ZeroDecision {
  int zeros = 0;
  Conditioning verdict = Conditioning::clean;
};

ZeroDecision decide_zeros(const SpectrumReport& spectrum, const ZeroDecisionPolicy& policy);

struct KernelData {
  int dimension = 0;
  /// dn x k, orthonormal columns spanning ker L_A(X).
  Matrix basis;
  Conditioning verdict = Conditioning::clean;
  SpectrumReport spectrum;
};

KernelData kernel_of(const LinearPencil& p, const MatrixTuple& x,
                     const ZeroDecisionPolicy& policy = ZeroDecisionPolicy::kernel_dimension());

/// Nullity of a linear system decided from its singular values.
struct NullityReport {
  int nullity = 0;
  Conditioning verdict = Conditioning::clean;
  SpectrumReport spectrum;
  /// Orthonormal basis of the numerical null space (unknowns x nullity).
  Matrix null_basis;
};

NullityReport decide_nullity(const Matrix& system, const ZeroDecisionPolicy& policy);

/// Matrix of beta -> Lambda_A(beta^T) P for beta in M_{n x 1}(R)^g; size
/// (d k) x (n g), unknown (i, t) at column i * n + t.
Matrix arveson_system_matrix(const LinearPencil& p, int n, const Matrix& kernel_basis);

/// Matrix of beta -> Lambda_A(beta) P for beta in SM_n(R)^g, parametrized by
/// the orthonormal symmetric basis; size (d n k) x (g n(n+1)/2).
Matrix euclidean_system_matrix(const LinearPencil& p, int n, const Matrix& kernel_basis);

/// Matrix of Z -> (Z X_1 - X_1 Z, ..., Z X_g - X_g Z) on symmetric Z.
Matrix commutant_map_matrix(const MatrixTuple& x);

NullityReport arveson_system_nullity(const LinearPencil& p, const MatrixTuple& x, const KernelData& kernel,
                                     const ZeroDecisionPolicy& policy = ZeroDecisionPolicy::free_extreme());

NullityReport euclidean_system_nullity(const LinearPencil& p, const MatrixTuple& x, const KernelData& kernel,
                                       const ZeroDecisionPolicy& policy = ZeroDecisionPolicy::euclidean_extreme());

/// Symmetric commutant of x. The null basis columns are coordinates in
/// symmetric_basis(n); commutant_element() turns one into a matrix.
NullityReport symmetric_commutant(const MatrixTuple& x,
                                  const ZeroDecisionPolicy& policy = ZeroDecisionPolicy::irreducibility());

/// Dimension of the symmetric commutant; 1 means irreducible. Throws
/// IllConditioned when the spectrum falls in the relaxed band.
int symmetric_commutant_dim(const MatrixTuple& x,
                            const ZeroDecisionPolicy& policy = ZeroDecisionPolicy::irreducibility());

Matrix commutant_element(int n, const Vector& coordinates);

enum class Verdict { free_extreme, arveson_reducible, euclidean_not_arveson, not_euclidean_extreme, ill_conditioned };

const char* to_string(Verdict v);
std::optional<Verdict> verdict_from_string(const std::string& s);

struct ClassifyPolicies {
  ZeroDecisionPolicy kernel = ZeroDecisionPolicy::kernel_dimension();
  ZeroDecisionPolicy free_extreme = ZeroDecisionPolicy::free_extreme();
  ZeroDecisionPolicy euclidean = ZeroDecisionPolicy::euclidean_extreme();
  ZeroDecisionPolicy irreducibility = ZeroDecisionPolicy::irreducibility();
};

struct ExtremeClassification {
  Verdict verdict = Verdict::ill_conditioned;
  KernelData kernel;
  int commutant_dim = 0;
  int arveson_nullity = 0;
  std::optional<int> euclidean_nullity;
  bool kernel_ill = false;
  bool commutant_ill = false;
  bool arveson_ill = false;
  bool euclidean_ill = false;

  bool irreducible() const { return commutant_dim == 1; }
};

/// kernel -> commutant -> Arveson system -> (if needed) Euclidean system.
ExtremeClassification classify(const LinearPencil& p, const MatrixTuple& x, const ClassifyPolicies& policies = {});

/// gn <= sum_j d_j k_j: necessary for an Arveson extreme point when A is a
/// direct sum of blocks of sizes d_j with kernel dimensions k_j.
bool arveson_count_holds(int g, int n, std::span<const int> block_sizes, std::span<const int> block_kernels);

/// g(n+1)/2 <= sum_j d_j k_j: necessary for a Euclidean extreme point.
bool euclidean_count_holds(int g, int n, std::span<const int> block_sizes, std::span<const int> block_kernels);

}  // namespace freespec
