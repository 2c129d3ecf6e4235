#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "freespec/random.hpp"

namespace freespec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Real symmetric matrix. Symmetry is enforced on construction by averaging
/// with the transpose, so iterates carrying rounding asymmetry are accepted.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix zero(int n);
  static SymMatrix identity(int n);

  int order() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator-(const SymMatrix& o) const;
  SymMatrix operator*(double s) const;

  bool operator==(const SymMatrix& o) const { return m_ == o.m_; }

 private:
  Matrix m_;
};

inline SymMatrix operator*(double s, const SymMatrix& m) { return m * s; }

/// A g-tuple of symmetric n x n matrices.
class MatrixTuple {
 public:
  MatrixTuple() = default;
  explicit MatrixTuple(std::vector<SymMatrix> items);

  static MatrixTuple zeros(int count, int order);

  int count() const { return static_cast<int>(items_.size()); }
  int order() const { return items_.empty() ? 0 : items_.front().order(); }
  bool empty() const { return items_.empty(); }

  const SymMatrix& operator[](int i) const { return items_[static_cast<std::size_t>(i)]; }
  const std::vector<SymMatrix>& items() const { return items_; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  MatrixTuple operator+(const MatrixTuple& o) const;
  MatrixTuple operator-(const MatrixTuple& o) const;
  MatrixTuple operator*(double s) const;

  /// Returns (U^T X_1 U, ..., U^T X_g U). U may be rectangular.
  MatrixTuple congruence(const Matrix& u) const;

  /// Largest Frobenius norm among the coordinates.
  double max_norm() const;

  bool operator==(const MatrixTuple& o) const { return items_ == o.items_; }

 private:
  std::vector<SymMatrix> items_;
};

enum class SpectrumKind { eigenvalues, singular_values };

/// Values sorted by descending absolute value.
struct SpectrumReport {
  std::vector<double> values;
  SpectrumKind kind = SpectrumKind::eigenvalues;
};

struct EigenDecomposition {
  SpectrumReport eigenvalues;
  /// Column j is the unit eigenvector for eigenvalues.values[j].
  Matrix vectors;
};

/// Singular values padded with zeros up to the column count, plus the full
/// right singular basis in the same order. Trailing columns span the
/// numerical null space.
struct RightSingularSystem {
  SpectrumReport values;
  Matrix right;
};

Matrix kron(const Matrix& a, const Matrix& b);

EigenDecomposition sym_eig(const SymMatrix& m);

/// Descending nonnegative singular values, min(rows, cols) of them.
SpectrumReport singular_values(const Matrix& m);

RightSingularSystem right_singular_system(const Matrix& m);

/// Orthonormal basis for the span of the given columns; directions with
/// singular value below tol are dropped.
Matrix orthonormal_basis(const Matrix& columns, double tol);

MatrixTuple direct_sum(std::span<const MatrixTuple> tuples);
MatrixTuple direct_sum(const MatrixTuple& a, const MatrixTuple& b);

double min_eigenvalue(const SymMatrix& m);

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with sign fix).
Matrix random_orthogonal(int n, Rng& rng);

/// Symmetric matrix with standard normal entries on and above the diagonal.
SymMatrix random_symmetric(int n, Rng& rng);

/// Orthonormal basis of the symmetric n x n matrices: E_ii and
/// (E_ij + E_ji)/sqrt(2) for i > j, in column-major lower-triangle order.
std::vector<Matrix> symmetric_basis(int n);

}  // namespace freespec
