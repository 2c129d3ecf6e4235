#include "freespec/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "freespec/errors.hpp"

namespace freespec {

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw ArgumentError("SymMatrix: matrix is " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + ", expected square");
  }
  if (!m.allFinite()) throw ArgumentError("SymMatrix: non-finite entry");
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::zero(int n) { return SymMatrix(Matrix::Zero(n, n)); }

SymMatrix SymMatrix::identity(int n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::operator+(const SymMatrix& o) const { return SymMatrix(m_ + o.m_); }
SymMatrix SymMatrix::operator-(const SymMatrix& o) const { return SymMatrix(m_ - o.m_); }
SymMatrix SymMatrix::operator*(double s) const { return SymMatrix(m_ * s); }

MatrixTuple::MatrixTuple(std::vector<SymMatrix> items) : items_(std::move(items)) {
  if (items_.empty()) throw ArgumentError("MatrixTuple: count must be at least 1");
  const int n = items_.front().order();
  for (const auto& item : items_) {
    if (item.order() != n) throw ArgumentError("MatrixTuple: coordinates differ in order");
  }
}

MatrixTuple MatrixTuple::zeros(int count, int order) {
  return MatrixTuple(std::vector<SymMatrix>(static_cast<std::size_t>(count), SymMatrix::zero(order)));
}

MatrixTuple MatrixTuple::operator+(const MatrixTuple& o) const {
  if (o.count() != count() || o.order() != order()) throw ArgumentError("MatrixTuple: shape mismatch");
  std::vector<SymMatrix> out;
  out.reserve(items_.size());
  for (int i = 0; i < count(); ++i) out.push_back((*this)[i] + o[i]);
  return MatrixTuple(std::move(out));
}

MatrixTuple MatrixTuple::operator-(const MatrixTuple& o) const { return *this + o * -1.0; }

MatrixTuple MatrixTuple::operator*(double s) const {
  std::vector<SymMatrix> out;
  out.reserve(items_.size());
  for (const auto& item : items_) out.push_back(item * s);
  return MatrixTuple(std::move(out));
}

MatrixTuple MatrixTuple::congruence(const Matrix& u) const {
  if (u.rows() != order()) throw ArgumentError("MatrixTuple::congruence: row count must match order");
  std::vector<SymMatrix> out;
  out.reserve(items_.size());
  for (const auto& item : items_) out.emplace_back(u.transpose() * item.matrix() * u);
  return MatrixTuple(std::move(out));
}

double MatrixTuple::max_norm() const {
  double best = 0.0;
  for (const auto& item : items_) best = std::max(best, item.matrix().norm());
  return best;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

namespace {

std::vector<Eigen::Index> order_by_magnitude(const Vector& values) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(values(a)) > std::abs(values(b));
  });
  return idx;
}

}  // namespace

EigenDecomposition sym_eig(const SymMatrix& m) {
  EigenDecomposition out;
  out.eigenvalues.kind = SpectrumKind::eigenvalues;
  if (m.order() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  if (solver.info() != Eigen::Success) throw NumericalFailure("sym_eig: eigensolver did not converge");
  const auto idx = order_by_magnitude(solver.eigenvalues());
  out.vectors.resize(m.order(), m.order());
  out.eigenvalues.values.reserve(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.eigenvalues.values.push_back(solver.eigenvalues()(idx[j]));
    out.vectors.col(static_cast<Eigen::Index>(j)) = solver.eigenvectors().col(idx[j]);
  }
  return out;
}

SpectrumReport singular_values(const Matrix& m) {
  SpectrumReport out;
  out.kind = SpectrumKind::singular_values;
  if (m.size() == 0) return out;
  if (!m.allFinite()) throw NumericalFailure("singular_values: non-finite input");
  Eigen::BDCSVD<Matrix> svd(m);
  if (svd.info() != Eigen::Success) throw NumericalFailure("singular_values: SVD did not converge");
  const Vector& s = svd.singularValues();
  out.values.assign(s.data(), s.data() + s.size());
  return out;
}

RightSingularSystem right_singular_system(const Matrix& m) {
  RightSingularSystem out;
  out.values.kind = SpectrumKind::singular_values;
  const Eigen::Index cols = m.cols();
  if (cols == 0) return out;
  if (m.rows() == 0) {
    out.values.values.assign(static_cast<std::size_t>(cols), 0.0);
    out.right = Matrix::Identity(cols, cols);
    return out;
  }
  if (!m.allFinite()) throw NumericalFailure("right_singular_system: non-finite input");
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw NumericalFailure("right_singular_system: SVD did not converge");
  const Vector& s = svd.singularValues();
  out.values.values.assign(s.data(), s.data() + s.size());
  out.values.values.resize(static_cast<std::size_t>(cols), 0.0);
  out.right = svd.matrixV();
  return out;
}

Matrix orthonormal_basis(const Matrix& columns, double tol) {
  if (!(tol > 0.0)) throw ArgumentError("orthonormal_basis: tol must be positive");
  if (columns.cols() == 0 || columns.rows() == 0) return Matrix(columns.rows(), 0);
  Eigen::BDCSVD<Matrix> svd(columns, Eigen::ComputeThinU);
  if (svd.info() != Eigen::Success) throw NumericalFailure("orthonormal_basis: SVD did not converge");
  Eigen::Index rank = 0;
  while (rank < svd.singularValues().size() && svd.singularValues()(rank) > tol) ++rank;
  return svd.matrixU().leftCols(rank);
}

MatrixTuple direct_sum(std::span<const MatrixTuple> tuples) {
  if (tuples.empty()) throw ArgumentError("direct_sum: no tuples given");
  const int g = tuples.front().count();
  int total = 0;
  for (const auto& t : tuples) {
    if (t.count() != g) throw ArgumentError("direct_sum: tuples have different coordinate counts");
    total += t.order();
  }
  std::vector<SymMatrix> items;
  items.reserve(static_cast<std::size_t>(g));
  for (int k = 0; k < g; ++k) {
    Matrix block = Matrix::Zero(total, total);
    int offset = 0;
    for (const auto& t : tuples) {
      block.block(offset, offset, t.order(), t.order()) = t[k].matrix();
      offset += t.order();
    }
    items.emplace_back(block);
  }
  return MatrixTuple(std::move(items));
}

MatrixTuple direct_sum(const MatrixTuple& a, const MatrixTuple& b) {
  const MatrixTuple both[] = {a, b};
  return direct_sum(std::span<const MatrixTuple>(both));
}

double min_eigenvalue(const SymMatrix& m) {
  if (m.order() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalFailure("min_eigenvalue: eigensolver did not converge");
  return solver.eigenvalues()(0);
}

Matrix random_orthogonal(int n, Rng& rng) {
  Matrix g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

SymMatrix random_symmetric(int n, Rng& rng) {
  Matrix m(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      m(i, j) = rng.normal();
      m(j, i) = m(i, j);
    }
  }
  return SymMatrix(m);
}

std::vector<Matrix> symmetric_basis(int n) {
  std::vector<Matrix> basis;
  basis.reserve(static_cast<std::size_t>(n * (n + 1) / 2));
  const double w = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      Matrix e = Matrix::Zero(n, n);
      if (i == j) {
        e(i, i) = 1.0;
      } else {
        e(i, j) = w;
        e(j, i) = w;
      }
      basis.push_back(std::move(e));
    }
  }
  return basis;
}

}  // namespace freespec
