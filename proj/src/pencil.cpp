#include "freespec/pencil.hpp"

#include <string>

#include "freespec/errors.hpp"
#include "freespec/extremality.hpp"
#include "freespec/solver.hpp"

namespace freespec {

SymMatrix evaluate(const LinearPencil& p, const MatrixTuple& x) {
  if (x.count() != p.g())
    throw ArgumentError("evaluate: tuple has " + std::to_string(x.count()) + " coordinates, pencil has " +
                        std::to_string(p.g()));
  const int size = p.d() * x.order();
  return SymMatrix(Matrix::Identity(size, size) - linear_part(p, x));
}

Matrix linear_part(const LinearPencil& p, std::span<const Matrix> blocks) {
  if (static_cast<int>(blocks.size()) != p.g())
    throw ArgumentError("linear_part: expected " + std::to_string(p.g()) + " blocks, got " +
                        std::to_string(blocks.size()));
  const Eigen::Index rows = blocks.front().rows();
  const Eigen::Index cols = blocks.front().cols();
  Matrix out = Matrix::Zero(p.d() * rows, p.d() * cols);
  for (int i = 0; i < p.g(); ++i) {
    const Matrix& b = blocks[static_cast<std::size_t>(i)];
    if (b.rows() != rows || b.cols() != cols) throw ArgumentError("linear_part: blocks differ in shape");
    out += kron(p[i].matrix(), b);
  }
  return out;
}

Matrix linear_part(const LinearPencil& p, const MatrixTuple& x) {
  if (x.count() != p.g())
    throw ArgumentError("linear_part: tuple has " + std::to_string(x.count()) + " coordinates, pencil has " +
                        std::to_string(p.g()));
  std::vector<Matrix> blocks;
  blocks.reserve(static_cast<std::size_t>(x.count()));
  for (const auto& item : x) blocks.push_back(item.matrix());
  return linear_part(p, blocks);
}

bool is_member(const LinearPencil& p, const MatrixTuple& x, double tol) {
  return min_eigenvalue(evaluate(p, x)) >= -tol;
}

bool is_bounded(const LinearPencil& p) {
  const int g = p.g();
  LinearFunctional probe;
  probe.kind = FunctionalKind::rc;
  probe.level = 1;
  for (int i = 0; i < g; ++i) {
    for (double sign : {1.0, -1.0}) {
      probe.coefficients.assign(static_cast<std::size_t>(g), Matrix::Zero(1, 1));
      probe.coefficients[static_cast<std::size_t>(i)](0, 0) = sign;
      const SolveResult r = solve(functional_program(p, probe));
      switch (r.status) {
        case SolveStatus::optimal: break;
        case SolveStatus::unbounded: return false;
        case SolveStatus::infeasible:
        case SolveStatus::ill_conditioned:
          throw NumericalFailure(std::string("is_bounded: coordinate solve ended ") + to_string(r.status) +
                                 (r.message.empty() ? "" : ": " + r.message));
      }
    }
  }
  return true;
}

LinearPencil random_pencil(const PencilGenConfig& cfg) {
  if (cfg.g < 1 || cfg.d < 1) throw ArgumentError("random_pencil: g and d must be positive");
  if (cfg.entry_bound < 1 || !(cfg.scale_divisor > 0)) throw ArgumentError("random_pencil: bounds must be positive");
  Rng rng(cfg.seed);
  for (int attempt = 0; attempt < cfg.retry_cap; ++attempt) {
    std::vector<SymMatrix> items;
    items.reserve(static_cast<std::size_t>(cfg.g));
    for (int k = 0; k < cfg.g; ++k) {
      Matrix raw(cfg.d, cfg.d);
      for (int i = 0; i < cfg.d; ++i)
        for (int j = 0; j < cfg.d; ++j) raw(i, j) = static_cast<double>(rng.uniform_int(-cfg.entry_bound, cfg.entry_bound));
      items.emplace_back((raw + raw.transpose()) / cfg.scale_divisor);
    }
    LinearPencil p{MatrixTuple(std::move(items))};
    const NullityReport commutant = symmetric_commutant(p.coefficients());
    if (commutant.verdict != Conditioning::clean || commutant.nullity != 1) continue;
    bool bounded = false;
    try {
      bounded = is_bounded(p);
    } catch (const NumericalFailure&) {
      continue;
    }
    if (!bounded) continue;
    p.irreducible = true;
    p.bounded = true;
    return p;
  }
  throw GenerationFailure("random_pencil: no irreducible bounded tuple after " + std::to_string(cfg.retry_cap) +
                          " attempts (g=" + std::to_string(cfg.g) + ", d=" + std::to_string(cfg.d) + ")");
}

int LinearFunctional::g() const {
  return kind == FunctionalKind::rc ? static_cast<int>(coefficients.size()) : pencil.count();
}

namespace {

double draw_coefficient(Rng& rng, const FunctionalGenConfig& cfg) {
  switch (cfg.distribution) {
    case CoefficientDistribution::integer:
      return static_cast<double>(rng.uniform_int(-cfg.bound, cfg.bound)) / cfg.divisor;
    case CoefficientDistribution::gaussian: return rng.normal();
    case CoefficientDistribution::uniform_real: return rng.uniform(-2.0, 2.0);
  }
  return 0.0;
}

}  // namespace

LinearFunctional random_functional(FunctionalKind kind, const LinearPencil& p, int n, std::uint64_t seed,
                                   const FunctionalGenConfig& cfg) {
  if (n < 1) throw ArgumentError("random_functional: level must be at least 1");
  Rng rng(seed);
  LinearFunctional l;
  l.kind = kind;
  l.level = n;
  if (kind == FunctionalKind::rc) {
    l.coefficients.reserve(static_cast<std::size_t>(p.g()));
    for (int k = 0; k < p.g(); ++k) {
      Matrix a = Matrix::Zero(n, n);
      for (int j = 0; j < n; ++j)
        for (int i = j; i < n; ++i) a(i, j) = draw_coefficient(rng, cfg);
      l.coefficients.push_back(std::move(a));
    }
  } else {
    const int size = p.d() * n;
    l.weight = Matrix::Zero(size, size);
    for (int j = 0; j < size; ++j)
      for (int i = 0; i <= j; ++i) l.weight(i, j) = draw_coefficient(rng, cfg);
    l.pencil = p.coefficients();
  }
  return l;
}

double apply_functional(const LinearFunctional& l, const MatrixTuple& x) {
  if (x.order() != l.level)
    throw ArgumentError("apply_functional: tuple level " + std::to_string(x.order()) + " does not match functional level " +
                        std::to_string(l.level));
  if (x.count() != l.g()) throw ArgumentError("apply_functional: coordinate count mismatch");
  if (l.kind == FunctionalKind::rc) {
    double total = 0.0;
    for (int k = 0; k < x.count(); ++k)
      total += l.coefficients[static_cast<std::size_t>(k)].triangularView<Eigen::Lower>().toDenseMatrix()
                   .cwiseProduct(x[k].matrix())
                   .sum();
    return total;
  }
  const LinearPencil p{l.pencil};
  const Matrix weight = l.weight.transpose() * l.weight;
  return weight.cwiseProduct(linear_part(p, x).transpose()).sum();
}

LinearPencil free_disc() {
  Matrix a1(2, 2), a2(2, 2);
  a1 << 0, 1, 1, 0;
  a2 << 1, 0, 0, -1;
  return LinearPencil{MatrixTuple({SymMatrix(a1), SymMatrix(a2)})};
}

LinearPencil free_simplex() {
  Matrix a1 = Matrix::Zero(3, 3), a2 = Matrix::Zero(3, 3);
  a1.diagonal() << 1, 0, -1;
  a2.diagonal() << 0, 1, -1;
  return LinearPencil{MatrixTuple({SymMatrix(a1), SymMatrix(a2)})};
}

}  // namespace freespec
