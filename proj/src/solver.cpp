#include "freespec/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "freespec/errors.hpp"
#include "freespec/extremality.hpp"

namespace freespec {

void LmiProgram::validate() const {
  if (g0.rows() != g0.cols()) throw ArgumentError("LmiProgram: G0 must be square");
  if (c.size() != static_cast<Eigen::Index>(g.size()))
    throw ArgumentError("LmiProgram: objective length " + std::to_string(c.size()) + " does not match " +
                        std::to_string(g.size()) + " coefficient blocks");
  for (const auto& gi : g) {
    if (gi.rows() != g0.rows() || gi.cols() != g0.cols())
      throw ArgumentError("LmiProgram: coefficient block has wrong shape");
  }
  if (!c.allFinite() || !g0.allFinite()) throw ArgumentError("LmiProgram: non-finite data");
  for (const auto& gi : g)
    if (!gi.allFinite()) throw ArgumentError("LmiProgram: non-finite data");
}

Matrix LmiProgram::constraint_at(const Vector& x) const {
  Matrix out = g0;
  for (int i = 0; i < variable_count(); ++i) out += x(i) * g[static_cast<std::size_t>(i)];
  return 0.5 * (out + out.transpose());
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::ill_conditioned: return "ill_conditioned";
  }
  return "unknown";
}

namespace {

double inner(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Largest step a in (0, inf] keeping lambda + a * d PSD, lambda diagonal > 0.
double max_step(const Vector& lambda, const Matrix& d) {
  const Vector inv_sqrt = lambda.cwiseSqrt().cwiseInverse();
  const Matrix scaled = inv_sqrt.asDiagonal() * sym(d) * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(scaled, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  if (lo >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lo;
}

struct Scaling {
  Vector lambda;
  Matrix rti;  // W^{-T}(u) = rti^T u rti, W^{-1}(v) = rti v rti^T
};

std::optional<Scaling> nt_scaling(const Matrix& s, const Matrix& z) {
  Eigen::LLT<Matrix> ls(s);
  Eigen::LLT<Matrix> lz(z);
  if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return std::nullopt;
  const Matrix lsm = ls.matrixL();
  const Matrix lzm = lz.matrixL();
  Eigen::JacobiSVD<Matrix> svd(lzm.transpose() * lsm, Eigen::ComputeFullU);
  Scaling out;
  out.lambda = svd.singularValues();
  if (out.lambda.minCoeff() <= 0.0 || !out.lambda.allFinite()) return std::nullopt;
  out.rti = lzm * svd.matrixU() * out.lambda.cwiseSqrt().cwiseInverse().asDiagonal();
  return out;
}

struct Direction {
  Vector dx;
  Matrix ds;
  Matrix dz;
  Matrix ds_scaled;
  Matrix dz_scaled;
};

}  // namespace

SolveResult solve(const LmiProgram& prog, const SolverOptions& opts) {
  prog.validate();
  const int m = prog.variable_count();
  const int size = prog.order();
  const double target = std::min(opts.gap_tolerance, opts.target_gap.value_or(opts.gap_tolerance));

  SolveResult res;
  res.x = Vector::Zero(m);
  res.dual = Matrix::Zero(size, size);

  if (size == 0) {
    res.status = prog.c.isZero() ? SolveStatus::optimal : SolveStatus::unbounded;
    return res;
  }
  const double g0_norm = prog.g0.norm();
  double g_max_norm = 0.0;
  for (const auto& gi : prog.g) g_max_norm = std::max(g_max_norm, gi.norm());
  const double c_norm = prog.c.norm();

  // A free variable with a nonzero cost is an unbounded ray.
  for (int i = 0; i < m; ++i) {
    if (prog.g[static_cast<std::size_t>(i)].isZero(0.0) && prog.c(i) != 0.0) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(sym(prog.g0), Eigen::EigenvaluesOnly);
      if (es.eigenvalues()(0) >= -opts.feasibility_tolerance * (1.0 + g0_norm)) {
        res.status = SolveStatus::unbounded;
        res.message = "variable " + std::to_string(i) + " does not enter the constraint";
        return res;
      }
    }
  }

  Vector x = Vector::Zero(m);
  Matrix s;
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym(prog.g0), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(size - 1);
    if (lo > 1e-8 * (1.0 + std::abs(hi))) {
      s = sym(prog.g0);
    } else {
      s = Matrix::Identity(size, size) * (1.0 + std::max(std::abs(lo), std::abs(hi)));
    }
  }
  double zeta = 1.0;
  for (int i = 0; i < m; ++i) {
    zeta = std::max(zeta, (1.0 + std::abs(prog.c(i))) / (1.0 + prog.g[static_cast<std::size_t>(i)].norm()));
  }
  Matrix z = Matrix::Identity(size, size) * zeta;

  std::vector<Matrix> scaled_g(static_cast<std::size_t>(m));
  Matrix schur(m, m);

  auto finish = [&](SolveStatus status, std::string message) {
    res.status = status;
    res.message = std::move(message);
    res.x = x;
    res.dual = z;
    return res;
  };

  bool met_tolerance = false;
  Vector best_x = x;
  Matrix best_z = z;
  double best_pres = 0, best_dres = 0, best_gap = 0, best_pcost = 0, best_dcost = 0;

  for (int iter = 0;; ++iter) {
    Vector rx(m);
    for (int i = 0; i < m; ++i) rx(i) = prog.c(i) - inner(prog.g[static_cast<std::size_t>(i)], z);
    const Matrix rz = s - prog.constraint_at(x);
    const double gap = inner(s, z);
    const double mu = gap / size;
    const double pcost = prog.c.dot(x);
    const double dcost = -inner(prog.g0, z);
    const double pres = rz.norm() / (1.0 + g0_norm);
    const double dres = rx.norm() / (1.0 + c_norm);
    const double relgap = std::max(gap, std::abs(pcost - dcost)) / std::max(1.0, std::abs(pcost));

    res.iterations = iter;
    res.primal_objective = pcost;
    res.dual_objective = dcost;
    res.relative_gap = relgap;
    res.primal_infeasibility = pres;
    res.dual_infeasibility = dres;
    res.gap_history.push_back(relgap);

    const bool within = pres <= opts.feasibility_tolerance && dres <= opts.feasibility_tolerance &&
                        relgap <= opts.gap_tolerance;
    if (within) {
      met_tolerance = true;
      best_x = x;
      best_z = z;
      best_pres = pres;
      best_dres = dres;
      best_gap = relgap;
      best_pcost = pcost;
      best_dcost = dcost;
    }
    auto fall_back = [&](std::string why) {
      if (met_tolerance) {
        x = best_x;
        z = best_z;
        res.primal_infeasibility = best_pres;
        res.dual_infeasibility = best_dres;
        res.relative_gap = best_gap;
        res.primal_objective = best_pcost;
        res.dual_objective = best_dcost;
        return finish(SolveStatus::optimal, "stopped early: " + why);
      }
      return finish(SolveStatus::ill_conditioned, why);
    };

    if (within && relgap <= target) return finish(SolveStatus::optimal, "");
    if (x.lpNorm<Eigen::Infinity>() > opts.divergence_cap && pres <= 1e-6) {
      return finish(SolveStatus::unbounded, "iterate norm exceeded divergence cap");
    }
    if (z.norm() > opts.divergence_cap * (1.0 + c_norm)) {
      // z / |z| is a Farkas certificate when it nearly solves the homogeneous
      // dual constraints and separates G0.
      const double zn = z.norm();
      double ray = 0.0;
      for (int i = 0; i < m; ++i) {
        const double t = inner(prog.g[static_cast<std::size_t>(i)], z) / zn;
        ray += t * t;
      }
      if (dres <= 1e-6 || (std::sqrt(ray) <= 1e-6 * (1.0 + g_max_norm) && inner(prog.g0, z) < 0.0))
        return finish(SolveStatus::infeasible, "dual iterate norm exceeded divergence cap");
    }
    if (iter >= opts.max_iterations) return fall_back("iteration cap reached");

    const auto scaling = nt_scaling(s, z);
    if (!scaling) return fall_back("lost positive definiteness");
    const Vector& lambda = scaling->lambda;
    const Matrix& rti = scaling->rti;

    for (int i = 0; i < m; ++i) {
      scaled_g[static_cast<std::size_t>(i)] = sym(rti.transpose() * prog.g[static_cast<std::size_t>(i)] * rti);
    }
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= i; ++j) {
        schur(i, j) = inner(scaled_g[static_cast<std::size_t>(i)], scaled_g[static_cast<std::size_t>(j)]);
        schur(j, i) = schur(i, j);
      }
    }
    Eigen::LLT<Matrix> factor(schur);
    if (factor.info() != Eigen::Success) {
      const double ridge = 1e-13 * (1.0 + (m > 0 ? schur.diagonal().maxCoeff() : 0.0));
      factor.compute(schur + ridge * Matrix::Identity(m, m));
      if (factor.info() != Eigen::Success) return fall_back("Schur complement is singular");
    }
    const Matrix rz_scaled = sym(rti.transpose() * rz * rti);

    auto direction = [&](const Matrix& rhs_s) {
      Direction out;
      Matrix t(size, size);
      for (int j = 0; j < size; ++j)
        for (int i = 0; i < size; ++i) t(i, j) = 2.0 * rhs_s(i, j) / (lambda(i) + lambda(j));
      Vector rhs(m);
      const Matrix tr = t + rz_scaled;
      for (int i = 0; i < m; ++i) rhs(i) = inner(scaled_g[static_cast<std::size_t>(i)], tr) - rx(i);
      out.dx = m > 0 ? Vector(factor.solve(rhs)) : Vector(0);
      out.ds_scaled = -rz_scaled;
      out.ds = -rz;
      for (int i = 0; i < m; ++i) {
        out.ds_scaled += out.dx(i) * scaled_g[static_cast<std::size_t>(i)];
        out.ds += out.dx(i) * prog.g[static_cast<std::size_t>(i)];
      }
      out.dz_scaled = t - out.ds_scaled;
      out.dz = sym(rti * out.dz_scaled * rti.transpose());
      return out;
    };

    const Matrix lambda_sq = lambda.cwiseAbs2().asDiagonal();
    const Direction affine = direction(-lambda_sq);
    const double alpha_aff =
        std::min({1.0, max_step(lambda, affine.ds_scaled), max_step(lambda, affine.dz_scaled)});
    const Matrix ls_aff = Matrix(lambda.asDiagonal()) + alpha_aff * affine.ds_scaled;
    const Matrix lz_aff = Matrix(lambda.asDiagonal()) + alpha_aff * affine.dz_scaled;
    const double gap_aff = inner(ls_aff, lz_aff);
    const double sigma = std::clamp(std::pow(std::max(gap_aff, 0.0) / std::max(gap, 1e-300), 3.0), 0.0, 1.0);

    const Matrix cross = sym(affine.ds_scaled * affine.dz_scaled);
    const Matrix rhs_c = -lambda_sq - cross + sigma * mu * Matrix::Identity(size, size);
    const Direction step = direction(rhs_c);
    const double alpha_max = std::min(max_step(lambda, step.ds_scaled), max_step(lambda, step.dz_scaled));
    const double alpha = std::min(1.0, opts.step_fraction * alpha_max);
    if (!(alpha > 1e-12) || !step.dx.allFinite()) return fall_back("step length collapsed");

    x += alpha * step.dx;
    s = sym(s + alpha * step.ds);
    z = sym(z + alpha * step.dz);
  }
}

int LevelEncoding::index(int k, int i, int j) const {
  if (i < j) std::swap(i, j);
  // Column-major lower triangle: column j holds rows j..n-1.
  const int before = j * n - j * (j - 1) / 2;
  return k * (n * (n + 1) / 2) + before + (i - j);
}

MatrixTuple LevelEncoding::decode(const Vector& x) const {
  if (x.size() != size()) throw ArgumentError("LevelEncoding::decode: wrong vector length");
  std::vector<SymMatrix> items;
  items.reserve(static_cast<std::size_t>(g));
  for (int k = 0; k < g; ++k) {
    Matrix m(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = j; i < n; ++i) {
        m(i, j) = x(index(k, i, j));
        m(j, i) = m(i, j);
      }
    items.emplace_back(m);
  }
  return MatrixTuple(std::move(items));
}

Vector LevelEncoding::encode(const MatrixTuple& x) const {
  if (x.count() != g || x.order() != n) throw ArgumentError("LevelEncoding::encode: tuple shape mismatch");
  Vector out(size());
  for (int k = 0; k < g; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = j; i < n; ++i) out(index(k, i, j)) = x[k](i, j);
  return out;
}

MatrixTuple LevelEncoding::unit(int v) const {
  Vector e = Vector::Zero(size());
  e(v) = 1.0;
  return decode(e);
}

LmiProgram functional_program(const LinearPencil& p, const LinearFunctional& l) {
  if (l.g() != p.g()) throw ArgumentError("functional_program: functional and pencil disagree on g");
  const LevelEncoding enc{p.g(), l.level};
  LmiProgram prog;
  const int size = p.d() * l.level;
  prog.g0 = Matrix::Identity(size, size);
  prog.c.resize(enc.size());
  prog.g.reserve(static_cast<std::size_t>(enc.size()));
  for (int v = 0; v < enc.size(); ++v) {
    const MatrixTuple e = enc.unit(v);
    prog.c(v) = apply_functional(l, e);
    prog.g.push_back(-linear_part(p, e));
  }
  return prog;
}

FunctionalMinimum minimize_functional(const LinearPencil& p, const LinearFunctional& l, const SolverOptions& opts) {
  const LmiProgram prog = functional_program(p, l);
  SolveResult result = solve(prog, opts);
  const LevelEncoding enc{p.g(), l.level};
  MatrixTuple optimizer = enc.decode(result.x);
  return {std::move(optimizer), std::move(result)};
}

namespace {

/// Orthonormal complement of the columns of an orthonormal basis.
Matrix complement_basis(const Matrix& basis, int dim) {
  if (basis.cols() == 0) return Matrix::Identity(dim, dim);
  Eigen::HouseholderQR<Matrix> qr(basis);
  const Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  return q.rightCols(dim - basis.cols());
}

Matrix column_part(const LinearPencil& p, const DilationColumn& beta) {
  if (static_cast<int>(beta.size()) != p.g()) throw ArgumentError("dilation column must have g blocks");
  std::vector<Matrix> blocks;
  blocks.reserve(beta.size());
  for (const auto& b : beta) blocks.emplace_back(b);
  return linear_part(p, blocks);
}

struct ReducedDilation {
  Matrix range;      // dn x r
  Matrix compressed; // r x r, R^T L_A(Y) R
  Matrix coupling;   // r x d, R^T Lambda_A(beta)
};

ReducedDilation reduce(const LinearPencil& p, const MatrixTuple& y, const DilationColumn& beta,
                       const Matrix& kernel_basis) {
  const int dn = p.d() * y.order();
  if (kernel_basis.rows() != dn) throw ArgumentError("kernel basis has wrong row count");
  for (const auto& b : beta)
    if (b.size() != y.order()) throw ArgumentError("dilation column block has wrong length");
  ReducedDilation out;
  out.range = complement_basis(kernel_basis, dn);
  out.compressed = sym(out.range.transpose() * evaluate(p, y).matrix() * out.range);
  out.coupling = out.range.transpose() * column_part(p, beta);
  return out;
}

/// Newton iteration driving the kd smallest eigenvalues of h - sum gamma_i A_i
/// to zero. Interior point iterates sit O(sqrt(gap)) off a curved boundary;
/// this moves gamma onto it so the kernel is exact to rounding. Returns the
/// input unchanged if the iteration does not improve it.
Vector polish_boundary_point(const Matrix& h, const LinearPencil& p, const Vector& gamma, int kd) {
  const int d = p.d();
  const int g = p.g();
  if (kd <= 0 || kd >= d) return gamma;
  auto at = [&](const Vector& gm) {
    Matrix m = h;
    for (int i = 0; i < g; ++i) m -= gm(i) * p[i].matrix();
    return sym(m);
  };
  auto spectrum = [&](const Vector& gm) { return Eigen::SelfAdjointEigenSolver<Matrix>(at(gm)); };
  auto defect = [&](const Eigen::SelfAdjointEigenSolver<Matrix>& es) {
    return es.eigenvalues().head(kd).cwiseAbs().maxCoeff();
  };
  const double separation = spectrum(gamma).eigenvalues()(kd);
  Vector best = gamma;
  auto es = spectrum(gamma);
  double best_defect = defect(es);
  const double floor = 1e-15 * std::max(1.0, h.norm());
  const int rows = kd * (kd + 1) / 2;
  for (int iter = 0; iter < 20 && best_defect > floor; ++iter) {
    const Matrix k = es.eigenvectors().leftCols(kd);
    Matrix jac(rows, g);
    Vector rhs(rows);
    const Matrix r = k.transpose() * at(best) * k;
    for (int i = 0; i < g; ++i) {
      const Matrix ak = k.transpose() * p[i].matrix() * k;
      int row = 0;
      for (int a = 0; a < kd; ++a)
        for (int b = a; b < kd; ++b) jac(row++, i) = (a == b ? 1.0 : std::numbers::sqrt2) * ak(a, b);
    }
    int row = 0;
    for (int a = 0; a < kd; ++a)
      for (int b = a; b < kd; ++b) rhs(row++) = (a == b ? 1.0 : std::numbers::sqrt2) * r(a, b);
    const Vector delta = jac.completeOrthogonalDecomposition().solve(rhs);
    const Vector trial = best + delta;
    auto trial_es = spectrum(trial);
    const double trial_defect = defect(trial_es);
    if (!(trial_defect < best_defect) || trial_es.eigenvalues()(kd) < 0.5 * separation) break;
    best = trial;
    best_defect = trial_defect;
    es = std::move(trial_es);
  }
  return best;
}

}  // namespace

AlphaMaximum maximize_dilation_alpha(const LinearPencil& p, const MatrixTuple& y, const DilationColumn& beta,
                                     const Matrix& kernel_basis, const SolverOptions& opts) {
  const ReducedDilation red = reduce(p, y, beta, kernel_basis);
  const int r = static_cast<int>(red.range.cols());
  const int d = p.d();
  const int g = p.g();
  LmiProgram prog;
  prog.g0 = Matrix::Zero(r + d, r + d);
  prog.g0.topLeftCorner(r, r) = red.compressed;
  prog.g0.bottomRightCorner(d, d) = Matrix::Identity(d, d);
  prog.c = Vector::Zero(1 + g);
  prog.c(0) = -1.0;
  Matrix ga = Matrix::Zero(r + d, r + d);
  ga.topRightCorner(r, d) = -red.coupling;
  ga.bottomLeftCorner(d, r) = -red.coupling.transpose();
  prog.g.push_back(ga);
  for (int i = 0; i < g; ++i) {
    Matrix gi = Matrix::Zero(r + d, r + d);
    gi.bottomRightCorner(d, d) = -p[i].matrix();
    prog.g.push_back(gi);
  }
  AlphaMaximum out;
  out.result = solve(prog, opts);
  out.alpha = out.result.x(0);
  out.gamma = out.result.x.tail(g);
  return out;
}

AlphaMaximum maximize_dilation_alpha(const LinearPencil& p, const MatrixTuple& y, const DilationColumn& beta,
                                     const SolverOptions& opts) {
  const KernelData kernel = kernel_of(p, y);
  if (kernel.verdict == Conditioning::ill_conditioned)
    throw IllConditioned("maximize_dilation_alpha: kernel of L_A(Y) is ill-conditioned");
  return maximize_dilation_alpha(p, y, beta, kernel.basis, opts);
}

GammaMaximum maximize_gamma(const LinearPencil& p, const MatrixTuple& y, const DilationColumn& scaled_beta,
                            const Matrix& kernel_basis, const Vector& gamma_hint, const Vector& direction,
                            const SolverOptions& opts) {
  const int d = p.d();
  const int g = p.g();
  if (gamma_hint.size() != g || direction.size() != g) throw ArgumentError("maximize_gamma: expected length g");
  const ReducedDilation red = reduce(p, y, scaled_beta, kernel_basis);

  // Schur complement in the gamma block: H - sum gamma_i A_i >= 0.
  Eigen::LLT<Matrix> dfac(red.compressed);
  if (red.compressed.size() > 0 && dfac.info() != Eigen::Success)
    throw NumericalFailure("maximize_gamma: compressed evaluation is not positive definite");
  Matrix h = Matrix::Identity(d, d);
  if (red.compressed.size() > 0) h -= red.coupling.transpose() * dfac.solve(red.coupling);
  h = sym(h);

  auto constraint_at = [&](const Vector& gamma) {
    Matrix m = h;
    for (int i = 0; i < g; ++i) m -= gamma(i) * p[i].matrix();
    return SymMatrix(m);
  };

  auto polish = [&](const Vector& gamma) {
    const EigenDecomposition e = sym_eig(constraint_at(gamma));
    const ZeroDecision zd = decide_zeros(e.eigenvalues, ZeroDecisionPolicy::kernel_dimension());
    if (zd.verdict != Conditioning::clean) return gamma;
    return polish_boundary_point(h, p, gamma, zd.zeros);
  };

  // Face exposed by the hint: its kernel must stay in the kernel.
  const SymMatrix at_hint = constraint_at(gamma_hint);
  const EigenDecomposition eig = sym_eig(at_hint);
  const ZeroDecision zeros = decide_zeros(eig.eigenvalues, ZeroDecisionPolicy::kernel_dimension());
  if (zeros.verdict == Conditioning::ill_conditioned)
    throw IllConditioned("maximize_gamma: face of the gamma set is ill-conditioned");
  const int kdim = zeros.zeros;
  const Matrix face_kernel = eig.vectors.rightCols(kdim);
  const Matrix face_range = eig.vectors.leftCols(d - kdim);

  GammaMaximum out;
  Matrix directions;
  if (kdim == 0) {
    directions = Matrix::Identity(g, g);
  } else {
    Matrix eq(d * kdim, g);
    for (int i = 0; i < g; ++i) {
      const Matrix ak = p[i].matrix() * face_kernel;
      eq.col(i) = Eigen::Map<const Vector>(ak.data(), ak.size());
    }
    const RightSingularSystem rs = right_singular_system(eq);
    const double top = rs.values.values.empty() ? 0.0 : rs.values.values.front();
    int rank = 0;
    for (double v : rs.values.values)
      if (v > 1e-8 * std::max(1.0, top)) ++rank;
    directions = rs.right.rightCols(g - rank);
  }
  out.face_dimension = static_cast<int>(directions.cols());
  if (out.face_dimension == 0) {
    out.gamma = polish(gamma_hint);
    out.result.status = SolveStatus::optimal;
    out.result.message = "gamma set is a single point";
    return out;
  }

  const int r = static_cast<int>(face_range.cols());
  LmiProgram prog;
  prog.g0 = sym(face_range.transpose() * at_hint.matrix() * face_range);
  prog.c = -(directions.transpose() * direction);
  for (int j = 0; j < out.face_dimension; ++j) {
    Matrix comb = Matrix::Zero(d, d);
    for (int i = 0; i < g; ++i) comb += directions(i, j) * p[i].matrix();
    prog.g.push_back(sym(-(face_range.transpose() * comb * face_range)));
  }
  if (r == 0) throw NumericalFailure("maximize_gamma: gamma face has no range");
  out.result = solve(prog, opts);
  out.gamma = polish(gamma_hint + directions * out.result.x);
  return out;
}

}  // namespace freespec
