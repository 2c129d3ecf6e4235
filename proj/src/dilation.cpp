#include "freespec/dilation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "freespec/errors.hpp"

namespace freespec {

int DilationCertificate::summand_size_total() const {
  int total = 0;
  for (const auto& z : summands) total += z.order();
  return total;
}

namespace {

KernelData clean_kernel(const LinearPencil& p, const MatrixTuple& y, const DilationOptions& opts, const char* where) {
  KernelData kernel = kernel_of(p, y, opts.policies.kernel);
  if (kernel.verdict == Conditioning::ill_conditioned)
    throw IllConditioned(std::string(where) + ": kernel of L_A(Y) is ill-conditioned");
  return kernel;
}

Vector flatten(const DilationColumn& beta) {
  const Eigen::Index n = beta.front().size();
  Vector out(n * static_cast<Eigen::Index>(beta.size()));
  for (std::size_t i = 0; i < beta.size(); ++i) out.segment(static_cast<Eigen::Index>(i) * n, n) = beta[i];
  return out;
}

DilationColumn unflatten(const Vector& v, int g, int n) {
  DilationColumn out;
  out.reserve(static_cast<std::size_t>(g));
  for (int i = 0; i < g; ++i) out.emplace_back(v.segment(i * n, n));
  return out;
}

/// Arveson-system nullity at y. Throws IllConditioned when the decision is in
/// the relaxed band or when a retained null direction has a residual above the
/// beta tolerance (the null space is then only approximate).
NullityReport arveson_state(const LinearPencil& p, const MatrixTuple& y, const KernelData& kernel,
                            const DilationOptions& opts, const char* where) {
  NullityReport arv = arveson_system_nullity(p, y, kernel, opts.policies.free_extreme);
  if (arv.verdict == Conditioning::ill_conditioned)
    throw IllConditioned(std::string(where) + ": Arveson system nullity is ill-conditioned");
  const auto& sv = arv.spectrum.values;
  if (arv.nullity > 0) {
    const double largest_zero = sv[sv.size() - static_cast<std::size_t>(arv.nullity)];
    if (largest_zero > opts.beta_residual_tolerance) {
      std::ostringstream os;
      os << where << ": Arveson null space is approximate (singular value " << largest_zero << " counted as zero)";
      throw IllConditioned(os.str());
    }
  }
  return arv;
}

void require_optimal(const SolveResult& r, const char* what) {
  if (r.status == SolveStatus::optimal) return;
  const std::string msg = std::string(what) + " ended " + to_string(r.status) + (r.message.empty() ? "" : ": " + r.message);
  if (r.status == SolveStatus::ill_conditioned) throw IllConditioned(msg);
  throw NumericalFailure(msg);
}

std::string describe_stall(const DilationStep& s, double min_eig) {
  std::ostringstream os;
  os << "kernel did not grow (before " << s.kernel_before << ", after " << s.kernel_after << ", scale " << s.scale
     << ", min eigenvalue " << min_eig << ")";
  return os.str();
}

}  // namespace

std::optional<DilationColumn> pick_beta(const LinearPencil& p, const MatrixTuple& y, const KernelData& kernel,
                                        Rng& rng, const DilationOptions& opts) {
  const NullityReport arv = arveson_state(p, y, kernel, opts, "pick_beta");
  if (arv.nullity == 0) return std::nullopt;
  Vector coeffs(arv.nullity);
  for (int i = 0; i < arv.nullity; ++i) coeffs(i) = rng.normal();
  Vector v = arv.null_basis * coeffs;
  v /= v.norm();
  return unflatten(v, p.g(), y.order());
}

DilationStep maximal_one_dilation(const LinearPencil& p, const MatrixTuple& y, const DilationColumn& beta, Rng& rng,
                                  const DilationOptions& opts) {
  const int g = p.g();
  const int n = y.order();
  if (static_cast<int>(beta.size()) != g) throw ArgumentError("maximal_one_dilation: beta must have g blocks");

  DilationStep step;
  step.y = y;
  step.beta = beta;
  const KernelData kernel = clean_kernel(p, y, opts, "maximal_one_dilation");
  step.kernel_before = kernel.dimension;
  step.beta_residual = (arveson_system_matrix(p, n, kernel.basis) * flatten(beta)).norm();
  if (step.beta_residual > opts.beta_residual_tolerance)
    throw ArgumentError("maximal_one_dilation: beta does not annihilate ker L_A(Y)");

  const AlphaMaximum am = maximize_dilation_alpha(p, y, beta, kernel.basis, opts.solver);
  require_optimal(am.result, "maximal_one_dilation: scale solve");
  step.scale = am.alpha;
  if (!(step.scale > 0.0)) throw AlgorithmStall("maximal_one_dilation: optimal scale is not positive");

  DilationColumn scaled = beta;
  for (auto& b : scaled) b *= step.scale;
  Vector direction(g);
  for (int i = 0; i < g; ++i) direction(i) = rng.normal();
  const GammaMaximum gm = maximize_gamma(p, y, scaled, kernel.basis, am.gamma, direction, opts.solver);
  require_optimal(gm.result, "maximal_one_dilation: tail solve");
  step.gamma = gm.gamma;

  std::vector<SymMatrix> items;
  items.reserve(static_cast<std::size_t>(g));
  for (int i = 0; i < g; ++i) {
    Matrix m(n + 1, n + 1);
    m.topLeftCorner(n, n) = y[i].matrix();
    m.topRightCorner(n, 1) = scaled[static_cast<std::size_t>(i)];
    m.bottomLeftCorner(1, n) = scaled[static_cast<std::size_t>(i)].transpose();
    m(n, n) = step.gamma(i);
    items.emplace_back(m);
  }
  step.next = MatrixTuple(std::move(items));

  const double min_eig = min_eigenvalue(evaluate(p, step.next));
  const KernelData after = kernel_of(p, step.next, opts.policies.kernel);
  step.kernel_after = after.verdict == Conditioning::clean ? after.dimension : -1;
  if (min_eig < -kMembershipTolerance || after.verdict != Conditioning::clean ||
      step.kernel_after <= step.kernel_before)
    throw AlgorithmStall("maximal_one_dilation: " + describe_stall(step, min_eig));
  return step;
}

DilationCertificate dilate_to_arveson(const LinearPencil& p, const MatrixTuple& x, Rng& rng,
                                      const DilationOptions& opts) {
  if (x.count() != p.g()) throw ArgumentError("dilate_to_arveson: coordinate count mismatch");
  if (!is_member(p, x)) throw ArgumentError("dilate_to_arveson: start point is not in D_A");
  DilationCertificate cert;
  cert.start = x;
  const int cap = x.order() * p.g();

  MatrixTuple y = x;
  KernelData kernel = clean_kernel(p, y, opts, "dilate_to_arveson");
  cert.mu = arveson_state(p, y, kernel, opts, "dilate_to_arveson").nullity;

  while (true) {
    std::optional<DilationColumn> beta = pick_beta(p, y, kernel, rng, opts);
    if (!beta) break;
    if (cert.step_count() >= cap)
      throw CaratheodoryViolation("dilate_to_arveson: point still not Arveson extreme after " + std::to_string(cap) +
                                  " steps (mu = " + std::to_string(cert.mu) + ")");
    std::optional<DilationStep> step;
    KernelData next_kernel;
    for (int attempt = 0;; ++attempt) {
      try {
        step = maximal_one_dilation(p, y, *beta, rng, opts);
        step->retries = attempt;
        // A dilated point whose next decisions are ambiguous is treated like a
        // stalled step: another direction usually avoids the degeneracy.
        try {
          next_kernel = clean_kernel(p, step->next, opts, "dilate_to_arveson");
          arveson_state(p, step->next, next_kernel, opts, "dilate_to_arveson");
        } catch (const IllConditioned& e) {
          throw AlgorithmStall(e.what());
        }
        break;
      } catch (const AlgorithmStall& e) {
        if (attempt >= opts.stall_retries)
          throw AlgorithmStall(std::string(e.what()) + " (step " + std::to_string(cert.step_count() + 1) + ", " +
                               std::to_string(attempt + 1) + " directions tried)");
      }
      beta = pick_beta(p, y, kernel, rng, opts);
      if (!beta) throw NumericalFailure("dilate_to_arveson: Arveson system nullity vanished during a retry");
    }
    y = step->next;
    kernel = std::move(next_kernel);
    cert.steps.push_back(std::move(*step));
  }
  cert.final_point = y;
  return cert;
}

namespace {

void split_into(const MatrixTuple& y, const Matrix& frame, Rng& rng, const DilationOptions& opts,
                std::vector<Matrix>& frames) {
  const int n = y.order();
  const NullityReport comm = symmetric_commutant(y, opts.policies.irreducibility);
  if (comm.verdict == Conditioning::ill_conditioned)
    throw IllConditioned("split_irreducible: commutant dimension is ill-conditioned");
  if (n == 1 || comm.nullity <= 1) {
    frames.push_back(frame);
    return;
  }
  constexpr int kAttempts = 8;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Vector coeffs(comm.nullity);
    for (int i = 0; i < comm.nullity; ++i) coeffs(i) = rng.normal();
    Matrix c = commutant_element(n, comm.null_basis * coeffs);
    c -= (c.trace() / n) * Matrix::Identity(n, n);
    const double scale = c.norm();
    if (!(scale > 0.0)) continue;
    Eigen::SelfAdjointEigenSolver<Matrix> es(c / scale);
    if (es.info() != Eigen::Success) throw NumericalFailure("split_irreducible: eigensolver did not converge");
    const Vector& ev = es.eigenvalues();
    const double spread = std::max(1e-300, ev(n - 1) - ev(0));
    std::vector<int> cuts{0};
    for (int i = 1; i < n; ++i)
      if (ev(i) - ev(i - 1) > opts.cluster_gap * std::max(1.0, spread)) cuts.push_back(i);
    cuts.push_back(n);
    if (cuts.size() <= 2) continue;
    for (std::size_t b = 0; b + 1 < cuts.size(); ++b) {
      const Matrix basis = es.eigenvectors().middleCols(cuts[b], cuts[b + 1] - cuts[b]);
      split_into(y.congruence(basis), frame * basis, rng, opts, frames);
    }
    return;
  }
  throw NumericalFailure("split_irreducible: commutant elements have a single eigenvalue cluster");
}

}  // namespace

IrreducibleSplit split_irreducible(const MatrixTuple& y, Rng& rng, const DilationOptions& opts) {
  const int n = y.order();
  std::vector<Matrix> frames;
  split_into(y, Matrix::Identity(n, n), rng, opts, frames);

  IrreducibleSplit out;
  out.unitary.resize(n, n);
  int offset = 0;
  for (const auto& f : frames) {
    out.unitary.middleCols(offset, f.cols()) = f;
    out.summands.push_back(y.congruence(f));
    offset += static_cast<int>(f.cols());
  }
  for (const auto& item : y) {
    const Matrix conj = out.unitary.transpose() * item.matrix() * out.unitary;
    offset = 0;
    for (const auto& f : frames) {
      const auto w = f.cols();
      Matrix off = conj.middleRows(offset, w);
      off.middleCols(offset, w).setZero();
      out.off_block_residual = std::max(out.off_block_residual, off.norm());
      offset += static_cast<int>(w);
    }
  }
  const double limit = opts.off_block_tolerance * std::max(1.0, y.max_norm());
  if (out.off_block_residual > limit) {
    std::ostringstream os;
    os << "split_irreducible: off-block residual " << out.off_block_residual << " exceeds " << limit;
    throw NumericalFailure(os.str());
  }
  return out;
}

namespace {

struct Residuals {
  double identity = 0.0;
  double reconstruction = 0.0;
};

Residuals combination_residuals(const MatrixTuple& x, const std::vector<MatrixTuple>& summands,
                                const std::vector<Matrix>& contractions) {
  const int n = x.order();
  Residuals r;
  Matrix id = -Matrix::Identity(n, n);
  for (const auto& v : contractions) id += v.transpose() * v;
  r.identity = id.norm();
  for (int k = 0; k < x.count(); ++k) {
    Matrix acc = -x[k].matrix();
    for (std::size_t j = 0; j < summands.size(); ++j)
      acc += contractions[j].transpose() * summands[j][k].matrix() * contractions[j];
    r.reconstruction = std::max(r.reconstruction, acc.norm());
  }
  return r;
}

}  // namespace

void extract_combination(DilationCertificate& cert, const IrreducibleSplit& split, const DilationOptions& opts) {
  const int n = cert.start.order();
  const int total = cert.final_point.order();
  if (split.unitary.rows() != total || split.unitary.cols() != total)
    throw ArgumentError("extract_combination: split does not match the final point");
  cert.unitary = split.unitary;
  cert.summands.clear();
  cert.contractions.clear();
  int offset = 0;
  for (const auto& z : split.summands) {
    const int w = z.order();
    Matrix v = split.unitary.topRows(n).middleCols(offset, w).transpose();
    offset += w;
    if (v.norm() <= opts.prune_tolerance) continue;
    cert.summands.push_back(z);
    cert.contractions.push_back(std::move(v));
  }
  const Residuals r = combination_residuals(cert.start, cert.summands, cert.contractions);
  cert.identity_residual = r.identity;
  cert.reconstruction_residual = r.reconstruction;
  const double recon_limit = opts.reconstruction_tolerance * (1.0 + cert.start.max_norm());
  if (r.identity > opts.identity_tolerance || r.reconstruction > recon_limit) {
    std::ostringstream os;
    os << "extract_combination: identity residual " << r.identity << ", reconstruction residual " << r.reconstruction;
    throw NumericalFailure(os.str());
  }
}

DilationCertificate decompose(const LinearPencil& p, const MatrixTuple& x, Rng& rng, const DilationOptions& opts) {
  DilationCertificate cert = dilate_to_arveson(p, x, rng, opts);
  extract_combination(cert, split_irreducible(cert.final_point, rng, opts), opts);
  cert.summand_verdicts.clear();
  for (const auto& z : cert.summands) {
    const Verdict v = classify(p, z, opts.policies).verdict;
    cert.summand_verdicts.push_back(v);
    if (v != Verdict::free_extreme) cert.flagged = true;
  }
  return cert;
}

CertificateCheck verify_certificate(const LinearPencil& p, const DilationCertificate& cert,
                                    const DilationOptions& opts) {
  CertificateCheck out;
  const int n = cert.start.order();
  const int g = p.g();
  auto fail = [&](std::string why) { out.failures.push_back(std::move(why)); };

  if (cert.start.count() != g) throw ArgumentError("verify_certificate: start point does not match the pencil");
  if (cert.summands.size() != cert.contractions.size())
    throw ArgumentError("verify_certificate: summand and contraction counts differ");
  for (std::size_t j = 0; j < cert.summands.size(); ++j) {
    const auto& v = cert.contractions[j];
    if (cert.summands[j].count() != g || v.rows() != cert.summands[j].order() || v.cols() != n)
      throw ArgumentError("verify_certificate: summand " + std::to_string(j) + " has inconsistent shape");
  }

  const Residuals r = combination_residuals(cert.start, cert.summands, cert.contractions);
  out.identity_residual = r.identity;
  out.reconstruction_residual = r.reconstruction;
  if (r.identity > opts.identity_tolerance) fail("partition of identity residual too large");
  if (r.reconstruction > opts.reconstruction_tolerance * (1.0 + cert.start.max_norm()))
    fail("reconstruction residual too large");

  out.steps_within_cap = cert.step_count() <= n * g;
  if (!out.steps_within_cap) fail("more than n*g dilation steps");
  int total = 0;
  for (const auto& z : cert.summands) total += z.order();
  out.size_bound_holds = total <= n * (g + 1);
  if (!out.size_bound_holds) fail("summand sizes exceed n(g+1)");

  out.summands_are_members = true;
  out.summands_free_extreme = true;
  for (std::size_t j = 0; j < cert.summands.size(); ++j) {
    if (!is_member(p, cert.summands[j])) {
      out.summands_are_members = false;
      fail("summand " + std::to_string(j) + " is not in D_A");
    }
    if (classify(p, cert.summands[j], opts.policies).verdict != Verdict::free_extreme) {
      out.summands_free_extreme = false;
      fail("summand " + std::to_string(j) + " is not free extreme");
    }
  }
  out.passed = out.failures.empty();
  return out;
}

}  // namespace freespec
