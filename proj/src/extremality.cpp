#include "freespec/extremality.hpp"

#include <cmath>
#include <numeric>

#include "freespec/errors.hpp"

namespace freespec {

ZeroDecisionPolicy ZeroDecisionPolicy::kernel_dimension() {
  return {1e-6, 1e-5, 2.0, SpectrumKind::eigenvalues};
}

ZeroDecisionPolicy ZeroDecisionPolicy::free_extreme() {
  return {1e-3, std::pow(10.0, -2.5), 1.0, SpectrumKind::singular_values};
}

ZeroDecisionPolicy ZeroDecisionPolicy::euclidean_extreme() {
  return {1e-3, std::pow(10.0, -2.5), 1.0, SpectrumKind::singular_values};
}

ZeroDecisionPolicy ZeroDecisionPolicy::irreducibility() {
  return {std::pow(10.0, -4.5), 1e-4, 1.0, SpectrumKind::singular_values};
}

ZeroDecision decide_zeros(const SpectrumReport& spectrum, const ZeroDecisionPolicy& policy) {
  const auto& s = spectrum.values;
  const int count = static_cast<int>(s.size());
  if (count == 0) return {};
  // The search starts at the second entry; an all-small spectrum is a zero map.
  if (std::abs(s[0]) < policy.eps1) return {count, Conditioning::clean};
  for (int j = 1; j < count; ++j) {
    const double cur = std::abs(s[static_cast<std::size_t>(j)]);
    const double prev = std::abs(s[static_cast<std::size_t>(j - 1)]);
    if (cur < policy.eps1 && cur < policy.eps2 * prev) return {count - j, Conditioning::clean};
  }
  const double relax = std::pow(10.0, policy.relax_exponent);
  for (int j = 1; j < count; ++j) {
    const double cur = std::abs(s[static_cast<std::size_t>(j)]);
    const double prev = std::abs(s[static_cast<std::size_t>(j - 1)]);
    if (cur < policy.eps1 * relax && cur < policy.eps2 * relax * prev) return {0, Conditioning::ill_conditioned};
  }
  return {};
}

KernelData kernel_of(const LinearPencil& p, const MatrixTuple& x, const ZeroDecisionPolicy& policy) {
  const EigenDecomposition eig = sym_eig(evaluate(p, x));
  const ZeroDecision z = decide_zeros(eig.eigenvalues, policy);
  KernelData out;
  out.verdict = z.verdict;
  out.dimension = z.zeros;
  out.basis = eig.vectors.rightCols(z.zeros);
  out.spectrum = eig.eigenvalues;
  return out;
}

NullityReport decide_nullity(const Matrix& system, const ZeroDecisionPolicy& policy) {
  NullityReport out;
  const RightSingularSystem rs = right_singular_system(system);
  const ZeroDecision z = decide_zeros(rs.values, policy);
  out.nullity = z.zeros;
  out.verdict = z.verdict;
  out.spectrum = rs.values;
  out.null_basis = system.cols() == 0 ? Matrix(0, 0) : Matrix(rs.right.rightCols(z.zeros));
  return out;
}

Matrix arveson_system_matrix(const LinearPencil& p, int n, const Matrix& kernel_basis) {
  const int d = p.d();
  const int g = p.g();
  const auto k = kernel_basis.cols();
  if (kernel_basis.rows() != d * n) throw ArgumentError("arveson_system_matrix: kernel basis row count != dn");
  Matrix out(d * k, n * g);
  Matrix slice(d, k);
  for (int i = 0; i < g; ++i) {
    for (int t = 0; t < n; ++t) {
      // (A_i (x) e_t^T) P = A_i * (rows b*n + t of P)
      for (int b = 0; b < d; ++b) slice.row(b) = kernel_basis.row(b * n + t);
      const Matrix col = p[i].matrix() * slice;
      out.col(i * n + t) = Eigen::Map<const Vector>(col.data(), col.size());
    }
  }
  return out;
}

Matrix euclidean_system_matrix(const LinearPencil& p, int n, const Matrix& kernel_basis) {
  const int d = p.d();
  const int g = p.g();
  if (kernel_basis.rows() != d * n) throw ArgumentError("euclidean_system_matrix: kernel basis row count != dn");
  const auto basis = symmetric_basis(n);
  const int per = static_cast<int>(basis.size());
  Matrix out(d * n * kernel_basis.cols(), g * per);
  for (int i = 0; i < g; ++i) {
    for (int v = 0; v < per; ++v) {
      const Matrix col = kron(p[i].matrix(), basis[static_cast<std::size_t>(v)]) * kernel_basis;
      out.col(i * per + v) = Eigen::Map<const Vector>(col.data(), col.size());
    }
  }
  return out;
}

Matrix commutant_map_matrix(const MatrixTuple& x) {
  const int n = x.order();
  const int g = x.count();
  const auto basis = symmetric_basis(n);
  Matrix out(g * n * n, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t v = 0; v < basis.size(); ++v) {
    for (int k = 0; k < g; ++k) {
      const Matrix c = basis[v] * x[k].matrix() - x[k].matrix() * basis[v];
      out.col(static_cast<Eigen::Index>(v)).segment(k * n * n, n * n) = Eigen::Map<const Vector>(c.data(), c.size());
    }
  }
  return out;
}

NullityReport arveson_system_nullity(const LinearPencil& p, const MatrixTuple& x, const KernelData& kernel,
                                     const ZeroDecisionPolicy& policy) {
  if (kernel.verdict != Conditioning::clean) throw ArgumentError("arveson_system_nullity: kernel is not clean");
  return decide_nullity(arveson_system_matrix(p, x.order(), kernel.basis), policy);
}

NullityReport euclidean_system_nullity(const LinearPencil& p, const MatrixTuple& x, const KernelData& kernel,
                                       const ZeroDecisionPolicy& policy) {
  if (kernel.verdict != Conditioning::clean) throw ArgumentError("euclidean_system_nullity: kernel is not clean");
  return decide_nullity(euclidean_system_matrix(p, x.order(), kernel.basis), policy);
}

NullityReport symmetric_commutant(const MatrixTuple& x, const ZeroDecisionPolicy& policy) {
  return decide_nullity(commutant_map_matrix(x), policy);
}

int symmetric_commutant_dim(const MatrixTuple& x, const ZeroDecisionPolicy& policy) {
  const NullityReport r = symmetric_commutant(x, policy);
  if (r.verdict == Conditioning::ill_conditioned)
    throw IllConditioned("symmetric_commutant_dim: commutator spectrum is ill-conditioned");
  return r.nullity;
}

Matrix commutant_element(int n, const Vector& coordinates) {
  const auto basis = symmetric_basis(n);
  if (coordinates.size() != static_cast<Eigen::Index>(basis.size()))
    throw ArgumentError("commutant_element: wrong coordinate count");
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t v = 0; v < basis.size(); ++v) out += coordinates(static_cast<Eigen::Index>(v)) * basis[v];
  return out;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::free_extreme: return "free_extreme";
    case Verdict::arveson_reducible: return "arveson_reducible";
    case Verdict::euclidean_not_arveson: return "euclidean_not_arveson";
    case Verdict::not_euclidean_extreme: return "not_euclidean_extreme";
    case Verdict::ill_conditioned: return "ill_conditioned";
  }
  return "unknown";
}

std::optional<Verdict> verdict_from_string(const std::string& s) {
  for (Verdict v : {Verdict::free_extreme, Verdict::arveson_reducible, Verdict::euclidean_not_arveson,
                    Verdict::not_euclidean_extreme, Verdict::ill_conditioned}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

ExtremeClassification classify(const LinearPencil& p, const MatrixTuple& x, const ClassifyPolicies& policies) {
  ExtremeClassification out;
  const int g = p.g();
  const int n = x.order();
  out.kernel = kernel_of(p, x, policies.kernel);
  if (out.kernel.verdict == Conditioning::ill_conditioned) {
    out.kernel_ill = true;
    return out;
  }
  const NullityReport commutant = symmetric_commutant(x, policies.irreducibility);
  if (commutant.verdict == Conditioning::ill_conditioned) {
    out.commutant_ill = true;
    return out;
  }
  out.commutant_dim = commutant.nullity;

  if (out.kernel.dimension == 0) {
    out.arveson_nullity = n * g;
    out.euclidean_nullity = g * n * (n + 1) / 2;
    out.verdict = Verdict::not_euclidean_extreme;
    return out;
  }

  const NullityReport arv = arveson_system_nullity(p, x, out.kernel, policies.free_extreme);
  if (arv.verdict == Conditioning::ill_conditioned) {
    out.arveson_ill = true;
    return out;
  }
  out.arveson_nullity = arv.nullity;
  if (arv.nullity == 0) {
    out.euclidean_nullity = 0;
    out.verdict = out.irreducible() ? Verdict::free_extreme : Verdict::arveson_reducible;
    return out;
  }

  const NullityReport euc = euclidean_system_nullity(p, x, out.kernel, policies.euclidean);
  if (euc.verdict == Conditioning::ill_conditioned) {
    out.euclidean_ill = true;
    return out;
  }
  out.euclidean_nullity = euc.nullity;
  out.verdict = euc.nullity == 0 ? Verdict::euclidean_not_arveson : Verdict::not_euclidean_extreme;
  return out;
}

namespace {

int weighted_kernel(std::span<const int> block_sizes, std::span<const int> block_kernels) {
  if (block_sizes.size() != block_kernels.size()) throw ArgumentError("count check: list lengths differ");
  return std::inner_product(block_sizes.begin(), block_sizes.end(), block_kernels.begin(), 0);
}

}  // namespace

bool arveson_count_holds(int g, int n, std::span<const int> block_sizes, std::span<const int> block_kernels) {
  return g * n <= weighted_kernel(block_sizes, block_kernels);
}

bool euclidean_count_holds(int g, int n, std::span<const int> block_sizes, std::span<const int> block_kernels) {
  // g(n+1)/2 <= s  <=>  g(n+1) <= 2s, kept in integers.
  return g * (n + 1) <= 2 * weighted_kernel(block_sizes, block_kernels);
}

}  // namespace freespec
