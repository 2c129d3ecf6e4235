#include "freespec/serialize.hpp"

#include <set>
#include <string>

#include "freespec/errors.hpp"

namespace freespec {

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) throw ArgumentError(std::string("json: expected an object holding '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) throw ArgumentError(std::string("json: missing key '") + key + "'");
  return *it;
}

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ArgumentError(std::string("json: key '") + key + "' has the wrong type");
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return get<T>(j, key);
}

Json json_of(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw ArgumentError("json: expected a numeric array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ArgumentError("json: expected a numeric array");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Verdict verdict_from_json(const Json& j) {
  if (!j.is_string()) throw ArgumentError("json: verdict must be a string");
  const auto v = verdict_from_string(j.get<std::string>());
  if (!v) throw ArgumentError("json: unknown verdict '" + j.get<std::string>() + "'");
  return *v;
}

}  // namespace

Json json_of(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    out.push_back(std::move(row));
  }
  return out;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw ArgumentError("json: matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ArgumentError("json: matrix rows must be arrays of equal length");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ArgumentError("json: matrix entries must be numbers");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

Json json_of(const MatrixTuple& t) {
  Json items = Json::array();
  for (const auto& x : t) items.push_back(json_of(x.matrix()));
  return {{"g", t.count()}, {"n", t.order()}, {"items", std::move(items)}};
}

MatrixTuple tuple_from_json(const Json& j) {
  const int g = get<int>(j, "g");
  const int n = get<int>(j, "n");
  const Json& items = field(j, "items");
  if (!items.is_array() || static_cast<int>(items.size()) != g)
    throw ArgumentError("json: tuple must have g items");
  std::vector<SymMatrix> out;
  for (const auto& item : items) {
    const Matrix m = matrix_from_json(item);
    if (m.rows() != n || m.cols() != n) throw ArgumentError("json: tuple item is not n x n");
    if (n > 0 && (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.norm()))
      throw ArgumentError("json: tuple item is not symmetric");
    out.emplace_back(m);
  }
  try {
    return MatrixTuple(std::move(out));
  } catch (const Error& e) {
    throw ArgumentError(std::string("json: ") + e.what());
  }
}

Json json_of(const LinearPencil& p) {
  Json out = json_of(p.coefficients());
  out.erase("n");
  out["d"] = p.d();
  if (p.irreducible) out["irreducible"] = *p.irreducible;
  if (p.bounded) out["bounded"] = *p.bounded;
  return out;
}

LinearPencil pencil_from_json(const Json& j) {
  Json t = j;
  t["n"] = get<int>(j, "d");
  LinearPencil p{tuple_from_json(t)};
  if (j.contains("irreducible")) p.irreducible = get<bool>(j, "irreducible");
  if (j.contains("bounded")) p.bounded = get<bool>(j, "bounded");
  return p;
}

Json json_of(const LinearFunctional& l) {
  Json out{{"kind", to_string(l.kind)}, {"level", l.level}};
  if (l.kind == FunctionalKind::rc) {
    Json coeffs = Json::array();
    for (const auto& c : l.coefficients) coeffs.push_back(json_of(c));
    out["coeffs"] = std::move(coeffs);
  } else {
    out["weight"] = json_of(l.weight);
    out["pencil"] = json_of(LinearPencil{l.pencil});
  }
  return out;
}

LinearFunctional functional_from_json(const Json& j) {
  LinearFunctional l;
  const auto kind = get<std::string>(j, "kind");
  l.level = get<int>(j, "level");
  if (l.level < 1) throw ArgumentError("json: functional level must be positive");
  if (kind == "rc") {
    l.kind = FunctionalKind::rc;
    const Json& coeffs = field(j, "coeffs");
    if (!coeffs.is_array() || coeffs.empty()) throw ArgumentError("json: coeffs must be a nonempty array");
    for (const auto& c : coeffs) {
      Matrix m = matrix_from_json(c);
      if (m.rows() != l.level || m.cols() != l.level) throw ArgumentError("json: coefficient block is not n x n");
      l.coefficients.push_back(m.triangularView<Eigen::Lower>().toDenseMatrix());
    }
  } else if (kind == "rpt") {
    l.kind = FunctionalKind::rpt;
    l.pencil = pencil_from_json(field(j, "pencil")).coefficients();
    l.weight = matrix_from_json(field(j, "weight"));
    const int size = l.pencil.order() * l.level;
    if (l.weight.rows() != size || l.weight.cols() != size) throw ArgumentError("json: weight must be dn x dn");
  } else {
    throw ArgumentError("json: unknown functional kind '" + kind + "'");
  }
  return l;
}

Json json_of(const LmiProgram& prog) {
  Json g = Json::array();
  for (const auto& gi : prog.g) g.push_back(json_of(gi));
  return {{"m", prog.variable_count()}, {"N", prog.order()}, {"c", json_of(prog.c)}, {"G0", json_of(prog.g0)},
          {"G", std::move(g)}};
}

LmiProgram program_from_json(const Json& j) {
  LmiProgram prog;
  const int m = get<int>(j, "m");
  const int size = get<int>(j, "N");
  prog.c = vector_from_json(field(j, "c"));
  prog.g0 = matrix_from_json(field(j, "G0"));
  const Json& g = field(j, "G");
  if (!g.is_array()) throw ArgumentError("json: G must be an array");
  for (const auto& gi : g) prog.g.push_back(matrix_from_json(gi));
  if (prog.variable_count() != m || prog.c.size() != m) throw ArgumentError("json: m does not match c and G");
  if (prog.order() != size) throw ArgumentError("json: N does not match G0");
  prog.validate();
  return prog;
}

Json json_of(const SolveResult& r) {
  return {{"status", to_string(r.status)},
          {"x", json_of(r.x)},
          {"primal_objective", r.primal_objective},
          {"dual_objective", r.dual_objective},
          {"relative_gap", r.relative_gap},
          {"primal_infeasibility", r.primal_infeasibility},
          {"dual_infeasibility", r.dual_infeasibility},
          {"iterations", r.iterations},
          {"message", r.message}};
}

Json json_of(const ExtremeClassification& c) {
  Json flags = Json::array();
  if (c.kernel_ill) flags.push_back("kernel");
  if (c.commutant_ill) flags.push_back("commutant");
  if (c.arveson_ill) flags.push_back("arveson");
  if (c.euclidean_ill) flags.push_back("euclidean");
  return {{"verdict", to_string(c.verdict)},
          {"k", c.kernel.dimension},
          {"commutant_dim", c.commutant_dim},
          {"arv_nullity", c.arveson_nullity},
          {"euc_nullity", c.euclidean_nullity ? Json(*c.euclidean_nullity) : Json(nullptr)},
          {"condition_flags", std::move(flags)}};
}

Json json_of(const DilationCertificate& cert) {
  Json steps = Json::array();
  for (const auto& s : cert.steps) {
    Json beta = Json::array();
    for (const auto& b : s.beta) beta.push_back(json_of(b));
    steps.push_back({{"y", json_of(s.y)},
                     {"beta", std::move(beta)},
                     {"scale", s.scale},
                     {"gamma", json_of(s.gamma)},
                     {"next", json_of(s.next)},
                     {"kernel_before", s.kernel_before},
                     {"kernel_after", s.kernel_after},
                     {"beta_residual", s.beta_residual},
                     {"retries", s.retries}});
  }
  Json summands = Json::array();
  for (const auto& z : cert.summands) summands.push_back(json_of(z));
  Json contractions = Json::array();
  for (const auto& v : cert.contractions) contractions.push_back(json_of(v));
  Json verdicts = Json::array();
  for (Verdict v : cert.summand_verdicts) verdicts.push_back(to_string(v));
  return {{"start", json_of(cert.start)},
          {"steps", std::move(steps)},
          {"final", json_of(cert.final_point)},
          {"mu", cert.mu},
          {"unitary", json_of(cert.unitary)},
          {"summands", std::move(summands)},
          {"contractions", std::move(contractions)},
          {"summand_verdicts", std::move(verdicts)},
          {"identity_residual", cert.identity_residual},
          {"reconstruction_residual", cert.reconstruction_residual},
          {"flagged", cert.flagged}};
}

DilationCertificate certificate_from_json(const Json& j) {
  DilationCertificate cert;
  cert.start = tuple_from_json(field(j, "start"));
  const Json& steps = field(j, "steps");
  if (!steps.is_array()) throw ArgumentError("json: steps must be an array");
  for (const auto& s : steps) {
    DilationStep step;
    step.y = tuple_from_json(field(s, "y"));
    const Json& beta = field(s, "beta");
    if (!beta.is_array()) throw ArgumentError("json: beta must be an array");
    for (const auto& b : beta) step.beta.push_back(vector_from_json(b));
    step.scale = get<double>(s, "scale");
    step.gamma = vector_from_json(field(s, "gamma"));
    step.next = tuple_from_json(field(s, "next"));
    step.kernel_before = get<int>(s, "kernel_before");
    step.kernel_after = get<int>(s, "kernel_after");
    step.beta_residual = get<double>(s, "beta_residual");
    step.retries = get<int>(s, "retries");
    cert.steps.push_back(std::move(step));
  }
  cert.final_point = tuple_from_json(field(j, "final"));
  cert.mu = get<int>(j, "mu");
  cert.unitary = matrix_from_json(field(j, "unitary"));
  for (const auto& z : field(j, "summands")) cert.summands.push_back(tuple_from_json(z));
  for (const auto& v : field(j, "contractions")) cert.contractions.push_back(matrix_from_json(v));
  for (const auto& v : field(j, "summand_verdicts")) cert.summand_verdicts.push_back(verdict_from_json(v));
  cert.identity_residual = get<double>(j, "identity_residual");
  cert.reconstruction_residual = get<double>(j, "reconstruction_residual");
  cert.flagged = get<bool>(j, "flagged");
  if (cert.summands.size() != cert.contractions.size())
    throw ArgumentError("json: summand and contraction counts differ");
  return cert;
}

Json json_of(const CampaignRecord& r) {
  return {{"run_id", r.run_id},
          {"g", r.g},
          {"d", r.d},
          {"n", r.n},
          {"kind", to_string(r.kind)},
          {"verdict", to_string(r.verdict)},
          {"k", r.k},
          {"commutant_dim", r.commutant_dim},
          {"arv_nullity", r.arveson_nullity},
          {"euc_nullity", r.euclidean_nullity ? Json(*r.euclidean_nullity) : Json(nullptr)},
          {"status", to_string(r.status)},
          {"value", r.value},
          {"wall_ms", r.wall_ms ? Json(*r.wall_ms) : Json(nullptr)},
          {"note", r.note}};
}

Json json_of(const CellStats& s) {
  Json verdicts = Json::object();
  for (const auto& [v, c] : s.verdicts) verdicts[to_string(v)] = c;
  Json hist = Json::object();
  for (const auto& [k, c] : s.k_histogram) hist[std::to_string(k)] = c;
  auto violations = [](const std::vector<KernelBoundViolation>& list) {
    Json out = Json::array();
    for (const auto& v : list) out.push_back({{"run_id", v.run_id}, {"n", v.n}, {"k", v.k}});
    return out;
  };
  return {{"g", s.g},
          {"d", s.d},
          {"n", s.n},
          {"total", s.total},
          {"discarded", s.discarded},
          {"irreducible", s.irreducible},
          {"reducible", s.reducible},
          {"verdicts", std::move(verdicts)},
          {"free_extreme", s.free_extreme},
          {"non_arveson", s.non_arveson},
          {"not_euclidean", s.not_euclidean},
          {"p_n", s.p_n()},
          {"discard_rate", s.discard_rate()},
          {"free_extreme_ratio", s.free_extreme_ratio()},
          {"non_arveson_ratio", s.non_arveson_ratio()},
          {"k_histogram", std::move(hist)},
          {"k_upper_bound_violations", violations(s.upper_bound_violations)},
          {"k_lower_bound_violations", violations(s.lower_bound_violations)},
          {"count_theorem_violations", s.count_theorem_violations}};
}

Json json_of(const CampaignStats& s) {
  Json cells = Json::array();
  for (const auto& c : s.cells) cells.push_back(json_of(c));
  Json totals = json_of(s.totals);
  for (const char* key : {"g", "d", "n"}) totals.erase(key);
  return {{"cells", std::move(cells)}, {"totals", std::move(totals)}};
}

Json json_of(const FitResult& f) {
  Json out{{"model", to_string(f.model)}, {"error", f.error}, {"points", f.points}};
  if (f.model == FitModel::exponential) {
    out["a"] = f.a;
    out["r"] = f.r;
  } else {
    out["mu"] = f.mu;
    out["sigma"] = f.sigma;
    out["excluded_bins"] = f.excluded;
  }
  return out;
}

void apply_tolerance_overrides(ClassifyPolicies& policies, const Json& j) {
  if (!j.is_object()) throw ArgumentError("json: tolerances must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number() || !(value.get<double>() > 0.0))
      throw ArgumentError("json: tolerance '" + key + "' must be a positive number");
    const double v = value.get<double>();
    if (key == "kernel_e1") policies.kernel.eps1 = v;
    else if (key == "kernel_e2") policies.kernel.eps2 = v;
    else if (key == "free_e1") policies.free_extreme.eps1 = v;
    else if (key == "free_e2") policies.free_extreme.eps2 = v;
    else if (key == "euclidean_e1") policies.euclidean.eps1 = v;
    else if (key == "euclidean_e2") policies.euclidean.eps2 = v;
    else if (key == "irreducibility_e1") policies.irreducibility.eps1 = v;
    else if (key == "irreducibility_e2") policies.irreducibility.eps2 = v;
    else throw ArgumentError("json: unknown tolerance '" + key + "'");
  }
}

CampaignConfig config_from_json(const Json& j) {
  static const std::set<std::string> known{
      "mode",           "g",           "d",           "levels",        "kind",
      "runs",           "seed",        "threads",     "pencil",        "failed_solve",
      "solve_retries",  "record_timing", "entry_bound", "scale_divisor", "coefficient_bound",
      "coefficient_divisor", "distribution", "tolerances"};
  if (!j.is_object()) throw ArgumentError("config: expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ArgumentError("config: unknown key '" + key + "'");

  CampaignConfig cfg;
  const auto mode = get_or<std::string>(j, "mode", "pairs");
  if (mode == "pairs") cfg.mode = CampaignMode::pairs;
  else if (mode == "fixed_a") cfg.mode = CampaignMode::fixed_a;
  else throw ArgumentError("config: mode must be 'pairs' or 'fixed_a'");

  if (j.contains("pencil")) {
    const Json& p = j.at("pencil");
    if (p.is_string()) {
      const auto name = p.get<std::string>();
      if (name == "disc") cfg.pencil = free_disc();
      else if (name == "simplex") cfg.pencil = free_simplex();
      else throw ArgumentError("config: unknown pencil name '" + name + "'");
    } else {
      cfg.pencil = pencil_from_json(p);
    }
    cfg.g = cfg.pencil->g();
  }
  cfg.g = get_or<int>(j, "g", cfg.g);
  if (j.contains("d")) {
    const Json& d = j.at("d");
    if (d.is_number_integer()) cfg.dims = {d.get<int>()};
    else if (d.is_array()) cfg.dims = get<std::vector<int>>(j, "d");
    else throw ArgumentError("config: d must be an integer or an array of integers");
  } else if (!cfg.pencil) {
    throw ArgumentError("config: missing key 'd'");
  }
  if (j.contains("levels")) {
    const auto levels = get<std::vector<int>>(j, "levels");
    if (levels.size() == 1) cfg.level_min = cfg.level_max = levels[0];
    else if (levels.size() == 2) cfg.level_min = levels[0], cfg.level_max = levels[1];
    else throw ArgumentError("config: levels must be [n] or [min, max]");
  }
  const auto kind = get_or<std::string>(j, "kind", "rc");
  if (kind == "rc") cfg.kind = FunctionalKind::rc;
  else if (kind == "rpt") cfg.kind = FunctionalKind::rpt;
  else throw ArgumentError("config: kind must be 'rc' or 'rpt'");
  cfg.runs = get_or<int>(j, "runs", cfg.runs);
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  cfg.threads = get_or<int>(j, "threads", cfg.threads);
  const auto failed = get_or<std::string>(j, "failed_solve", "drop");
  if (failed == "drop") cfg.failed_solve = FailedSolvePolicy::drop;
  else if (failed == "retry") cfg.failed_solve = FailedSolvePolicy::retry;
  else throw ArgumentError("config: failed_solve must be 'drop' or 'retry'");
  cfg.solve_retries = get_or<int>(j, "solve_retries", cfg.solve_retries);
  cfg.record_timing = get_or<bool>(j, "record_timing", cfg.record_timing);
  cfg.pencil_gen.entry_bound = get_or<int>(j, "entry_bound", cfg.pencil_gen.entry_bound);
  cfg.pencil_gen.scale_divisor = get_or<double>(j, "scale_divisor", cfg.pencil_gen.scale_divisor);
  cfg.functional_gen.bound = get_or<int>(j, "coefficient_bound", cfg.functional_gen.bound);
  cfg.functional_gen.divisor = get_or<double>(j, "coefficient_divisor", cfg.functional_gen.divisor);
  const auto dist = get_or<std::string>(j, "distribution", "integer");
  if (dist == "integer") cfg.functional_gen.distribution = CoefficientDistribution::integer;
  else if (dist == "gaussian") cfg.functional_gen.distribution = CoefficientDistribution::gaussian;
  else if (dist == "uniform_real") cfg.functional_gen.distribution = CoefficientDistribution::uniform_real;
  else throw ArgumentError("config: distribution must be 'integer', 'gaussian' or 'uniform_real'");
  if (j.contains("tolerances")) apply_tolerance_overrides(cfg.policies, j.at("tolerances"));
  cfg.validate();
  return cfg;
}

Json json_of(const CampaignConfig& cfg) {
  Json out{{"mode", to_string(cfg.mode)},
           {"g", cfg.g},
           {"levels", {cfg.level_min, cfg.level_max}},
           {"kind", to_string(cfg.kind)},
           {"runs", cfg.runs},
           {"seed", cfg.seed},
           {"threads", cfg.threads},
           {"failed_solve", cfg.failed_solve == FailedSolvePolicy::drop ? "drop" : "retry"},
           {"solve_retries", cfg.solve_retries},
           {"record_timing", cfg.record_timing},
           {"entry_bound", cfg.pencil_gen.entry_bound},
           {"scale_divisor", cfg.pencil_gen.scale_divisor},
           {"coefficient_bound", cfg.functional_gen.bound},
           {"coefficient_divisor", cfg.functional_gen.divisor},
           {"distribution", cfg.functional_gen.distribution == CoefficientDistribution::integer    ? "integer"
                            : cfg.functional_gen.distribution == CoefficientDistribution::gaussian ? "gaussian"
                                                                                                   : "uniform_real"},
           {"tolerances",
            {{"kernel_e1", cfg.policies.kernel.eps1},
             {"kernel_e2", cfg.policies.kernel.eps2},
             {"free_e1", cfg.policies.free_extreme.eps1},
             {"free_e2", cfg.policies.free_extreme.eps2},
             {"euclidean_e1", cfg.policies.euclidean.eps1},
             {"euclidean_e2", cfg.policies.euclidean.eps2},
             {"irreducibility_e1", cfg.policies.irreducibility.eps1},
             {"irreducibility_e2", cfg.policies.irreducibility.eps2}}}};
  if (cfg.pencil)
    out["pencil"] = json_of(*cfg.pencil);
  else
    out["d"] = cfg.dims;
  return out;
}

}  // namespace freespec
