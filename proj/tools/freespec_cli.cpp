#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "freespec/dilation.hpp"
#include "freespec/errors.hpp"
#include "freespec/experiments.hpp"
#include "freespec/extremality.hpp"
#include "freespec/fits.hpp"
#include "freespec/pencil.hpp"
#include "freespec/random.hpp"
#include "freespec/serialize.hpp"
#include "freespec/solver.hpp"

namespace fs = std::filesystem;
using namespace freespec;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitUsage = 64;

/// Carries an exit code out of a subcommand.
struct Exit {
  int code;
  std::string message;
};

struct Globals {
  std::uint64_t seed = 0;
  int verbosity = 0;
  std::optional<double> tol[8];
};

constexpr const char* kTolNames[8] = {"kernel-e1", "kernel-e2", "free-e1",           "free-e2",
                                      "euclidean-e1", "euclidean-e2", "irreducibility-e1", "irreducibility-e2"};

void apply_overrides(ClassifyPolicies& p, const Globals& g) {
  Json overrides = Json::object();
  for (int i = 0; i < 8; ++i) {
    if (!g.tol[i]) continue;
    std::string key = kTolNames[i];
    key[key.find('-')] = '_';
    overrides[key] = *g.tol[i];
  }
  apply_tolerance_overrides(p, overrides);
}

ClassifyPolicies policies_of(const Globals& g) {
  ClassifyPolicies p;
  apply_overrides(p, g);
  return p;
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Exit{kExitInput, "cannot open " + path};
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Exit{kExitInput, path + ": " + e.what()};
  }
}

void check_output_path(const std::string& path) {
  if (path.empty() || path == "-") return;
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) throw Exit{kExitInput, "output directory does not exist: " + parent.string()};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Exit{kExitInput, "cannot write " + path};
  out << text;
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

/// A pencil file, or one of the built-in names "disc" and "simplex".
LinearPencil load_pencil(const std::string& source) {
  if (source == "disc") return free_disc();
  if (source == "simplex") return free_simplex();
  return pencil_from_json(read_json(source));
}

/// A tuple file, or an optimize result holding the tuple under "x".
MatrixTuple load_point(const std::string& path) {
  const Json j = read_json(path);
  if (j.is_object() && j.contains("x") && j.at("x").is_object()) return tuple_from_json(j.at("x"));
  return tuple_from_json(j);
}

bool pencil_irreducible(const LinearPencil& p, const ClassifyPolicies& policies) {
  return symmetric_commutant_dim(p.coefficients(), policies.irreducibility) == 1;
}

// gen

struct GenArgs {
  int g = 2;
  int d = 3;
  int entry_bound = 25;
  double scale_divisor = 10.0;
  std::string out;
};

void cmd_gen(const GenArgs& a, const Globals& glob) {
  check_output_path(a.out);
  PencilGenConfig cfg;
  cfg.g = a.g;
  cfg.d = a.d;
  cfg.entry_bound = a.entry_bound;
  cfg.scale_divisor = a.scale_divisor;
  cfg.seed = glob.seed;
  LinearPencil p;
  try {
    p = random_pencil(cfg);
  } catch (const GenerationFailure& e) {
    throw Exit{kExitInput, e.what()};
  }
  write_json(a.out, json_of(p));
  std::cerr << "irreducible: " << (p.irreducible.value_or(false) ? "true" : "false")
            << "  bounded: " << (p.bounded.value_or(false) ? "true" : "false") << "\n";
}

// check

struct CheckArgs {
  std::string pencil;
  std::string point;
  std::string out;
};

void cmd_check(const CheckArgs& a, const Globals& glob) {
  check_output_path(a.out);
  const LinearPencil p = load_pencil(a.pencil);
  const ClassifyPolicies policies = policies_of(glob);
  Json report{{"g", p.g()}, {"d", p.d()}};
  try {
    report["irreducible"] = pencil_irreducible(p, policies);
  } catch (const IllConditioned&) {
    report["irreducible"] = nullptr;
  }
  report["bounded"] = is_bounded(p);
  if (!a.point.empty()) {
    const MatrixTuple x = load_point(a.point);
    if (x.count() != p.g()) throw Exit{kExitInput, "point has the wrong number of matrices"};
    const SymMatrix l = evaluate(p, x);
    const KernelData kernel = kernel_of(p, x, policies.kernel);
    report["n"] = x.order();
    report["min_eigenvalue"] = min_eigenvalue(l);
    report["member"] = is_member(p, x);
    report["k"] = kernel.dimension;
    report["kernel_ill_conditioned"] = kernel.verdict == Conditioning::ill_conditioned;
  }
  write_json(a.out, report);
}

// optimize

struct OptimizeArgs {
  std::string pencil;
  std::string functional;
  int n = 1;
  std::string kind = "rc";
  std::string out;
};

void cmd_optimize(const OptimizeArgs& a, const Globals& glob) {
  check_output_path(a.out);
  const LinearPencil p = load_pencil(a.pencil);
  if (!is_bounded(p)) throw Exit{kExitInput, "pencil does not define a bounded spectrahedron"};
  LinearFunctional l;
  if (!a.functional.empty()) {
    l = functional_from_json(read_json(a.functional));
    if (l.g() != p.g()) throw Exit{kExitInput, "functional and pencil disagree on g"};
  } else {
    l = random_functional(a.kind == "rc" ? FunctionalKind::rc : FunctionalKind::rpt, p, a.n, glob.seed);
  }
  const FunctionalMinimum m = minimize_functional(p, l);
  if (m.result.status != SolveStatus::optimal) {
    write_json(a.out, {{"functional", json_of(l)}, {"solve", json_of(m.result)}});
    throw Exit{kExitNumerical, std::string("solve ended ") + to_string(m.result.status)};
  }
  const ExtremeClassification c = classify(p, m.optimizer, policies_of(glob));
  Json out{{"x", json_of(m.optimizer)},
           {"value", m.result.primal_objective},
           {"verdict", to_string(c.verdict)},
           {"k", c.kernel.dimension},
           {"classification", json_of(c)},
           {"functional", json_of(l)}};
  if (glob.verbosity > 0) out["solve"] = json_of(m.result);
  write_json(a.out, out);
}

// classify

struct ClassifyArgs {
  std::string pencil;
  std::string point;
  std::string out;
};

void cmd_classify(const ClassifyArgs& a, const Globals& glob) {
  check_output_path(a.out);
  const LinearPencil p = load_pencil(a.pencil);
  const MatrixTuple x = load_point(a.point);
  if (!is_member(p, x)) throw Exit{kExitInput, "point is not in the spectrahedron"};
  write_json(a.out, json_of(classify(p, x, policies_of(glob))));
}

// dilate

struct DilateArgs {
  std::string pencil;
  std::string point;
  std::string out;
};

void cmd_dilate(const DilateArgs& a, const Globals& glob) {
  check_output_path(a.out);
  const LinearPencil p = load_pencil(a.pencil);
  const MatrixTuple x = load_point(a.point);
  if (x.count() != p.g()) throw Exit{kExitInput, "point has the wrong number of matrices"};
  if (!is_member(p, x)) throw Exit{kExitInput, "point is not in the spectrahedron"};
  DilationOptions opts;
  opts.policies = policies_of(glob);
  Rng rng(glob.seed);
  const DilationCertificate cert = decompose(p, x, rng, opts);
  write_json(a.out, json_of(cert));
  const int k0 = kernel_of(p, x, opts.policies.kernel).dimension;
  std::cerr << "k: " << k0 << "  mu: " << cert.mu << "  steps: " << cert.step_count()
            << "  sum n_j: " << cert.summand_size_total() << "  identity residual: " << cert.identity_residual
            << "  reconstruction residual: " << cert.reconstruction_residual << "\n";
  if (cert.flagged) std::cerr << "warning: some summand is not classified free_extreme\n";
}

// verify

struct VerifyArgs {
  std::string pencil;
  std::string certificate;
  std::string out;
};

void cmd_verify(const VerifyArgs& a, const Globals& glob) {
  check_output_path(a.out);
  const LinearPencil p = load_pencil(a.pencil);
  const DilationCertificate cert = certificate_from_json(read_json(a.certificate));
  DilationOptions opts;
  opts.policies = policies_of(glob);
  const CertificateCheck check = verify_certificate(p, cert, opts);
  write_json(a.out, {{"passed", check.passed},
                     {"identity_residual", check.identity_residual},
                     {"reconstruction_residual", check.reconstruction_residual},
                     {"steps_within_cap", check.steps_within_cap},
                     {"size_bound_holds", check.size_bound_holds},
                     {"summands_are_members", check.summands_are_members},
                     {"summands_free_extreme", check.summands_free_extreme},
                     {"failures", check.failures}});
  if (!check.passed) throw Exit{kExitNumerical, "certificate failed verification"};
}

// solve

struct SolveArgs {
  std::string program;
  std::string out;
};

void cmd_solve(const SolveArgs& a, const Globals&) {
  check_output_path(a.out);
  const LmiProgram prog = program_from_json(read_json(a.program));
  const SolveResult r = solve(prog);
  write_json(a.out, json_of(r));
  if (r.status == SolveStatus::ill_conditioned) throw Exit{kExitNumerical, "solver ended ill-conditioned: " + r.message};
}

// fit

struct FitArgs {
  std::string model = "gaussian";
  std::string input;
  std::string plot;
  std::string out;
};

/// Gaussian input: {"histogram": {"k": frequency, ...}} or a bare object of
/// the same shape. Exponential input: {"n": [...], "values": [...]}.
void cmd_fit(const FitArgs& a, const Globals&) {
  check_output_path(a.out);
  check_output_path(a.plot);
  const Json j = read_json(a.input);
  std::ostringstream plot;
  plot << "x,observed,fitted\n";
  FitResult r;
  if (a.model == "exponential") {
    const auto n = j.at("n").get<std::vector<double>>();
    const auto v = j.at("values").get<std::vector<double>>();
    r = fit_exponential(n, v);
    for (std::size_t i = 0; i < n.size(); ++i)
      plot << Json(n[i]).dump() << "," << Json(v[i]).dump() << "," << Json(r.a * std::exp(-r.r * n[i])).dump() << "\n";
  } else {
    const Json& h = j.contains("histogram") ? j.at("histogram") : j;
    if (!h.is_object()) throw Exit{kExitInput, "histogram must be an object of bin: frequency"};
    std::map<int, double> hist;
    for (const auto& [key, value] : h.items()) {
      std::size_t used = 0;
      int bin = 0;
      try {
        bin = std::stoi(key, &used);
      } catch (const std::exception&) {
      }
      if (used != key.size() || key.empty()) throw Exit{kExitInput, "histogram bin '" + key + "' is not an integer"};
      hist[bin] = value.get<double>();
    }
    r = fit_gaussian(hist, a.model == "gaussian_weighted");
    for (const auto& [k, f] : hist)
      plot << k << "," << Json(f).dump() << "," << Json(gaussian_density(k, r.mu, r.sigma)).dump() << "\n";
  }
  write_json(a.out, json_of(r));
  if (!a.plot.empty()) write_text(a.plot, plot.str());
}

// campaign

struct CampaignArgs {
  std::string config;
  std::string out_dir;
  std::optional<int> threads;
  bool resume = false;
  bool seed_given = false;
};

/// Run ids already present in a records CSV. A trailing partial line left by
/// an interrupted run is cut off.
std::set<std::uint64_t> completed_runs(const fs::path& csv, std::vector<CampaignRecord>& records) {
  std::set<std::uint64_t> done;
  std::ifstream in(csv, std::ios::binary);
  if (!in) return done;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const std::size_t last = content.rfind('\n');
  content = last == std::string::npos ? std::string() : content.substr(0, last + 1);
  std::istringstream lines(content);
  std::string line;
  if (!std::getline(lines, line) || line != kCampaignCsvHeader)
    throw Exit{kExitInput, csv.string() + " does not start with the campaign header"};
  std::string kept = line + "\n";
  while (std::getline(lines, line)) {
    const CampaignRecord r = parse_csv_row(line);
    done.insert(r.run_id);
    records.push_back(r);
    kept += line + "\n";
  }
  std::ofstream out(csv, std::ios::binary | std::ios::trunc);
  out << kept;
  return done;
}

/// Keeps only JSON-lines records whose run_id is in done.
void trim_jsonl(const fs::path& path, const std::set<std::uint64_t>& done) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return;
  std::string kept;
  std::string line;
  while (std::getline(in, line)) {
    if (in.eof()) break;
    try {
      const Json j = Json::parse(line);
      if (done.count(j.at("run_id").get<std::uint64_t>())) kept += line + "\n";
    } catch (const nlohmann::json::exception&) {
    }
  }
  in.close();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << kept;
}

void cmd_campaign(const CampaignArgs& a, const Globals& glob) {
  Json raw;
  {
    std::ifstream in(a.config);
    if (!in) throw Exit{kExitInput, "cannot open " + a.config};
    try {
      raw = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Exit{kExitUsage, "malformed config: " + std::string(e.what())};
    }
  }
  CampaignConfig cfg;
  try {
    cfg = config_from_json(raw);
  } catch (const ArgumentError& e) {
    throw Exit{kExitUsage, "malformed config: " + std::string(e.what())};
  }
  if (a.seed_given || !raw.contains("seed")) cfg.seed = glob.seed;
  if (a.threads) cfg.threads = *a.threads;
  apply_overrides(cfg.policies, glob);
  cfg.validate();

  const fs::path dir(a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw Exit{kExitInput, "cannot create " + dir.string()};
  const fs::path csv_path = dir / "records.csv";
  const fs::path jsonl_path = dir / "records.jsonl";

  std::vector<CampaignRecord> previous;
  std::set<std::uint64_t> done;
  if (a.resume) {
    done = completed_runs(csv_path, previous);
    trim_jsonl(jsonl_path, done);
  }
  const bool fresh = done.empty();
  std::ofstream csv(csv_path, std::ios::binary | (fresh ? std::ios::trunc : std::ios::app));
  std::ofstream jsonl(jsonl_path, std::ios::binary | (fresh ? std::ios::trunc : std::ios::app));
  if (!csv || !jsonl) throw Exit{kExitInput, "cannot write records in " + dir.string()};
  if (fresh) csv << kCampaignCsvHeader << "\n";

  StatsAccumulator acc;
  for (const auto& r : previous) acc.add(r);
  std::uint64_t seen = previous.size();
  const std::uint64_t total = cfg.total_runs();
  run_campaign(
      cfg,
      [&](const CampaignRecord& r) {
        csv << to_csv_row(r) << "\n";
        jsonl << json_of(r).dump() << "\n";
        csv.flush();
        jsonl.flush();
        acc.add(r);
        ++seen;
        if (glob.verbosity > 0) std::cerr << "\r" << seen << "/" << total << std::flush;
      },
      done);
  if (glob.verbosity > 0) std::cerr << "\n";

  const CampaignStats stats = acc.result();
  Json stats_json = json_of(stats);
  stats_json["config"] = json_of(cfg);
  stats_json["weighted_fit_zero_bins"] = "excluded";
  write_json((dir / "stats.json").string(), stats_json);

  Json fits = Json::array();
  for (const auto& [key, pair] : fit_cells(stats)) {
    const auto [d, n] = key;
    fits.push_back({{"d", d}, {"n", n}, {"unweighted", json_of(pair.first)}, {"weighted", json_of(pair.second)}});
    std::ostringstream plot;
    plot << "x,observed,fitted,fitted_weighted\n";
    for (const auto& cell : stats.cells) {
      if (cell.d != d || cell.n != n) continue;
      for (const auto& [k, f] : cell.k_distribution())
        plot << k << "," << Json(f).dump() << "," << Json(gaussian_density(k, pair.first.mu, pair.first.sigma)).dump()
             << "," << Json(gaussian_density(k, pair.second.mu, pair.second.sigma)).dump() << "\n";
    }
    write_text((dir / ("kernel_fit_d" + std::to_string(d) + "_n" + std::to_string(n) + ".csv")).string(), plot.str());
  }
  std::set<int> ds;
  for (const auto& cell : stats.cells) ds.insert(cell.d);
  Json reducibility = Json::array();
  for (int d : ds) {
    const auto fit = fit_reducibility(stats, d);
    if (!fit) continue;
    reducibility.push_back({{"d", d}, {"fit", json_of(*fit)}});
    std::ostringstream plot;
    plot << "x,observed,fitted\n";
    for (const auto& cell : stats.cells) {
      if (cell.d != d || cell.n < 2 || cell.irreducible + cell.reducible == 0) continue;
      plot << cell.n << "," << Json(cell.p_n()).dump() << "," << Json(fit->a * std::exp(-fit->r * cell.n)).dump()
           << "\n";
    }
    write_text((dir / ("reducibility_fit_d" + std::to_string(d) + ".csv")).string(), plot.str());
  }
  write_json((dir / "fits.json").string(), {{"kernel", std::move(fits)}, {"reducibility", std::move(reducibility)}});

  const auto& t = stats.totals;
  std::cerr << "runs: " << t.total << "  discarded: " << t.discarded << "  irreducible: " << t.irreducible
            << "  reducible: " << t.reducible << "  free extreme: " << t.free_extreme
            << "  non-Arveson: " << t.non_arveson << "\n";
  if (!t.count_theorem_violations.empty())
    std::cerr << "count theorem violations: " << t.count_theorem_violations.size() << "\n";
  if (t.total > 0 && t.total == t.discarded) throw Exit{kExitNumerical, "no run produced a clean classification"};
}

int report(int code, const std::string& message) {
  std::cerr << "freespec: " << message << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free spectrahedra toolkit: optimize, classify, dilate and run campaigns."};
  app.require_subcommand(1);
  app.fallthrough();
  Globals glob;
  app.add_option("--seed", glob.seed, "Random seed")->envname("FREESPEC_SEED");
  app.add_flag("-v,--verbose", glob.verbosity, "More output");
  for (int i = 0; i < 8; ++i)
    app.add_option(std::string("--tol-") + kTolNames[i], glob.tol[i], "Zero-decision tolerance override")
        ->check(CLI::PositiveNumber);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a random bounded irreducible pencil");
  gen_cmd->add_option("--g", gen.g)->check(CLI::Range(1, 64));
  gen_cmd->add_option("--d", gen.d)->check(CLI::Range(1, 256));
  gen_cmd->add_option("--entry-bound", gen.entry_bound)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--scale-divisor", gen.scale_divisor)->check(CLI::PositiveNumber);
  gen_cmd->add_option("-o,--out", gen.out, "Output file (stdout if omitted)");

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("check", "Report irreducibility and boundedness, and membership of a point");
  check_cmd->add_option("--pencil", check.pencil, "Pencil file, or disc / simplex")->required();
  check_cmd->add_option("--point", check.point, "Tuple file");
  check_cmd->add_option("-o,--out", check.out);

  OptimizeArgs opt;
  auto* opt_cmd = app.add_subcommand("optimize", "Minimize a linear functional and classify the optimizer");
  opt_cmd->add_option("--pencil", opt.pencil, "Pencil file, or disc / simplex")->required();
  opt_cmd->add_option("--functional", opt.functional, "Functional file; random from --seed if omitted");
  opt_cmd->add_option("--n", opt.n, "Level for a random functional")->check(CLI::Range(1, 64));
  opt_cmd->add_option("--kind", opt.kind, "Random functional kind")->check(CLI::IsMember({"rc", "rpt"}));
  opt_cmd->add_option("-o,--out", opt.out);

  ClassifyArgs cls;
  auto* cls_cmd = app.add_subcommand("classify", "Classify a point of the spectrahedron");
  cls_cmd->add_option("--pencil", cls.pencil)->required();
  cls_cmd->add_option("--point", cls.point)->required();
  cls_cmd->add_option("-o,--out", cls.out);

  DilateArgs dil;
  auto* dil_cmd = app.add_subcommand("dilate", "Decompose a point into free extreme points");
  dil_cmd->add_option("--pencil", dil.pencil)->required();
  dil_cmd->add_option("--point", dil.point)->required();
  dil_cmd->add_option("-o,--out", dil.out, "Certificate file");

  VerifyArgs ver;
  auto* ver_cmd = app.add_subcommand("verify", "Recheck a dilation certificate");
  ver_cmd->add_option("--pencil", ver.pencil)->required();
  ver_cmd->add_option("--certificate", ver.certificate)->required();
  ver_cmd->add_option("-o,--out", ver.out);

  SolveArgs slv;
  auto* slv_cmd = app.add_subcommand("solve", "Solve a serialized LMI program");
  slv_cmd->add_option("--program", slv.program)->required();
  slv_cmd->add_option("-o,--out", slv.out);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a Gaussian to a kernel histogram or an exponential to a series");
  fit_cmd->add_option("--model", fit.model)->check(CLI::IsMember({"gaussian", "gaussian_weighted", "exponential"}));
  fit_cmd->add_option("--input", fit.input)->required();
  fit_cmd->add_option("--plot", fit.plot, "CSV of x, observed, fitted");
  fit_cmd->add_option("-o,--out", fit.out);

  CampaignArgs camp;
  auto* camp_cmd = app.add_subcommand("campaign", "Run a randomized optimization campaign");
  camp_cmd->add_option("--config", camp.config)->required();
  camp_cmd->add_option("--out-dir", camp.out_dir)->required();
  camp_cmd->add_option("--threads", camp.threads)->check(CLI::Range(1, 1024));
  camp_cmd->add_flag("--resume", camp.resume, "Skip runs already in records.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  // A seed from the command line or the environment overrides the config file.
  camp.seed_given = app.get_option("--seed")->count() > 0 || std::getenv("FREESPEC_SEED") != nullptr;

  try {
    if (*gen_cmd) cmd_gen(gen, glob);
    if (*check_cmd) cmd_check(check, glob);
    if (*opt_cmd) cmd_optimize(opt, glob);
    if (*cls_cmd) cmd_classify(cls, glob);
    if (*dil_cmd) cmd_dilate(dil, glob);
    if (*ver_cmd) cmd_verify(ver, glob);
    if (*slv_cmd) cmd_solve(slv, glob);
    if (*fit_cmd) cmd_fit(fit, glob);
    if (*camp_cmd) cmd_campaign(camp, glob);
  } catch (const Exit& e) {
    return report(e.code, e.message);
  } catch (const ArgumentError& e) {
    return report(kExitInput, e.what());
  } catch (const GenerationFailure& e) {
    return report(kExitInput, e.what());
  } catch (const FitDegenerate& e) {
    return report(kExitInput, e.what());
  } catch (const nlohmann::json::exception& e) {
    return report(kExitInput, e.what());
  } catch (const Error& e) {
    return report(kExitNumerical, e.what());
  }
  return 0;
}
