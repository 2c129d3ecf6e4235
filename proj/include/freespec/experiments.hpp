#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "freespec/extremality.hpp"
#include "freespec/fits.hpp"
#include "freespec/pencil.hpp"
#include "freespec/solver.hpp"

namespace freespec {

enum class CampaignMode { pairs, fixed_a };

/// What to do when the optimization of a run does not return optimal.
enum class FailedSolvePolicy { drop, retry };

const char* to_string(CampaignMode m);
const char* to_string(FunctionalKind k);

struct CampaignConfig {
  CampaignMode mode = CampaignMode::pairs;
  int g = 2;
  std::vector<int> dims{3};
  int level_min = 1;
  int level_max = 1;
  FunctionalKind kind = FunctionalKind::rc;
  /// Runs per (d, n) cell.
  int runs = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  /// fixed_a only: use this pencil instead of generating one per d.
  std::optional<LinearPencil> pencil;
  FailedSolvePolicy failed_solve = FailedSolvePolicy::drop;
  /// Fresh functionals tried under FailedSolvePolicy::retry.
  int solve_retries = 3;
  /// Wall time makes records nondeterministic, so it is off by default.
  bool record_timing = false;
  PencilGenConfig pencil_gen;
  FunctionalGenConfig functional_gen;
  SolverOptions solver;
  ClassifyPolicies policies;

  /// Throws ArgumentError.
  void validate() const;
  /// (d, n) cells in run order.
  std::vector<std::pair<int, int>> cells() const;
  std::uint64_t total_runs() const;
};

struct CampaignRecord {
  std::uint64_t run_id = 0;
  int g = 0;
  int d = 0;
  int n = 0;
  FunctionalKind kind = FunctionalKind::rc;
  Verdict verdict = Verdict::ill_conditioned;
  int k = 0;
  int commutant_dim = 0;
  int arveson_nullity = 0;
  std::optional<int> euclidean_nullity;
  SolveStatus status = SolveStatus::ill_conditioned;
  double value = 0.0;
  std::optional<double> wall_ms;
  /// Why the run was discarded, if it was.
  std::string note;

  bool discarded() const { return verdict == Verdict::ill_conditioned; }
  bool irreducible() const { return commutant_dim == 1; }
};

inline constexpr const char* kCampaignCsvHeader = "run_id,g,d,n,kind,verdict,k,commutant_dim,status,value,wall_ms";

/// One CSV row without a trailing newline. Doubles use the shortest form that
/// round-trips.
std::string to_csv_row(const CampaignRecord& r);
CampaignRecord parse_csv_row(const std::string& line);

/// Runs a single campaign run in isolation; deterministic in (cfg, run_id).
CampaignRecord run_one(const CampaignConfig& cfg, std::uint64_t run_id);

using RecordSink = std::function<void(const CampaignRecord&)>;

/// Runs every cell and passes records to sink in run_id order regardless of
/// thread scheduling. Runs listed in completed are skipped.
void run_campaign(const CampaignConfig& cfg, const RecordSink& sink, const std::set<std::uint64_t>& completed = {});

std::vector<CampaignRecord> run_campaign(const CampaignConfig& cfg);

struct KernelBoundViolation {
  std::uint64_t run_id = 0;
  int n = 0;
  int k = 0;
};

struct CellStats {
  int g = 0;
  int d = 0;
  int n = 0;
  std::uint64_t total = 0;
  std::uint64_t discarded = 0;
  std::uint64_t irreducible = 0;
  std::uint64_t reducible = 0;
  std::map<Verdict, std::uint64_t> verdicts;
  /// Irreducible records by verdict.
  std::uint64_t free_extreme = 0;
  std::uint64_t non_arveson = 0;
  std::uint64_t not_euclidean = 0;
  /// Kernel dimensions of irreducible clean records.
  std::map<int, std::uint64_t> k_histogram;
  /// Irreducible clean records with k > 2n.
  std::vector<KernelBoundViolation> upper_bound_violations;
  /// Irreducible clean records with k < gn/d.
  std::vector<KernelBoundViolation> lower_bound_violations;
  /// Records breaking a count theorem; these indicate a bug.
  std::vector<std::uint64_t> count_theorem_violations;

  /// Reducible share of clean records.
  double p_n() const;
  double discard_rate() const;
  /// free_extreme / (free_extreme + non_arveson).
  double free_extreme_ratio() const;
  double non_arveson_ratio() const;
  /// k histogram normalized to frequencies.
  std::map<int, double> k_distribution() const;
};

struct CampaignStats {
  std::vector<CellStats> cells;
  CellStats totals;
};

/// Streaming tally. Memory grows with the number of cells and violations,
/// not with the number of records.
class StatsAccumulator {
 public:
  void add(const CampaignRecord& r);
  CampaignStats result() const;

 private:
  std::map<std::tuple<int, int, int>, CellStats> cells_;
  CellStats totals_;
};

CampaignStats tally(std::span<const CampaignRecord> records);

/// Gaussian fits (both weights) for each cell whose histogram has two or more
/// bins; keyed by (d, n).
std::map<std::pair<int, int>, std::pair<FitResult, FitResult>> fit_cells(const CampaignStats& stats);

/// Exponential fit of p_n over the n >= 2 cells of one (g, d), if at least
/// three such cells exist.
std::optional<FitResult> fit_reducibility(const CampaignStats& stats, int d);

}  // namespace freespec
