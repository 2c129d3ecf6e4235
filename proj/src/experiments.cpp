#include "freespec/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include "freespec/errors.hpp"

namespace freespec {

const char* to_string(CampaignMode m) { return m == CampaignMode::pairs ? "pairs" : "fixed_a"; }

const char* to_string(FunctionalKind k) { return k == FunctionalKind::rc ? "rc" : "rpt"; }

void CampaignConfig::validate() const {
  if (runs < 1) throw ArgumentError("campaign: runs must be at least 1");
  if (level_min < 1 || level_max < level_min) throw ArgumentError("campaign: invalid level range");
  if (threads < 1) throw ArgumentError("campaign: threads must be at least 1");
  if (solve_retries < 0) throw ArgumentError("campaign: solve_retries must be nonnegative");
  if (pencil) {
    if (mode != CampaignMode::fixed_a) throw ArgumentError("campaign: an explicit pencil needs fixed_a mode");
    if (pencil->g() != g) throw ArgumentError("campaign: pencil g does not match config g");
  } else {
    if (g < 1) throw ArgumentError("campaign: g must be at least 1");
    if (dims.empty()) throw ArgumentError("campaign: no d values");
    for (int d : dims)
      if (d < 1) throw ArgumentError("campaign: d values must be at least 1");
  }
}

std::vector<std::pair<int, int>> CampaignConfig::cells() const {
  std::vector<std::pair<int, int>> out;
  const std::vector<int> ds = pencil ? std::vector<int>{pencil->d()} : dims;
  for (int d : ds)
    for (int n = level_min; n <= level_max; ++n) out.emplace_back(d, n);
  return out;
}

std::uint64_t CampaignConfig::total_runs() const {
  return static_cast<std::uint64_t>(cells().size()) * static_cast<std::uint64_t>(runs);
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ArgumentError("csv: bad number '" + s + "'");
  return v;
}

template <typename Int>
Int parse_int(const std::string& s) {
  Int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ArgumentError("csv: bad integer '" + s + "'");
  return v;
}

std::uint64_t cell_key(int d, int n) { return (static_cast<std::uint64_t>(d) << 20) | static_cast<std::uint64_t>(n); }

LinearPencil fixed_pencil(const CampaignConfig& cfg, int d) {
  if (cfg.pencil) return *cfg.pencil;
  PencilGenConfig gen = cfg.pencil_gen;
  gen.g = cfg.g;
  gen.d = d;
  gen.seed = derive_seed(cfg.seed, 0xF1ED, static_cast<std::uint64_t>(d));
  return random_pencil(gen);
}

CampaignRecord execute(const CampaignConfig& cfg, std::uint64_t run_id, const LinearPencil* shared) {
  const auto cells = cfg.cells();
  const std::uint64_t runs = static_cast<std::uint64_t>(cfg.runs);
  if (run_id >= runs * cells.size()) throw ArgumentError("campaign: run_id out of range");
  const auto [d, n] = cells[static_cast<std::size_t>(run_id / runs)];
  const std::uint64_t index = run_id % runs;
  const std::uint64_t run_seed = derive_seed(cfg.seed, cell_key(d, n), index);

  CampaignRecord rec;
  rec.run_id = run_id;
  rec.g = cfg.g;
  rec.d = d;
  rec.n = n;
  rec.kind = cfg.kind;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    LinearPencil generated;
    const LinearPencil* p = shared;
    if (!p) {
      PencilGenConfig gen = cfg.pencil_gen;
      gen.g = cfg.g;
      gen.d = d;
      gen.seed = derive_seed(run_seed, 1);
      generated = random_pencil(gen);
      p = &generated;
    }
    const int attempts = cfg.failed_solve == FailedSolvePolicy::retry ? cfg.solve_retries + 1 : 1;
    std::optional<FunctionalMinimum> found;
    for (int attempt = 0; attempt < attempts; ++attempt) {
      const LinearFunctional l =
          random_functional(cfg.kind, *p, n, derive_seed(run_seed, 2, static_cast<std::uint64_t>(attempt)),
                            cfg.functional_gen);
      FunctionalMinimum m = minimize_functional(*p, l, cfg.solver);
      rec.status = m.result.status;
      rec.value = m.result.primal_objective;
      if (m.result.status == SolveStatus::optimal) {
        found = std::move(m);
        break;
      }
      rec.note = std::string("solve ended ") + to_string(m.result.status);
    }
    if (found) {
      rec.note.clear();
      const ExtremeClassification c = classify(*p, found->optimizer, cfg.policies);
      rec.verdict = c.verdict;
      rec.k = c.kernel.dimension;
      rec.commutant_dim = c.commutant_dim;
      rec.arveson_nullity = c.arveson_nullity;
      rec.euclidean_nullity = c.euclidean_nullity;
      if (c.verdict == Verdict::ill_conditioned) {
        rec.note = c.kernel_ill      ? "kernel decision ill-conditioned"
                   : c.commutant_ill ? "commutant decision ill-conditioned"
                   : c.arveson_ill   ? "Arveson decision ill-conditioned"
                                     : "Euclidean decision ill-conditioned";
      }
    }
  } catch (const Error& e) {
    rec.verdict = Verdict::ill_conditioned;
    rec.note = e.what();
  }
  if (cfg.record_timing)
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace

std::string to_csv_row(const CampaignRecord& r) {
  std::string out;
  out += std::to_string(r.run_id);
  out += ',' + std::to_string(r.g);
  out += ',' + std::to_string(r.d);
  out += ',' + std::to_string(r.n);
  out += ',';
  out += to_string(r.kind);
  out += ',';
  out += to_string(r.verdict);
  out += ',' + std::to_string(r.k);
  out += ',' + std::to_string(r.commutant_dim);
  out += ',';
  out += to_string(r.status);
  out += ',' + format_double(r.value);
  out += ',';
  if (r.wall_ms) out += format_double(*r.wall_ms);
  return out;
}

CampaignRecord parse_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  if (fields.size() != 11) throw ArgumentError("csv: expected 11 fields, got " + std::to_string(fields.size()));

  CampaignRecord r;
  r.run_id = parse_int<std::uint64_t>(fields[0]);
  r.g = parse_int<int>(fields[1]);
  r.d = parse_int<int>(fields[2]);
  r.n = parse_int<int>(fields[3]);
  if (fields[4] == "rc")
    r.kind = FunctionalKind::rc;
  else if (fields[4] == "rpt")
    r.kind = FunctionalKind::rpt;
  else
    throw ArgumentError("csv: unknown functional kind '" + fields[4] + "'");
  const auto v = verdict_from_string(fields[5]);
  if (!v) throw ArgumentError("csv: unknown verdict '" + fields[5] + "'");
  r.verdict = *v;
  r.k = parse_int<int>(fields[6]);
  r.commutant_dim = parse_int<int>(fields[7]);
  bool known = false;
  for (SolveStatus s : {SolveStatus::optimal, SolveStatus::unbounded, SolveStatus::infeasible,
                        SolveStatus::ill_conditioned}) {
    if (fields[8] == to_string(s)) {
      r.status = s;
      known = true;
    }
  }
  if (!known) throw ArgumentError("csv: unknown status '" + fields[8] + "'");
  r.value = parse_double(fields[9]);
  if (!fields[10].empty()) r.wall_ms = parse_double(fields[10]);
  return r;
}

CampaignRecord run_one(const CampaignConfig& cfg, std::uint64_t run_id) {
  cfg.validate();
  if (cfg.mode == CampaignMode::fixed_a) {
    const auto cells = cfg.cells();
    const int d = cells[static_cast<std::size_t>(run_id / static_cast<std::uint64_t>(cfg.runs) % cells.size())].first;
    const LinearPencil p = fixed_pencil(cfg, d);
    return execute(cfg, run_id, &p);
  }
  return execute(cfg, run_id, nullptr);
}

void run_campaign(const CampaignConfig& cfg, const RecordSink& sink, const std::set<std::uint64_t>& completed) {
  cfg.validate();
  std::map<int, LinearPencil> pencils;
  if (cfg.mode == CampaignMode::fixed_a) {
    for (const auto& [d, n] : cfg.cells()) {
      if (pencils.count(d)) continue;
      LinearPencil p = fixed_pencil(cfg, d);
      if (cfg.pencil && !is_bounded(p)) throw ArgumentError("campaign: the given pencil is not bounded");
      pencils.emplace(d, std::move(p));
    }
  }
  const auto cells = cfg.cells();
  const std::uint64_t runs = static_cast<std::uint64_t>(cfg.runs);
  auto shared_for = [&](std::uint64_t id) -> const LinearPencil* {
    if (cfg.mode != CampaignMode::fixed_a) return nullptr;
    return &pencils.at(cells[static_cast<std::size_t>(id / runs)].first);
  };

  std::vector<std::uint64_t> todo;
  for (std::uint64_t id = 0; id < cfg.total_runs(); ++id)
    if (!completed.count(id)) todo.push_back(id);

  const std::size_t workers = static_cast<std::size_t>(cfg.threads);
  const std::size_t batch = std::max<std::size_t>(1, workers * 16);
  std::vector<CampaignRecord> out;
  for (std::size_t start = 0; start < todo.size(); start += batch) {
    const std::size_t len = std::min(batch, todo.size() - start);
    out.assign(len, CampaignRecord{});
    if (workers <= 1) {
      for (std::size_t i = 0; i < len; ++i) out[i] = execute(cfg, todo[start + i], shared_for(todo[start + i]));
    } else {
      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::mutex failure_mutex;
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < std::min(workers, len); ++w) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < len; i = next++) {
            try {
              out[i] = execute(cfg, todo[start + i], shared_for(todo[start + i]));
            } catch (...) {
              std::lock_guard<std::mutex> lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      }
      for (auto& t : pool) t.join();
      if (failure) std::rethrow_exception(failure);
    }
    for (const auto& r : out) sink(r);
  }
}

std::vector<CampaignRecord> run_campaign(const CampaignConfig& cfg) {
  std::vector<CampaignRecord> out;
  run_campaign(cfg, [&](const CampaignRecord& r) { out.push_back(r); });
  return out;
}

double CellStats::p_n() const {
  const std::uint64_t clean = irreducible + reducible;
  return clean == 0 ? 0.0 : static_cast<double>(reducible) / static_cast<double>(clean);
}

double CellStats::discard_rate() const {
  return total == 0 ? 0.0 : static_cast<double>(discarded) / static_cast<double>(total);
}

double CellStats::free_extreme_ratio() const {
  const std::uint64_t extreme = free_extreme + non_arveson;
  return extreme == 0 ? 0.0 : static_cast<double>(free_extreme) / static_cast<double>(extreme);
}

double CellStats::non_arveson_ratio() const {
  const std::uint64_t extreme = free_extreme + non_arveson;
  return extreme == 0 ? 0.0 : static_cast<double>(non_arveson) / static_cast<double>(extreme);
}

std::map<int, double> CellStats::k_distribution() const {
  std::uint64_t sum = 0;
  for (const auto& [k, c] : k_histogram) sum += c;
  std::map<int, double> out;
  if (sum == 0) return out;
  for (const auto& [k, c] : k_histogram) out[k] = static_cast<double>(c) / static_cast<double>(sum);
  return out;
}

namespace {

void accumulate(CellStats& s, const CampaignRecord& r) {
  ++s.total;
  ++s.verdicts[r.verdict];
  if (r.discarded()) {
    ++s.discarded;
    return;
  }
  const int single_d[] = {r.d};
  const int single_k[] = {r.k};
  const bool arveson = r.verdict == Verdict::free_extreme || r.verdict == Verdict::arveson_reducible;
  const bool euclidean = arveson || r.verdict == Verdict::euclidean_not_arveson;
  if ((arveson && !arveson_count_holds(r.g, r.n, single_d, single_k)) ||
      (euclidean && !euclidean_count_holds(r.g, r.n, single_d, single_k)))
    s.count_theorem_violations.push_back(r.run_id);

  if (!r.irreducible()) {
    ++s.reducible;
    return;
  }
  ++s.irreducible;
  if (r.verdict == Verdict::free_extreme) ++s.free_extreme;
  if (r.verdict == Verdict::euclidean_not_arveson) ++s.non_arveson;
  if (r.verdict == Verdict::not_euclidean_extreme) ++s.not_euclidean;
  ++s.k_histogram[r.k];
  if (r.k > 2 * r.n) s.upper_bound_violations.push_back({r.run_id, r.n, r.k});
  if (r.d * r.k < r.g * r.n) s.lower_bound_violations.push_back({r.run_id, r.n, r.k});
}

}  // namespace

void StatsAccumulator::add(const CampaignRecord& r) {
  auto [it, inserted] = cells_.try_emplace(std::make_tuple(r.g, r.d, r.n));
  if (inserted) {
    it->second.g = r.g;
    it->second.d = r.d;
    it->second.n = r.n;
  }
  accumulate(it->second, r);
  accumulate(totals_, r);
}

CampaignStats StatsAccumulator::result() const {
  CampaignStats out;
  for (const auto& [key, cell] : cells_) out.cells.push_back(cell);
  out.totals = totals_;
  return out;
}

CampaignStats tally(std::span<const CampaignRecord> records) {
  StatsAccumulator acc;
  for (const auto& r : records) acc.add(r);
  return acc.result();
}

std::map<std::pair<int, int>, std::pair<FitResult, FitResult>> fit_cells(const CampaignStats& stats) {
  std::map<std::pair<int, int>, std::pair<FitResult, FitResult>> out;
  for (const auto& cell : stats.cells) {
    if (cell.k_histogram.size() < 2) continue;
    const auto dist = cell.k_distribution();
    try {
      out.emplace(std::make_pair(cell.d, cell.n), std::make_pair(fit_gaussian(dist, false), fit_gaussian(dist, true)));
    } catch (const FitDegenerate&) {
    }
  }
  return out;
}

std::optional<FitResult> fit_reducibility(const CampaignStats& stats, int d) {
  std::vector<double> ns;
  std::vector<double> ps;
  for (const auto& cell : stats.cells) {
    if (cell.d != d || cell.n < 2 || cell.irreducible + cell.reducible == 0) continue;
    ns.push_back(cell.n);
    ps.push_back(cell.p_n());
  }
  if (ns.size() < 3) return std::nullopt;
  return fit_exponential(ns, ps);
}

}  // namespace freespec
