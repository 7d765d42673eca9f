// Copyright 2026 The qhdlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qhdlab/bench.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>
#include <tuple>

#include "qhdlab/errors.hpp"
#include "qhdlab/instance.hpp"
#include "qhdlab/random.hpp"
#include "qhdlab/solvers.hpp"

namespace qhdlab {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

std::optional<std::int64_t> repetitions(double p, double p0) {
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("repetitions: p0 must lie in (0, 1)");
  if (std::isnan(p)) throw std::invalid_argument("repetitions: p is NaN");
  if (p >= 1.0) return 1;
  if (p <= 0.0) return std::nullopt;
  const double ratio = std::log1p(-p0) / std::log1p(-p);
  // An exact integer ratio (p == p0 and the like) must not round up past itself.
  const double nearest = std::round(ratio);
  const double r = std::abs(ratio - nearest) <= 1e-12 * nearest ? nearest : std::ceil(ratio);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(r));
}

Interval wilson_interval(std::int64_t successes, std::int64_t runs, double z) {
  if (runs < 1 || successes < 0 || successes > runs) throw std::invalid_argument("wilson_interval: bad counts");
  const double n = static_cast<double>(runs);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

nlohmann::json to_json(const RunRow& row) {
  nlohmann::ordered_json j{{"kind", row.kind},
                           {"theta", row.theta},
                           {"d", row.d},
                           {"run_index", row.run_index},
                           {"instance_seed", row.instance_seed},
                           {"run_seed", row.run_seed},
                           {"success", row.success},
                           {"runtime_s", row.runtime_s},
                           {"best_value", row.best_value}};
  if (row.unit != "s") j["unit"] = row.unit;
  if (!row.error.empty()) j["error"] = row.error;
  return j;
}

RunRow run_row_from_json(const nlohmann::json& j) {
  RunRow row;
  row.kind = j.at("kind").get<std::string>();
  row.theta = j.at("theta").get<double>();
  row.d = j.at("d").get<int>();
  row.run_index = j.value("run_index", std::int64_t{0});
  row.instance_seed = j.value("instance_seed", std::uint64_t{0});
  row.run_seed = j.value("run_seed", std::uint64_t{0});
  row.success = j.at("success").get<bool>();
  row.runtime_s = j.at("runtime_s").get<double>();
  const auto& bv = j.contains("best_value") ? j.at("best_value") : nlohmann::json();
  row.best_value = bv.is_number() ? bv.get<double>() : kNaN;
  row.unit = j.value("unit", std::string("s"));
  row.error = j.value("error", std::string());
  return row;
}

BenchRecord aggregate_cell(std::span<const RunRow> rows, double p0) {
  if (rows.empty()) throw std::invalid_argument("aggregate_cell: no rows");
  std::vector<const RunRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const RunRow* a, const RunRow* b) { return a->run_index < b->run_index; });

  BenchRecord rec;
  rec.kind = sorted.front()->kind;
  rec.theta = sorted.front()->theta;
  rec.d = sorted.front()->d;
  rec.unit = sorted.front()->unit;
  double total_time = 0.0;
  for (const RunRow* r : sorted) {
    if (r->kind != rec.kind || r->theta != rec.theta || r->d != rec.d)
      throw std::invalid_argument("aggregate_cell: rows from different cells");
    if (r->unit != rec.unit) throw std::invalid_argument("aggregate_cell: mixed time units in one cell");
    ++rec.runs;
    if (r->success) ++rec.successes;
    total_time += r->runtime_s;
  }
  rec.p_hat = static_cast<double>(rec.successes) / static_cast<double>(rec.runs);
  rec.t_hat = total_time / static_cast<double>(rec.runs);
  rec.reliable = rec.successes >= kMinReliableSuccesses;
  if (!rec.reliable) {
    rec.tts = rec.ci_low = rec.ci_high = kNaN;
    return rec;
  }
  rec.tts = static_cast<double>(*repetitions(rec.p_hat, p0)) * rec.t_hat;
  const Interval ci = wilson_interval(rec.successes, rec.runs);
  // R is nonincreasing in p, so the upper end of p bounds tts from below.
  rec.ci_low = static_cast<double>(*repetitions(ci.high, p0)) * rec.t_hat;
  const auto r_high = repetitions(ci.low, p0);
  rec.ci_high = r_high ? static_cast<double>(*r_high) * rec.t_hat : std::numeric_limits<double>::infinity();
  return rec;
}

std::vector<BenchRecord> aggregate_log(std::span<const RunRow> rows, double p0) {
  std::map<std::tuple<std::string, double, int>, std::vector<RunRow>> groups;
  for (const auto& r : rows) groups[{r.kind, r.theta, r.d}].push_back(r);
  std::vector<BenchRecord> table;
  for (const auto& [key, group] : groups) table.push_back(aggregate_cell(group, p0));
  return table;
}

std::uint64_t instance_seed_for(std::uint64_t master_seed, int d, std::int64_t run) {
  return derive_seed(master_seed, {stable_hash("instance"), static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(run)});
}

std::uint64_t run_seed_for(std::uint64_t master_seed, const std::string& kind, double theta, int d, std::int64_t run) {
  return derive_seed(master_seed, {stable_hash(kind.c_str()), std::bit_cast<std::uint64_t>(theta),
                                   static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(run)});
}

namespace {

SolverConfig config_for(const std::string& kind, double theta, std::uint64_t seed, const nlohmann::json& overrides) {
  nlohmann::json j = overrides.is_object() && overrides.contains(kind) ? overrides.at(kind) : nlohmann::json::object();
  j["kind"] = kind;
  j["theta"] = theta;
  j["seed"] = seed;
  SolverConfig cfg;
  from_json(j, cfg);
  return cfg;
}

}  // namespace

RunFn solver_run_fn(const nlohmann::json& overrides, double synthetic_runtime_s) {
  return [overrides, synthetic_runtime_s](const std::string& kind, double theta, int d, std::uint64_t instance_seed,
                                          std::uint64_t run_seed) {
    if (kind == kCoinFlipKind) {
      Rng rng(run_seed);
      std::bernoulli_distribution coin(theta);
      const bool success = coin(rng);
      return TrialOutcome{success, synthetic_runtime_s, success ? 0.0 : 1.0};
    }
    const SolverConfig cfg = config_for(kind, theta, run_seed, overrides);
    const Instance inst = make_instance(d, instance_seed);
    const SolveResult r = solve(inst, cfg);
    return TrialOutcome{r.success, r.runtime_seconds, r.best_value};
  };
}

namespace {

RunRow execute_run(const RunFn& run, const std::string& kind, double theta, int d, std::int64_t index,
                   std::uint64_t master_seed) {
  RunRow row;
  row.kind = kind;
  row.theta = theta;
  row.d = d;
  row.run_index = index;
  row.instance_seed = instance_seed_for(master_seed, d, index);
  row.run_seed = run_seed_for(master_seed, kind, theta, d, index);
  try {
    const TrialOutcome out = run(kind, theta, d, row.instance_seed, row.run_seed);
    row.success = out.success;
    row.runtime_s = out.runtime_s;
    row.best_value = out.best_value;
  } catch (const std::exception& e) {
    row.success = false;
    row.best_value = kNaN;
    row.error = e.what();
    warn(fmt::format("{} theta={} d={} run {} failed: {}", kind, theta, d, index, e.what()));
  }
  return row;
}

}  // namespace

BenchRecord estimate_cell(const std::string& kind, double theta, int d, std::int64_t n_runs,
                          std::uint64_t master_seed, double p0, const RunFn& run) {
  if (n_runs < 1) throw std::invalid_argument("estimate_cell: n_runs must be >= 1");
  std::vector<RunRow> rows;
  rows.reserve(static_cast<std::size_t>(n_runs));
  for (std::int64_t i = 0; i < n_runs; ++i) rows.push_back(execute_run(run, kind, theta, d, i, master_seed));
  return aggregate_cell(rows, p0);
}

std::vector<double> default_thetas(const std::string& kind) {
  auto powers = [](int lo, int hi) {
    std::vector<double> v;
    for (int e = lo; e <= hi; ++e) v.push_back(std::ldexp(1.0, e));
    return v;
  };
  if (kind == "sgd_const") return powers(-5, 3);
  if (kind == "sgd_qhd") return powers(1, 9);
  if (kind == "basin_hopping") return powers(3, 11);
  if (kind == "dual_annealing") return powers(6, 14);
  throw std::invalid_argument(fmt::format("default_thetas: no documented range for '{}'", kind));
}

SweepConfig sweep_config_from_json(const nlohmann::json& j) {
  SweepConfig cfg;
  for (const auto& s : j.at("solvers")) {
    SolverSweep sweep;
    sweep.kind = s.at("kind").get<std::string>();
    if (s.contains("thetas")) {
      sweep.thetas = s.at("thetas").get<std::vector<double>>();
    } else if (s.contains("theta_exponents")) {
      const auto& e = s.at("theta_exponents");
      const double base = e.value("base", 2.0);
      for (int k = e.at("min").get<int>(); k <= e.at("max").get<int>(); ++k) sweep.thetas.push_back(std::pow(base, k));
    } else {
      sweep.thetas = default_thetas(sweep.kind);
    }
    if (sweep.thetas.empty()) throw std::invalid_argument(fmt::format("sweep config: no thetas for {}", sweep.kind));
    sweep.overrides = s.value("config", nlohmann::json::object());
    cfg.solvers.push_back(std::move(sweep));
  }
  cfg.dims = j.at("dims").get<std::vector<int>>();
  for (int d : cfg.dims)
    if (d < 1) throw std::invalid_argument("sweep config: dims must be positive");
  cfg.n_runs = j.value("n_runs", cfg.n_runs);
  if (cfg.n_runs < 1) throw std::invalid_argument("sweep config: n_runs must be >= 1");
  cfg.p0 = j.value("p0", cfg.p0);
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  cfg.synthetic_runtime_s = j.value("synthetic_runtime_s", cfg.synthetic_runtime_s);
  return cfg;
}

nlohmann::json to_json(const SweepConfig& cfg) {
  nlohmann::ordered_json j;
  j["solvers"] = nlohmann::json::array();
  for (const auto& s : cfg.solvers) j["solvers"].push_back({{"kind", s.kind}, {"thetas", s.thetas}, {"config", s.overrides}});
  j["dims"] = cfg.dims;
  j["n_runs"] = cfg.n_runs;
  j["p0"] = cfg.p0;
  j["master_seed"] = cfg.master_seed;
  j["synthetic_runtime_s"] = cfg.synthetic_runtime_s;
  return j;
}

namespace {
std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RunLog::RunLog(std::filesystem::path path) : path_(std::move(path)) {}

std::vector<RunRow> load_rows(const std::filesystem::path& path) {
  std::vector<RunRow> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      rows.push_back(run_row_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      warn(fmt::format("{}:{}: skipping unreadable run row ({})", path.string(), lineno, e.what()));
    }
  }
  return rows;
}

std::vector<RunRow> RunLog::load() const {
  std::lock_guard lock(log_mutex());
  return load_rows(path_);
}

void RunLog::append(std::span<const RunRow> rows) {
  std::string text;
  for (const auto& r : rows) text += to_json(r).dump() + '\n';
  std::lock_guard lock(log_mutex());
  // A write torn by a crash leaves no final newline; start on a fresh line.
  {
    std::ifstream tail(path_, std::ios::binary | std::ios::ate);
    if (tail && tail.tellg() > 0) {
      tail.seekg(-1, std::ios::end);
      if (tail.get() != '\n') text.insert(text.begin(), '\n');
    }
  }
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error(fmt::format("cannot append to run log {}", path_.string()));
  out << text;
  out.flush();
}

SweepOutcome run_sweep(const SweepConfig& cfg, RunLog& log, int jobs, const RunFn& run) {
  if (jobs < 1) throw std::invalid_argument("run_sweep: jobs must be >= 1");
  SweepOutcome outcome;

  struct Cell {
    std::string kind;
    double theta;
    int d;
    nlohmann::json overrides;
  };
  std::vector<Cell> cells;
  for (const auto& s : cfg.solvers)
    for (double theta : s.thetas)
      for (int d : cfg.dims) {
        if (s.kind != kCoinFlipKind) {
          try {
            nlohmann::json wrapped = nlohmann::json::object();
            wrapped[s.kind] = s.overrides;
            validate(config_for(s.kind, theta, 0, wrapped));
          } catch (const std::exception& e) {
            outcome.failed_cells.push_back(fmt::format("{} theta={} d={}: {}", s.kind, theta, d, e.what()));
            continue;
          }
        } else if (!(theta >= 0.0 && theta <= 1.0)) {
          outcome.failed_cells.push_back(fmt::format("{} theta={} d={}: theta must be a probability", s.kind, theta, d));
          continue;
        }
        cells.push_back({s.kind, theta, d, s.overrides});
      }

  std::map<std::tuple<std::string, double, int>, std::set<std::int64_t>> done;
  for (const auto& r : log.load())
    if (r.run_index >= 0 && r.run_index < cfg.n_runs) done[{r.kind, r.theta, r.d}].insert(r.run_index);

  struct Chunk {
    std::size_t cell;
    std::vector<std::int64_t> runs;
  };
  constexpr std::size_t kChunk = 64;
  std::vector<Chunk> chunks;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& have = done[{cells[c].kind, cells[c].theta, cells[c].d}];
    outcome.runs_reused += static_cast<std::int64_t>(have.size());
    Chunk chunk{c, {}};
    for (std::int64_t i = 0; i < cfg.n_runs; ++i) {
      if (have.count(i)) continue;
      chunk.runs.push_back(i);
      if (chunk.runs.size() == kChunk) {
        chunks.push_back(std::move(chunk));
        chunk = Chunk{c, {}};
      }
    }
    if (!chunk.runs.empty()) chunks.push_back(std::move(chunk));
  }

  std::vector<RunFn> fns;
  for (const auto& cell : cells) {
    if (run) {
      fns.push_back(run);
    } else {
      nlohmann::json wrapped = nlohmann::json::object();
      wrapped[cell.kind] = cell.overrides;
      fns.push_back(solver_run_fn(wrapped, cfg.synthetic_runtime_s));
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::int64_t> executed{0};
  std::mutex failure_mutex;
  std::set<std::size_t> broken;
  auto worker = [&] {
    for (std::size_t k = next++; k < chunks.size(); k = next++) {
      const Chunk& chunk = chunks[k];
      const Cell& cell = cells[chunk.cell];
      try {
        std::vector<RunRow> rows;
        rows.reserve(chunk.runs.size());
        for (std::int64_t i : chunk.runs)
          rows.push_back(execute_run(fns[chunk.cell], cell.kind, cell.theta, cell.d, i, cfg.master_seed));
        log.append(rows);
        executed += static_cast<std::int64_t>(rows.size());
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (broken.insert(chunk.cell).second)
          warn(fmt::format("{} theta={} d={}: {}", cell.kind, cell.theta, cell.d, e.what()));
      }
    }
  };
  if (jobs == 1 || chunks.size() <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  outcome.runs_executed = executed;

  std::map<std::tuple<std::string, double, int>, std::map<std::int64_t, RunRow>> by_cell;
  for (auto& r : log.load()) {
    if (r.run_index < 0 || r.run_index >= cfg.n_runs) continue;
    by_cell[{r.kind, r.theta, r.d}].try_emplace(r.run_index, std::move(r));
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    const auto it = by_cell.find({cell.kind, cell.theta, cell.d});
    const std::size_t have = it == by_cell.end() ? 0 : it->second.size();
    if (broken.count(c) || have != static_cast<std::size_t>(cfg.n_runs)) {
      outcome.failed_cells.push_back(
          fmt::format("{} theta={} d={}: {} of {} runs logged", cell.kind, cell.theta, cell.d, have, cfg.n_runs));
      continue;
    }
    std::vector<RunRow> rows;
    for (const auto& [idx, row] : it->second) rows.push_back(row);
    outcome.table.push_back(aggregate_cell(rows, cfg.p0));
  }
  return outcome;
}

std::vector<EnvelopePoint> lower_envelope(std::span<const BenchRecord> table, const std::string& kind) {
  std::map<int, EnvelopePoint> best;
  for (const auto& r : table) {
    if (r.kind != kind || !r.reliable) continue;
    auto it = best.find(r.d);
    if (it == best.end() || r.tts < it->second.tts) best[r.d] = EnvelopePoint{r.d, r.theta, r.tts, r.ci_low, r.ci_high};
  }
  std::vector<EnvelopePoint> out;
  for (const auto& [d, p] : best) out.push_back(p);
  return out;
}

ScalingReport fit_scaling(std::span<const EnvelopePoint> envelope) {
  if (envelope.size() < 4)
    throw std::invalid_argument(fmt::format("fit_scaling: need at least 4 envelope points, have {}", envelope.size()));
  std::vector<double> d, log_d, log_tts;
  for (const auto& p : envelope) {
    if (!(p.tts > 0.0) || !std::isfinite(p.tts)) throw std::invalid_argument("fit_scaling: tts must be positive");
    d.push_back(p.d);
    log_d.push_back(std::log(static_cast<double>(p.d)));
    log_tts.push_back(std::log(p.tts));
  }
  ScalingReport report;
  report.points = static_cast<int>(envelope.size());
  report.exponential = fit_line(d, log_tts);
  report.power_law = fit_line(log_d, log_tts);
  report.super_polynomial =
      report.exponential.r_squared >= report.power_law.r_squared + 0.02 && report.exponential.slope > 0.0;
  return report;
}

nlohmann::json to_json(const ScalingReport& report) {
  auto fit = [](const char* model, const LineFit& f, const char* x) {
    return nlohmann::ordered_json{{"model", model}, {"x", x},           {"slope", f.slope},
                                  {"intercept", f.intercept}, {"r_squared", f.r_squared}};
  };
  return nlohmann::ordered_json{{"points", report.points},
                                {"exponential", fit("exponential", report.exponential, "d")},
                                {"power_law", fit("power_law", report.power_law, "log d")},
                                {"super_polynomial_consistent", report.super_polynomial}};
}

namespace {
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}
}  // namespace

void write_table_csv(std::ostream& out, std::span<const BenchRecord> table) {
  out << "kind,theta,d,runs,successes,p_hat,t_hat_s,tts_s,reliable,ci_low,ci_high,unit\n";
  for (const auto& r : table) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.kind, num(r.theta), r.d, r.runs, r.successes,
                       num(r.p_hat), num(r.t_hat), r.reliable ? num(r.tts) : "unreliable", r.reliable ? 1 : 0,
                       num(r.ci_low), num(r.ci_high), r.unit);
  }
}

void write_envelope_csv_header(std::ostream& out) { out << "kind,d,theta,tts_s,ci_low,ci_high\n"; }

void write_envelope_csv(std::ostream& out, const std::string& kind, std::span<const EnvelopePoint> envelope) {
  for (const auto& p : envelope)
    out << fmt::format("{},{},{},{},{},{}\n", kind, p.d, num(p.theta_star), num(p.tts), num(p.ci_low), num(p.ci_high));
}

}  // namespace qhdlab
