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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qhdlab/fit.hpp"

namespace qhdlab {

/// R = ceil(ln(1 - p0) / ln(1 - p)); 1 when p >= 1, nullopt when p <= 0.
std::optional<std::int64_t> repetitions(double p, double p0 = 0.99);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval for a binomial proportion (z = 1.96 for 95%).
Interval wilson_interval(std::int64_t successes, std::int64_t runs, double z = 1.959963984540054);

/// Kind name used for the synthetic Bernoulli solver (theta = success probability).
inline constexpr const char* kCoinFlipKind = "coin_flip";

/// One line of the run log.
struct RunRow {
  std::string kind;
  double theta = 0.0;
  int d = 0;
  std::int64_t run_index = 0;
  std::uint64_t instance_seed = 0;
  std::uint64_t run_seed = 0;
  bool success = false;
  double runtime_s = 0.0;
  double best_value = 0.0;
  std::string unit = "s";  // imported rows may carry their own time unit
  std::string error;       // non-empty when the run threw
};

nlohmann::json to_json(const RunRow& row);
RunRow run_row_from_json(const nlohmann::json& j);

struct BenchRecord {
  std::string kind;
  double theta = 0.0;
  int d = 0;
  std::int64_t runs = 0;
  std::int64_t successes = 0;
  double p_hat = 0.0;
  double t_hat = 0.0;  // mean runtime over all runs, failures included
  double tts = 0.0;    // NaN when unreliable
  bool reliable = false;
  double ci_low = 0.0;  // 95% interval on tts from the Wilson interval on p
  double ci_high = 0.0;
  std::string unit = "s";
};

/// Reliable iff at least this many successes.
inline constexpr std::int64_t kMinReliableSuccesses = 5;

/// Folds the rows of one cell. Rows are ordered by run_index first, so the
/// result does not depend on the order they were logged in.
BenchRecord aggregate_cell(std::span<const RunRow> rows, double p0 = 0.99);

/// Groups rows by (kind, theta, d) and aggregates each group; groups come
/// out sorted by kind, theta, d.
std::vector<BenchRecord> aggregate_log(std::span<const RunRow> rows, double p0 = 0.99);

/// Seeds for run `run` of a cell. The instance seed depends only on
/// (master, d, run), so every solver and theta sees the same instances.
std::uint64_t instance_seed_for(std::uint64_t master_seed, int d, std::int64_t run);
std::uint64_t run_seed_for(std::uint64_t master_seed, const std::string& kind, double theta, int d, std::int64_t run);

struct TrialOutcome {
  bool success = false;
  double runtime_s = 0.0;
  double best_value = 0.0;
};

/// Executes one run: (kind, theta, d, instance_seed, run_seed) -> outcome.
using RunFn = std::function<TrialOutcome(const std::string& kind, double theta, int d, std::uint64_t instance_seed,
                                         std::uint64_t run_seed)>;

/// Draws a Haar instance from instance_seed and runs the named solver with
/// its default config, patched by overrides[kind] when present (an object of
/// SolverConfig fields). kCoinFlipKind succeeds with probability theta and
/// reports `synthetic_runtime_s`.
RunFn solver_run_fn(const nlohmann::json& overrides = nlohmann::json::object(), double synthetic_runtime_s = 1e-3);

/// n_runs fresh instances for one cell, executed sequentially.
BenchRecord estimate_cell(const std::string& kind, double theta, int d, std::int64_t n_runs,
                          std::uint64_t master_seed, double p0 = 0.99, const RunFn& run = solver_run_fn());

struct SolverSweep {
  std::string kind;
  std::vector<double> thetas;
  nlohmann::json overrides = nlohmann::json::object();  // SolverConfig fields
};

struct SweepConfig {
  std::vector<SolverSweep> solvers;
  std::vector<int> dims;
  std::int64_t n_runs = 100;
  double p0 = 0.99;
  std::uint64_t master_seed = 0;
  double synthetic_runtime_s = 1e-3;
};

/// Accepts "thetas": [...] or "theta_exponents": {"base": b, "min": m, "max": M}.
SweepConfig sweep_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SweepConfig& cfg);

/// Paper sweep ranges: sgd_const 2^-5..2^3, sgd_qhd 2^1..2^9,
/// basin_hopping 2^3..2^11, dual_annealing 2^6..2^14.
std::vector<double> default_thetas(const std::string& kind);

/// Append-only JSON-lines run log, safe for concurrent appends.
class RunLog {
 public:
  explicit RunLog(std::filesystem::path path);
  std::vector<RunRow> load() const;
  void append(std::span<const RunRow> rows);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::vector<RunRow> load_rows(const std::filesystem::path& path);

struct SweepOutcome {
  std::vector<BenchRecord> table;  // one record per completed cell, in config order
  std::vector<std::string> failed_cells;
  std::int64_t runs_executed = 0;
  std::int64_t runs_reused = 0;
  bool complete() const { return failed_cells.empty(); }
};

/// Runs every missing (cell, run) of the sweep on `jobs` worker threads and
/// appends them to the log. Runs already present in the log are reused, so a
/// rerun of a finished sweep executes nothing.
SweepOutcome run_sweep(const SweepConfig& cfg, RunLog& log, int jobs = 1, const RunFn& run = {});

struct EnvelopePoint {
  int d = 0;
  double theta_star = 0.0;
  double tts = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Minimal reliable tts over theta for each d; dims without a reliable cell
/// are left out.
std::vector<EnvelopePoint> lower_envelope(std::span<const BenchRecord> table, const std::string& kind);

struct ScalingReport {
  LineFit exponential;  // log tts against d
  LineFit power_law;    // log tts against log d
  int points = 0;
  bool super_polynomial = false;
};

/// Needs at least 4 envelope points. Flags super-polynomial scaling when the
/// exponential R^2 beats the power-law R^2 by 0.02 or more with a positive
/// exponential slope.
ScalingReport fit_scaling(std::span<const EnvelopePoint> envelope);
nlohmann::json to_json(const ScalingReport& report);

/// CSV: kind,theta,d,runs,successes,p_hat,t_hat_s,tts_s,reliable,ci_low,ci_high,unit
void write_table_csv(std::ostream& out, std::span<const BenchRecord> table);
/// CSV: kind,d,theta,tts_s,ci_low,ci_high. The header line is written
/// separately so several kinds can share one file.
void write_envelope_csv_header(std::ostream& out);
void write_envelope_csv(std::ostream& out, const std::string& kind, std::span<const EnvelopePoint> envelope);

}  // namespace qhdlab
