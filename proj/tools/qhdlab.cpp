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

// Command-line entry point: instance generation, spectral gap sweeps, QHD
// emulation, classical solver runs, TTS benchmarks and QCQP export.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "qhdlab/bench.hpp"
#include "qhdlab/errors.hpp"
#include "qhdlab/instance.hpp"
#include "qhdlab/qcqp.hpp"
#include "qhdlab/qhd.hpp"
#include "qhdlab/solvers.hpp"
#include "qhdlab/spectral.hpp"

#ifndef QHDLAB_VERSION
#define QHDLAB_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kNumerical = 3, kPartial = 4 };

// Thrown for bad flag values found after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path default_out_dir() {
  const char* env = std::getenv("QHDLAB_OUT_DIR");
  return env && *env ? fs::path(env) : fs::path(".");
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Run manifest: written before any computation and finalized at exit.
class Manifest {
 public:
  Manifest(fs::path path, std::string command, std::vector<std::string> argv, ordered_json config,
           std::optional<std::uint64_t> master_seed)
      : path_(std::move(path)) {
    j_["command"] = std::move(command);
    j_["argv"] = std::move(argv);
    j_["config"] = std::move(config);
    j_["master_seed"] = master_seed ? ordered_json(*master_seed) : ordered_json();
    j_["code_version"] = QHDLAB_VERSION;
    j_["started_at"] = utc_now();
    j_["finished_at"] = nullptr;
    j_["status"] = "running";
    j_["outputs"] = ordered_json::array();
  }

  void add_output(const fs::path& p) { j_["outputs"].push_back(p.string()); }
  void set(const std::string& key, ordered_json value) { j_[key] = std::move(value); }
  const fs::path& path() const { return path_; }
  std::string reference() const { return path_.filename().string(); }

  void write() const {
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    std::ofstream out(path_);
    if (!out) throw std::runtime_error("cannot write manifest " + path_.string());
    out << j_.dump(2) << '\n';
  }

  void finish(const std::string& status) {
    j_["status"] = status;
    j_["finished_at"] = utc_now();
    write();
  }

 private:
  fs::path path_;
  ordered_json j_;
};

fs::path manifest_for(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

std::ofstream open_output(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
  return out;
}

std::vector<std::string> argv_vector(int argc, char** argv) { return {argv, argv + argc}; }

std::string num(double v) { return fmt::format("{:.17g}", v); }

// ---------------------------------------------------------------------------

struct GenOptions {
  int dim = 1;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenOptions& o, const std::vector<std::string>& argv) {
  if (o.dim < 1) throw UsageError("--dim must be >= 1");
  const fs::path out = o.out.empty() ? default_out_dir() / fmt::format("instance_d{}_s{}.json", o.dim, o.seed) : fs::path(o.out);
  Manifest m(manifest_for(out), "gen", argv, {{"dim", o.dim}, {"seed", o.seed}, {"out", out.string()}}, o.seed);
  m.add_output(out);
  m.write();

  const qhdlab::Instance inst = qhdlab::make_instance(o.dim, o.seed);
  auto j = ordered_json::parse(qhdlab::instance_to_json(inst));
  j["manifest"] = m.reference();
  open_output(out) << j.dump(2) << '\n';

  const Eigen::VectorXd xs = inst.minimizer();
  std::cout << "x_star:";
  for (Eigen::Index i = 0; i < xs.size(); ++i) std::cout << ' ' << num(xs[i]);
  std::cout << "\nsuccess_threshold: " << num(inst.well.success_threshold()) << '\n';
  m.finish("complete");
  return kOk;
}

// ---------------------------------------------------------------------------

struct GapOptions {
  double lambda_min = 0.5;
  double lambda_max = 50.0;
  int samples = 40;
  int grid_n = 2048;
  double grid_m = 4.0;
  bool with_stats = false;
  std::string out;
};

int cmd_gap(const GapOptions& o, const std::vector<std::string>& argv) {
  if (o.samples < 1) throw UsageError("--samples must be >= 1");
  if (!(o.lambda_min > 0.0) || o.lambda_max < o.lambda_min) throw UsageError("need 0 < --lambda-min <= --lambda-max");
  const fs::path out = o.out.empty() ? default_out_dir() / "gap.csv" : fs::path(o.out);
  Manifest m(manifest_for(out), "gap", argv,
             {{"lambda_min", o.lambda_min},
              {"lambda_max", o.lambda_max},
              {"samples", o.samples},
              {"grid_n", o.grid_n},
              {"grid_m", o.grid_m},
              {"with_stats", o.with_stats},
              {"out", out.string()}},
             std::nullopt);
  m.add_output(out);
  m.write();

  const qhdlab::Grid1D grid(o.grid_m, o.grid_n);
  const qhdlab::DoubleWell dw = qhdlab::make_double_well(o.grid_m);
  const auto lambdas = qhdlab::log_spaced(o.lambda_min, o.lambda_max, o.samples);
  const qhdlab::GapCurve curve = qhdlab::gap_curve(dw, lambdas, grid);

  std::vector<qhdlab::GroundStateStats> stats;
  if (o.with_stats) {
    for (double lambda : lambdas)
      stats.push_back(qhdlab::ground_state_stats(qhdlab::ground_state(qhdlab::well_potential(dw), grid, lambda), lambda,
                                                 dw));
  }
  auto file = open_output(out);
  file << "# manifest=" << m.reference() << '\n';
  qhdlab::write_gap_csv(file, curve, o.with_stats ? &stats : nullptr);

  std::cout << "delta_min: " << num(curve.delta_min) << "\nargmin_lambda: " << num(curve.argmin_lambda) << '\n';
  const bool all_valid = std::all_of(curve.valid.begin(), curve.valid.end(), [](bool v) { return v; });
  m.finish(all_valid ? "complete" : "partial");
  return all_valid ? kOk : kPartial;
}

// ---------------------------------------------------------------------------

struct QhdOptions {
  std::vector<double> lambda_f_list{8, 16, 32, 64, 128};
  double delta = 0.1;
  std::string epsilon_rule = "natural";
  int dim = 1;
  std::string instance;
  int grid_n = 0;
  double grid_m = 4.0;
  int steps = 0;
  double step_tolerance = 1e-4;
  std::string quadrature = "interpolated";
  std::string out;
};

int cmd_qhd(const QhdOptions& o, const std::vector<std::string>& argv) {
  qhdlab::QhdRunOptions run;
  if (o.epsilon_rule == "natural")
    run.epsilon_rule = qhdlab::EpsilonRule::natural_log;
  else if (o.epsilon_rule == "log10")
    run.epsilon_rule = qhdlab::EpsilonRule::log10;
  else
    throw UsageError("--epsilon-rule must be 'natural' or 'log10'");
  if (o.quadrature == "interpolated")
    run.quadrature = qhdlab::BallQuadrature::interpolated;
  else if (o.quadrature == "nodes")
    run.quadrature = qhdlab::BallQuadrature::nodes;
  else
    throw UsageError("--quadrature must be 'interpolated' or 'nodes'");
  for (double lf : o.lambda_f_list)
    if (!(lf > 1.0)) throw UsageError("every lambda_f must exceed 1");

  const qhdlab::Instance inst =
      o.instance.empty() ? qhdlab::make_identity_instance(o.dim) : qhdlab::load_instance(o.instance);
  if (inst.dim > 2) throw UsageError("wavefunction simulation supports d <= 2");
  const int grid_n = o.grid_n > 0 ? o.grid_n : (inst.dim == 1 ? 1024 : 256);
  run.grid = qhdlab::Grid1D(o.grid_m, grid_n);
  run.delta = o.delta;
  run.step_tolerance = o.step_tolerance;

  const fs::path out = o.out.empty() ? default_out_dir() / "qhd.csv" : fs::path(o.out);
  Manifest m(manifest_for(out), "qhd", argv,
             {{"lambda_f_list", o.lambda_f_list},
              {"delta", o.delta},
              {"epsilon_rule", o.epsilon_rule},
              {"dim", inst.dim},
              {"instance", o.instance.empty() ? ordered_json("identity") : ordered_json(o.instance)},
              {"instance_seed", inst.seed},
              {"grid_n", grid_n},
              {"grid_m", o.grid_m},
              {"steps", o.steps > 0 ? ordered_json(o.steps) : ordered_json("converged")},
              {"step_tolerance", o.step_tolerance},
              {"quadrature", o.quadrature},
              {"out", out.string()}},
             std::nullopt);
  m.add_output(out);
  m.write();

  auto file = open_output(out);
  file << "# manifest=" << m.reference() << '\n';
  qhdlab::write_qhd_csv_header(file);
  for (double lf : o.lambda_f_list) {
    const qhdlab::RunOutcome q =
        o.steps > 0 ? qhdlab::qhd_run(inst, lf, o.steps, run) : qhdlab::converged_qhd_run(inst, lf, run);
    qhdlab::write_qhd_csv_row(file, q);
    const qhdlab::RunOutcome g = qhdlab::ground_state_reference(inst, lf, o.delta, run.grid, run.quadrature);
    qhdlab::write_qhd_csv_row(file, g);
    file.flush();
    std::cout << fmt::format("lambda_f={} qhd={:.6g} (steps {}) ground_state={:.6g}\n", lf, q.failure_prob, q.steps,
                             g.failure_prob);
  }
  m.finish("complete");
  return kOk;
}

// ---------------------------------------------------------------------------

struct SolveOptions {
  std::string instance;
  std::string solver;
  double theta = 0.0;
  std::uint64_t seed = 0;
  std::string config;
  bool timing = false;
};

int cmd_solve(const SolveOptions& o, const std::vector<std::string>& argv) {
  qhdlab::SolverKind kind;
  try {
    kind = qhdlab::solver_kind_from_string(o.solver);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  nlohmann::json j = nlohmann::json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw UsageError("cannot open --config " + o.config);
    j = nlohmann::json::parse(in);
  }
  j["kind"] = o.solver;
  j["theta"] = o.theta;
  j["seed"] = o.seed;
  qhdlab::SolverConfig cfg;
  from_json(j, cfg);
  cfg.kind = kind;
  try {
    qhdlab::validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const qhdlab::Instance inst = qhdlab::load_instance(o.instance);
  const qhdlab::SolveResult r = qhdlab::solve(inst, cfg);

  nlohmann::json cfg_json, result_json;
  to_json(cfg_json, cfg);
  to_json(result_json, r);
  if (!o.timing) result_json.erase("runtime_seconds");
  ordered_json report{{"instance", o.instance}, {"instance_seed", inst.seed}, {"config", cfg_json}, {"result", result_json}};
  std::cout << report.dump(2) << '\n';
  (void)argv;
  return kOk;
}

// ---------------------------------------------------------------------------

struct BenchOptions {
  std::string config;
  bool resume = false;
  std::string out_dir;
  int jobs = 1;
  std::vector<std::string> imports;
};

int cmd_bench(const BenchOptions& o, const std::vector<std::string>& argv) {
  std::ifstream in(o.config);
  if (!in) throw UsageError("cannot open --config " + o.config);
  qhdlab::SweepConfig cfg;
  try {
    cfg = qhdlab::sweep_config_from_json(nlohmann::json::parse(in));
  } catch (const std::exception& e) {
    throw UsageError(fmt::format("bad sweep config: {}", e.what()));
  }
  if (o.jobs < 1) throw UsageError("--jobs must be >= 1");
  const fs::path dir = o.out_dir.empty() ? default_out_dir() : fs::path(o.out_dir);
  const fs::path log_path = dir / "runs.jsonl";
  if (fs::exists(log_path) && !o.resume)
    throw UsageError(fmt::format("{} exists; pass --resume to continue it or choose another --out-dir", log_path.string()));
  fs::create_directories(dir);

  Manifest m(dir / "manifest.json", "bench", argv,
             {{"sweep", qhdlab::to_json(cfg)}, {"resume", o.resume}, {"jobs", o.jobs}, {"imports", o.imports}},
             cfg.master_seed);
  for (const char* name : {"runs.jsonl", "cells.csv", "envelope.csv", "fit.json"}) m.add_output(dir / name);
  m.write();

  qhdlab::RunLog log(log_path);
  const qhdlab::SweepOutcome sweep = qhdlab::run_sweep(cfg, log, o.jobs);

  std::vector<qhdlab::BenchRecord> table = sweep.table;
  std::vector<qhdlab::RunRow> imported;
  for (const auto& p : o.imports) {
    if (!fs::exists(p)) throw UsageError("cannot open --import " + p);
    auto rows = qhdlab::load_rows(p);
    imported.insert(imported.end(), rows.begin(), rows.end());
  }
  if (!imported.empty()) {
    const auto extra = qhdlab::aggregate_log(imported, cfg.p0);
    table.insert(table.end(), extra.begin(), extra.end());
  }

  {
    auto file = open_output(dir / "cells.csv");
    file << "# manifest=" << m.reference() << '\n';
    qhdlab::write_table_csv(file, table);
  }
  std::vector<std::string> kinds;
  for (const auto& r : table)
    if (std::find(kinds.begin(), kinds.end(), r.kind) == kinds.end()) kinds.push_back(r.kind);
  ordered_json fits = ordered_json::object();
  {
    auto file = open_output(dir / "envelope.csv");
    file << "# manifest=" << m.reference() << '\n';
    qhdlab::write_envelope_csv_header(file);
    for (const auto& kind : kinds) {
      const auto env = qhdlab::lower_envelope(table, kind);
      qhdlab::write_envelope_csv(file, kind, env);
      try {
        fits[kind] = qhdlab::to_json(qhdlab::fit_scaling(env));
      } catch (const std::invalid_argument& e) {
        fits[kind] = {{"error", e.what()}, {"points", env.size()}};
      }
    }
  }
  open_output(dir / "fit.json") << ordered_json{{"manifest", m.reference()}, {"fits", fits}}.dump(2) << '\n';

  std::cout << fmt::format("cells: {} complete, {} failed; runs executed {}, reused {}\n", sweep.table.size(),
                           sweep.failed_cells.size(), sweep.runs_executed, sweep.runs_reused);
  for (const auto& f : sweep.failed_cells) std::cerr << "failed cell: " << f << '\n';
  m.set("failed_cells", sweep.failed_cells);
  m.finish(sweep.complete() ? "complete" : "partial");
  return sweep.complete() ? kOk : kPartial;
}

// ---------------------------------------------------------------------------

struct ExportOptions {
  std::string instance;
  std::string out;
};

int cmd_export_qcqp(const ExportOptions& o, const std::vector<std::string>& argv) {
  const qhdlab::Instance inst = qhdlab::load_instance(o.instance);
  const fs::path out =
      o.out.empty() ? default_out_dir() / fmt::format("qcqp_d{}_s{}.txt", inst.dim, inst.seed) : fs::path(o.out);
  Manifest m(manifest_for(out), "export-qcqp", argv, {{"instance", o.instance}, {"out", out.string()}}, inst.seed);
  m.add_output(out);
  m.write();
  const qhdlab::QcqpModel model = qhdlab::export_qcqp(inst);
  open_output(out) << qhdlab::qcqp_to_text(
      model, fmt::format("manifest={} instance_seed={} dim={}", m.reference(), inst.seed, inst.dim));
  std::cout << fmt::format("variables: {} constraints: {}\n", model.variable_count(), model.constraints.size());
  m.finish("complete");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qhdlab: quantum Hamiltonian descent emulation and classical baselines"};
  app.set_version_flag("--version", QHDLAB_VERSION);
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Draw a Haar-rotated instance and write it as JSON");
  gen_cmd->add_option("--dim", gen.dim, "Dimension d")->required();
  gen_cmd->add_option("--seed", gen.seed, "Instance seed")->required();
  gen_cmd->add_option("--out", gen.out, "Output path (default $QHDLAB_OUT_DIR/instance_d<d>_s<seed>.json)");

  GapOptions gap;
  auto* gap_cmd = app.add_subcommand("gap", "Spectral gap of H(lambda) over a log-spaced lambda sweep");
  gap_cmd->add_option("--lambda-min", gap.lambda_min, "Smallest lambda")->capture_default_str();
  gap_cmd->add_option("--lambda-max", gap.lambda_max, "Largest lambda")->capture_default_str();
  gap_cmd->add_option("--samples", gap.samples, "Number of lambda values")->capture_default_str();
  gap_cmd->add_option("--grid-n", gap.grid_n, "Grid nodes (power of two)")->capture_default_str();
  gap_cmd->add_option("--grid-m", gap.grid_m, "Box half-width M")->capture_default_str();
  gap_cmd->add_flag("--with-stats", gap.with_stats, "Add ground-state variance columns");
  gap_cmd->add_option("--out", gap.out, "Output CSV (default $QHDLAB_OUT_DIR/gap.csv)");

  QhdOptions qhd;
  auto* qhd_cmd = app.add_subcommand("qhd", "QHD failure probability against the ground-state reference");
  qhd_cmd->add_option("--lambda-f-list", qhd.lambda_f_list, "Comma-separated lambda_f values")
      ->delimiter(',')
      ->capture_default_str();
  qhd_cmd->add_option("--delta", qhd.delta, "Success ball radius")->capture_default_str();
  qhd_cmd->add_option("--epsilon-rule", qhd.epsilon_rule, "natural: 1/(10 ln lambda_f), log10: 1/(10 log10 lambda_f)")
      ->capture_default_str();
  qhd_cmd->add_option("--dim", qhd.dim, "Dimension (1 or 2) of the unrotated instance")->capture_default_str();
  qhd_cmd->add_option("--instance", qhd.instance, "Instance JSON (overrides --dim)");
  qhd_cmd->add_option("--grid-n", qhd.grid_n, "Nodes per axis (default 1024 for d=1, 256 for d=2)");
  qhd_cmd->add_option("--grid-m", qhd.grid_m, "Box half-width M")->capture_default_str();
  qhd_cmd->add_option("--steps", qhd.steps, "Fixed step count (default: double until converged)");
  qhd_cmd->add_option("--step-tolerance", qhd.step_tolerance, "Convergence tolerance on the failure probability")
      ->capture_default_str();
  qhd_cmd->add_option("--quadrature", qhd.quadrature, "Ball mass rule: interpolated or nodes")->capture_default_str();
  qhd_cmd->add_option("--out", qhd.out, "Output CSV (default $QHDLAB_OUT_DIR/qhd.csv)");

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "One classical solver run; prints the result as JSON");
  solve_cmd->add_option("--instance", solve.instance, "Instance JSON")->required();
  solve_cmd->add_option("--solver", solve.solver, "sgd_const, sgd_qhd, basin_hopping or dual_annealing")->required();
  solve_cmd->add_option("--theta", solve.theta, "Swept parameter of the solver")->required();
  solve_cmd->add_option("--seed", solve.seed, "Solver seed")->capture_default_str();
  solve_cmd->add_option("--config", solve.config, "JSON file with further SolverConfig fields");
  solve_cmd->add_flag("--timing", solve.timing, "Include CPU runtime in the output");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "TTS sweep: run log, cell table, envelopes and scaling fits");
  bench_cmd->add_option("--config", bench.config, "Sweep config JSON")->required();
  bench_cmd->add_flag("--resume", bench.resume, "Continue an existing run log");
  bench_cmd->add_option("--out-dir", bench.out_dir, "Output directory (default $QHDLAB_OUT_DIR)");
  bench_cmd->add_option("--jobs", bench.jobs, "Worker threads")->capture_default_str();
  bench_cmd->add_option("--import", bench.imports, "JSON-lines rows measured elsewhere (repeatable)");

  ExportOptions exp;
  auto* exp_cmd = app.add_subcommand("export-qcqp", "Write the lifted QCQP model of an instance");
  exp_cmd->add_option("--instance", exp.instance, "Instance JSON")->required();
  exp_cmd->add_option("--out", exp.out, "Output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const auto args = argv_vector(argc, argv);
  try {
    if (*gen_cmd) return cmd_gen(gen, args);
    if (*gap_cmd) return cmd_gap(gap, args);
    if (*qhd_cmd) return cmd_qhd(qhd, args);
    if (*solve_cmd) return cmd_solve(solve, args);
    if (*bench_cmd) return cmd_bench(bench, args);
    if (*exp_cmd) return cmd_export_qcqp(exp, args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const qhdlab::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsage;
}
