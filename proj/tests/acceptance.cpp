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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <unistd.h>

#include "qhdlab/bench.hpp"
#include "qhdlab/double_well.hpp"
#include "qhdlab/errors.hpp"
#include "qhdlab/fit.hpp"
#include "qhdlab/instance.hpp"
#include "qhdlab/qhd.hpp"
#include "qhdlab/random.hpp"
#include "qhdlab/solvers.hpp"
#include "qhdlab/spectral.hpp"

using namespace qhdlab;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Options {
  std::int64_t sweep_runs = 2000;
  int jobs = 1;
  std::string work_dir;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

bool nonincreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1]) return false;
  return true;
}

std::string join(const std::vector<double>& v, const char* fmt_spec = "{:.4g}") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt::format(fmt::runtime(fmt_spec), v[i]);
  return out;
}

double signless_distance(const WaveState& a, const WaveState& b) {
  WaveState neg = a;
  neg.amplitudes = -neg.amplitudes;
  return std::min(a.distance(b), neg.distance(b));
}

// ---------------------------------------------------------------------------

Verdict harmonic_levels(const Options&) {
  const Grid1D grid(8.0, 1024);
  double worst = 0.0;
  for (double lambda : {0.5, 1.0, 5.0}) {
    const Eigen::VectorXd e = extrapolated_eigenvalues(harmonic_potential(1.0), grid, lambda, 4);
    for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(e[k] - (k + 0.5)));
  }
  return {worst <= 1e-4, fmt::format("max |E_k - (k + 1/2)| = {:.2e} (tol 1e-4)", worst)};
}

Verdict gap_curve_shape(const Options&) {
  const DoubleWell dw = make_double_well();
  const Grid1D grid(4.0, 2048);
  const auto lambdas = log_spaced(0.5, 50.0, 40);
  const GapCurve curve = gap_curve(dw, lambdas, grid);
  const auto at40 = lowest_eigenpairs(build_hamiltonian(well_potential(dw), grid, 40.0), 2);
  const double gap40 = at40[1].value - at40[0].value;
  const bool min_ok = std::abs(curve.delta_min - 0.408) <= 0.05 * 0.408;
  const bool where_ok = curve.argmin_lambda >= 3.3 && curve.argmin_lambda <= 7.5;
  const bool gap40_ok = std::abs(gap40 - 2.064) <= 0.03 * 2.064;
  return {min_ok && where_ok && gap40_ok,
          fmt::format("delta_min = {:.4f} at lambda = {:.3f} (want 0.408 +- 5% in [3.3, 7.5]); "
                      "delta(40) = {:.4f} (want 2.064 +- 3%)",
                      curve.delta_min, curve.argmin_lambda, gap40)};
}

Verdict semiclassical_convergence(const Options&) {
  const DoubleWell dw = make_double_well();
  const Grid1D grid(4.0, 2048);
  std::vector<double> dist;
  for (double lambda : {1.0, 5.0, 10.0, 40.0}) {
    const WaveState g = ground_state(well_potential(dw), grid, lambda);
    dist.push_back(signless_distance(g, harmonic_approx_state(lambda, dw, grid)));
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < dist.size(); ++i) decreasing = decreasing && dist[i] < dist[i - 1];
  return {decreasing, fmt::format("L2 distances at lambda 1, 5, 10, 40: {}", join(dist))};
}

Verdict sub_gaussian(const Options&) {
  const DoubleWell dw = make_double_well();
  const std::vector<double> lambdas{10, 20, 40, 80};
  const std::vector<double> s_values{-2, -1, -0.5, 0.5, 1, 2};
  const SubGaussianSweep sweep = sub_gaussian_sweep(dw, lambdas, Grid1D(4.0, 2048), s_values);
  double margin = -INFINITY, worst_s = 0.0, worst_lambda = 0.0;
  for (const auto& st : sweep.stats)
    for (const auto& m : st.samples)
      if (!m.skipped && m.margin > margin) margin = m.margin, worst_s = m.s, worst_lambda = st.lambda;
  const bool slope_ok = std::abs(sweep.log_log_slope + 1.0) <= 0.1;
  return {slope_ok && margin <= 0.0,
          fmt::format("slope {:.4f} (want -1 +- 0.1); beta_fit {:.4f}; max MGF margin {:.3e} at s = {}, lambda = {} "
                      "(want <= 0)",
                      sweep.log_log_slope, sweep.beta_fit, margin, worst_s, worst_lambda)};
}

Verdict qhd_vs_reference(const Options&) {
  const std::vector<double> lambda_fs{8, 16, 32, 64, 128};
  const Instance inst = make_identity_instance(1);
  QhdRunOptions opt;
  opt.grid = Grid1D(4.0, 1024);
  std::vector<double> qhd, ref;
  std::vector<int> steps;
  for (double lf : lambda_fs) {
    const RunOutcome q = converged_qhd_run(inst, lf, opt);
    qhd.push_back(q.failure_prob);
    steps.push_back(q.steps);
    ref.push_back(ground_state_reference(inst, lf, opt.delta, opt.grid).failure_prob);
  }
  auto r2 = [&](const std::vector<double>& p) {
    std::vector<double> logp;
    for (double v : p) logp.push_back(std::log(std::max(v, 1e-300)));
    const LineFit f = fit_line(lambda_fs, logp);
    return f.slope < 0.0 ? f.r_squared : 0.0;
  };
  const bool monotone = nonincreasing(qhd) && nonincreasing(ref);
  const double r2_qhd = r2(qhd), r2_ref = r2(ref);
  bool above = true;
  for (std::size_t i = 0; i < qhd.size(); ++i) above = above && qhd[i] >= ref[i];
  return {monotone && r2_qhd >= 0.9 && r2_ref >= 0.9 && above,
          fmt::format("QHD [{}] reference [{}]; (a) monotone {} (b) R^2 {:.3f}/{:.3f} (c) QHD >= reference {}; "
                      "steps {}",
                      join(qhd), join(ref), monotone, r2_qhd, r2_ref, above,
                      fmt::join(steps, " "))};
}

Verdict time_rescaling(const Options&) {
  const Instance inst = make_identity_instance(1);
  const Grid1D grid(4.0, 1024);
  double worst = 0.0;
  std::vector<double> dists;
  for (double lf : {8.0, 32.0}) {
    const QhdSchedule s = make_schedule(lf, 16000);
    const auto a = propagate(inst, s, uniform_state(1, grid));
    const auto b = propagate_rescaled(inst, s, uniform_state(1, grid));
    dists.push_back(a.state.distance(b.state));
    worst = std::max(worst, dists.back());
  }
  return {worst <= 1e-4, fmt::format("L2 distance at lambda_f 8, 32: {} (tol 1e-4, 16000 steps)", join(dists, "{:.2e}"))};
}

Verdict rotation_invariance(const Options&) {
  QhdRunOptions opt;
  opt.grid = Grid1D(4.0, 256);
  const int steps = 16000;
  const RunOutcome separable = qhd_run(make_identity_instance(2), 32.0, steps, opt);
  const RunOutcome rotated = qhd_run(make_instance(2, 2026), 32.0, steps, opt);
  const double diff = std::abs(separable.failure_prob - rotated.failure_prob);
  return {diff <= 1e-3, fmt::format("separable {:.5f} rotated {:.5f} |diff| {:.2e} (tol 1e-3, n = 256, {} steps)",
                                    separable.failure_prob, rotated.failure_prob, diff, steps)};
}

Verdict tts_arithmetic(const Options&) {
  const auto r1 = repetitions(0.5, 0.99), r2 = repetitions(0.01, 0.99);
  const double t = 1e-3;
  const BenchRecord rec = estimate_cell(kCoinFlipKind, 0.5, 1, 10000, 8, 0.99, solver_run_fn({}, t));
  const double expected = 7 * t;
  const bool in_ci = rec.ci_low <= expected * (1 + 1e-9) && expected * (1 - 1e-9) <= rec.ci_high;
  return {r1 == 7 && r2 == 459 && in_ci,
          fmt::format("R(0.5) = {}, R(0.01) = {}; coin flip p_hat {:.4f} tts {:.4g} CI [{:.4g}, {:.4g}] vs 7t = {:.4g}",
                      r1.value_or(-1), r2.value_or(-1), rec.p_hat, rec.tts, rec.ci_low, rec.ci_high, expected)};
}

Verdict scaling_separation(const Options& o) {
  SweepConfig cfg;
  cfg.solvers = {{"sgd_const", default_thetas("sgd_const"), nlohmann::json::object()},
                 {"basin_hopping", {8, 16, 32, 64, 128, 256, 512}, nlohmann::json::object()}};
  cfg.dims = {1, 2, 3, 4, 5, 6};
  cfg.n_runs = o.sweep_runs;
  cfg.master_seed = 20260101;
  const fs::path dir = o.work_dir.empty() ? fs::temp_directory_path() / fmt::format("qhdlab_acceptance_{}", getpid())
                                          : fs::path(o.work_dir);
  fs::create_directories(dir);
  RunLog log(dir / "runs.jsonl");
  const SweepOutcome out = run_sweep(cfg, log, o.jobs);
  if (o.work_dir.empty()) fs::remove_all(dir);
  if (!out.complete()) return {false, fmt::format("sweep incomplete: {}", out.failed_cells.front())};

  bool pass = true;
  std::string detail = fmt::format("{} runs per cell; ", cfg.n_runs);
  for (const auto& s : cfg.solvers) {
    const auto env = lower_envelope(out.table, s.kind);
    std::vector<double> tts;
    for (const auto& p : env) tts.push_back(p.tts);
    if (env.size() < 4) {
      pass = false;
      detail += fmt::format("{}: only {} envelope points; ", s.kind, env.size());
      continue;
    }
    const ScalingReport rep = fit_scaling(env);
    pass = pass && rep.super_polynomial;
    detail += fmt::format("{}: envelope [{}] s, exp R^2 {:.3f} slope {:.3f}, power R^2 {:.3f}, flagged {}; ", s.kind,
                          join(tts, "{:.3g}"), rep.exponential.r_squared, rep.exponential.slope,
                          rep.power_law.r_squared, rep.super_polynomial);
  }
  return {pass, detail};
}

// Compact versions of the property suites; the unit tests go further.
Verdict property_suites(const Options&) {
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };

  double ortho = 0.0;
  for (int d = 1; d <= 10; ++d)
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Eigen::MatrixXd u = sample_haar_orthogonal(d, seed);
      ortho = std::max(ortho, (u.transpose() * u - Eigen::MatrixXd::Identity(d, d)).norm());
    }
  expect(ortho < 1e-12, fmt::format("Haar orthogonality {:.1e}", ortho));

  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  double grad_rel = 0.0;
  for (int d = 1; d <= 8; ++d) {
    const Instance inst = make_instance(d, 10 + d);
    for (int t = 0; t < 10; ++t) {
      const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(d, [&] { return normal(rng); });
      const Eigen::VectorXd g = eval_gradient(inst, x);
      Eigen::VectorXd fd(d);
      for (int i = 0; i < d; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
        e[i] = 1e-6;
        fd[i] = (eval_objective(inst, x + e) - eval_objective(inst, x - e)) / 2e-6;
      }
      grad_rel = std::max(grad_rel, (g - fd).norm() / std::max(1.0, g.norm()));
    }
  }
  expect(grad_rel <= 1e-4, fmt::format("gradient vs finite differences {:.1e}", grad_rel));

  bool basins = true;
  for (int d = 1; d <= 4; ++d) {
    const Instance inst = make_instance(d, 50 + d);
    const auto minima = enumerate_local_minima(inst);
    basins = basins && minima.size() == (std::size_t{1} << d);
    std::set<std::size_t> reached;
    for (int t = 0; t < 400; ++t) {
      const Eigen::VectorXd x0 = 1.5 * Eigen::VectorXd::NullaryExpr(d, [&] { return normal(rng); });
      const LocalResult r = local_minimize(inst, x0);
      std::size_t best = 0;
      for (std::size_t k = 1; k < minima.size(); ++k)
        if ((r.x - minima[k].point).norm() < (r.x - minima[best].point).norm()) best = k;
      basins = basins && (r.x - minima[best].point).norm() < 1e-6;
      reached.insert(best);
    }
    basins = basins && reached.size() == minima.size();
  }
  expect(basins, "minima enumeration vs local-minimize basins");

  set_warning_sink([](const std::string&) {});
  const auto prop = propagate(make_instance(2, 3), make_schedule(16.0, 400), uniform_state(2, Grid1D(4.0, 128)));
  set_warning_sink(nullptr);
  expect(prop.norm_drift <= 1e-10, fmt::format("norm drift {:.1e}", prop.norm_drift));

  {
    const Instance inst = make_identity_instance(1);
    SolverConfig cfg = default_config(SolverKind::sgd_const, 0.04, 5);
    cfg.stall_limit.reset();
    cfg.total_time = 1e5 * cfg.s_max;
    std::vector<Eigen::VectorXd> path;
    sgd_run(inst, cfg, &path);
    double sum = 0.0, sum2 = 0.0;
    const double n = static_cast<double>(path.size() - 1);
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      const double z = path[k + 1][0] - path[k][0] + cfg.s_max * well_derivative(inst.well, path[k][0]);
      sum += z;
      sum2 += z * z;
    }
    const double ratio = (sum2 / n - (sum / n) * (sum / n)) / (cfg.s_max * cfg.theta);
    expect(std::abs(ratio - 1.0) < 5.0 * std::sqrt(2.0 / n), fmt::format("SGD noise variance ratio {:.4f}", ratio));
  }

  const fs::path dir = fs::temp_directory_path() / fmt::format("qhdlab_acceptance_props_{}", getpid());
  fs::remove_all(dir);
  fs::create_directories(dir);
  SweepConfig cfg;
  cfg.solvers = {{"basin_hopping", {4}, nlohmann::json::object()}, {"dual_annealing", {32}, nlohmann::json::object()}};
  cfg.dims = {2, 3};
  cfg.n_runs = 80;
  cfg.master_seed = 77;
  auto digest = [](std::vector<RunRow> rows) {
    std::vector<std::string> lines;
    for (auto& r : rows) {
      r.runtime_s = 0.0;
      lines.push_back(to_json(r).dump());
    }
    std::sort(lines.begin(), lines.end());
    std::string all;
    for (const auto& l : lines) all += l + '\n';
    return stable_hash(all.c_str());
  };
  RunLog serial(dir / "serial.jsonl"), parallel(dir / "parallel.jsonl"), resumed(dir / "resumed.jsonl");
  run_sweep(cfg, serial, 1);
  run_sweep(cfg, parallel, 3);
  expect(digest(serial.load()) == digest(parallel.load()), "determinism under execution order");
  SweepConfig half = cfg;
  half.n_runs = cfg.n_runs / 2;
  run_sweep(half, resumed, 1);
  const SweepOutcome rest = run_sweep(cfg, resumed, 2);
  expect(rest.runs_reused == 4 * half.n_runs && digest(serial.load()) == digest(resumed.load()),
         "sweep resumability");
  fs::remove_all(dir);

  std::string detail = failed.empty() ? "Haar, gradient, basins, norm, SGD noise, order determinism, resume: all hold"
                                      : "failed:";
  for (const auto& f : failed) detail += " [" + f + "]";
  return {failed.empty(), detail};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Verdict(const Options&)> check;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qhdlab acceptance checks"};
  Options opt;
  std::vector<int> only;
  app.add_option("--only", only, "Criterion numbers to run (default: all)")->delimiter(',');
  app.add_option("--sweep-runs", opt.sweep_runs, "Runs per cell for the scaling sweep")->capture_default_str();
  app.add_option("--jobs", opt.jobs, "Worker threads for the scaling sweep")->capture_default_str();
  app.add_option("--work-dir", opt.work_dir, "Keep the scaling-sweep log here (resumable)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "harmonic oscillator levels", 10, harmonic_levels},
      {2, "double-well gap curve", 120, gap_curve_shape},
      {3, "semiclassical convergence", 60, semiclassical_convergence},
      {4, "sub-Gaussian scaling", 120, sub_gaussian},
      {5, "1D QHD against the ground-state reference", 900, qhd_vs_reference},
      {6, "original vs rescaled time", 300, time_rescaling},
      {7, "2D rotation invariance", 600, rotation_invariance},
      {8, "TTS arithmetic", 60, tts_arithmetic},
      // Four hours on eight cores, expressed as single-core wall time.
      {9, "scaling separation", 4 * 3600 * 8, scaling_separation},
      {10, "property suites", 1200, property_suites},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Stopwatch clock;
    Verdict v;
    try {
      v = c.check(opt);
    } catch (const std::exception& e) {
      v = {false, fmt::format("threw: {}", e.what())};
    }
    const double elapsed = clock.seconds();
    const bool in_budget = elapsed <= c.budget_s;
    const bool pass = v.pass && in_budget;
    if (!pass) ++failures;
    std::cout << fmt::format("{} {:>2} {}: {} [{:.1f} s{}]", pass ? "PASS" : "FAIL", c.id, c.name, v.detail, elapsed,
                             in_budget ? "" : fmt::format(", over the {:.0f} s budget", c.budget_s))
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
