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


#include <doctest.h>

#include <cmath>
#include <random>

#include "qhdlab/instance.hpp"
#include "qhdlab/random.hpp"
#include "qhdlab/solvers.hpp"

using namespace qhdlab;

namespace {

// Scalar SGD on the unrotated 1D well, written out step by step.
struct ScalarSgd {
  double best_x, best_value;
  std::int64_t iterations;
};

ScalarSgd scalar_sgd(const DoubleWell& dw, double rate, double total_time, double s_max, std::int64_t k,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double x = normal(rng);
  ScalarSgd out{x, well_value(dw, x), 0};
  std::int64_t stalled = 0;
  for (double t = 0.0; t < total_time;) {
    const double xi = normal(rng);
    const double g = well_derivative(dw, x);
    if (rate < s_max) {
      x -= rate * (g + xi);
      t += rate;
    } else {
      x -= s_max * (g + std::sqrt(rate / s_max) * xi);
      t += s_max;
    }
    ++out.iterations;
    const double v = well_value(dw, x);
    if (v < out.best_value) {
      out.best_value = v;
      out.best_x = x;
      stalled = 0;
    } else if (++stalled >= k) {
      break;
    }
  }
  return out;
}

bool same_result(const SolveResult& a, const SolveResult& b) {
  return a.best_x == b.best_x && a.best_value == b.best_value && a.success == b.success &&
         a.iterations == b.iterations && a.evaluations == b.evaluations;
}

}  // namespace

TEST_CASE("SGD matches a scalar reimplementation") {
  const Instance inst = make_identity_instance(1);
  for (double rate : {0.005, 0.25}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      SolverConfig cfg = default_config(SolverKind::sgd_const, rate, seed);
      cfg.total_time = 20.0;
      const SolveResult r = sgd_run(inst, cfg);
      const ScalarSgd ref = scalar_sgd(inst.well, rate, 20.0, cfg.s_max, *cfg.stall_limit, seed);
      CHECK(r.iterations == ref.iterations);
      CHECK(r.best_value == doctest::Approx(ref.best_value).epsilon(1e-12));
      CHECK(r.best_x[0] == doctest::Approx(ref.best_x).epsilon(1e-12));
    }
  }
}

TEST_CASE("SGD noise variance scales as s_max * s_cur") {
  // A flat objective is not available, so the drift s * grad is subtracted
  // from each increment before taking the variance.
  const Instance inst = make_identity_instance(1);
  for (double rate : {0.05, 0.002}) {
    SolverConfig cfg = default_config(SolverKind::sgd_const, rate, 99);
    cfg.stall_limit.reset();
    cfg.total_time = 1e5 * std::min(rate, cfg.s_max);
    std::vector<Eigen::VectorXd> path;
    sgd_run(inst, cfg, &path);
    REQUIRE(path.size() >= 100000);
    const double step = std::min(rate, cfg.s_max);
    double sum = 0.0, sum2 = 0.0;
    const auto n = static_cast<double>(path.size() - 1);
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      const double noise = path[k + 1][0] - path[k][0] + step * well_derivative(inst.well, path[k][0]);
      sum += noise;
      sum2 += noise * noise;
    }
    const double var = sum2 / n - (sum / n) * (sum / n);
    const double expected = rate >= cfg.s_max ? cfg.s_max * rate : rate * rate;
    // Relative standard error of a Gaussian variance estimate is sqrt(2/n).
    CHECK(std::abs(var / expected - 1.0) < 5.0 * std::sqrt(2.0 / n));
  }
}

TEST_CASE("QHD-inspired learning-rate schedule") {
  const double lf = 16.0;
  CHECK(sgd_schedule(SolverKind::sgd_qhd, lf, 0.0) == doctest::Approx(lf));
  CHECK(sgd_qhd_schedule_end(lf) == doctest::Approx(lf / 2 - 1 / (2 * lf)));
  CHECK(sgd_schedule(SolverKind::sgd_qhd, lf, sgd_qhd_schedule_end(lf)) == doctest::Approx(1.0 / lf));
  CHECK(sgd_schedule(SolverKind::sgd_const, 0.3, 17.0) == 0.3);
  const SolverConfig cfg = default_config(SolverKind::sgd_qhd, lf);
  CHECK(cfg.total_time == doctest::Approx(sgd_qhd_schedule_end(lf)));
  CHECK_FALSE(cfg.stall_limit.has_value());
  const SolveResult r = sgd_run(make_instance(2, 4), cfg);
  CHECK(r.abstract_time == doctest::Approx(cfg.total_time).epsilon(1e-3));
}

TEST_CASE("solvers are deterministic per seed") {
  const Instance inst = make_instance(3, 21);
  for (auto kind : {SolverKind::sgd_const, SolverKind::sgd_qhd, SolverKind::basin_hopping,
                    SolverKind::dual_annealing}) {
    const double theta = kind == SolverKind::sgd_const ? 0.1 : kind == SolverKind::sgd_qhd ? 8.0 : 16.0;
    const SolveResult a = solve(inst, default_config(kind, theta, 5));
    const SolveResult b = solve(inst, default_config(kind, theta, 5));
    const SolveResult c = solve(inst, default_config(kind, theta, 6));
    CHECK(same_result(a, b));
    CHECK_FALSE(a.best_x == c.best_x);
    CHECK(a.runtime_seconds >= 0.0);
    CHECK(a.best_value == doctest::Approx(eval_objective(inst, a.best_x)));
    CHECK(a.success == (a.best_value <= inst.well.success_threshold()));
  }
}

TEST_CASE("basin hopping and dual annealing find the global minimum in low dimension") {
  int bh = 0, da = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Instance inst = make_instance(2, seed);
    bh += basin_hopping(inst, default_config(SolverKind::basin_hopping, 64, seed)).success;
    da += dual_annealing(inst, default_config(SolverKind::dual_annealing, 512, seed)).success;
  }
  CHECK(bh >= 18);
  CHECK(da >= 15);
}

TEST_CASE("dual annealing stays in the box") {
  const Instance inst = make_instance(4, 3);
  SolverConfig cfg = default_config(SolverKind::dual_annealing, 300, 1);
  cfg.terminal_local_search = false;
  const SolveResult r = dual_annealing(inst, cfg);
  CHECK(r.best_x.cwiseAbs().maxCoeff() <= inst.well.box_M);
  CHECK(r.evaluations >= 1 + 300 * 2 * 4);
  CHECK(r.iterations == 300);
}

TEST_CASE("annealing temperature starts at T0 and decays") {
  const SolverConfig cfg = default_config(SolverKind::dual_annealing, 10);
  CHECK(annealing_temperature(cfg, 0) == doctest::Approx(cfg.initial_temp));
  double prev = annealing_temperature(cfg, 0);
  for (int i = 1; i < 1000; i *= 3) {
    const double t = annealing_temperature(cfg, i);
    CHECK(t < prev);
    prev = t;
  }
}

TEST_CASE("local minimization converges from a far start") {
  const Instance inst = make_instance(5, 8);
  const LocalResult r = local_minimize(inst, Eigen::VectorXd::Constant(5, 3.0));
  CHECK(r.converged);
  CHECK(eval_gradient(inst, r.x).norm() <= 1e-8);
  CHECK_THROWS_AS(local_minimize(inst, Eigen::VectorXd::Constant(5, NAN)), std::invalid_argument);
}

TEST_CASE("config validation and JSON") {
  CHECK_THROWS_AS(validate(default_config(SolverKind::sgd_const, 9.0)), std::invalid_argument);
  CHECK_THROWS_AS(validate(default_config(SolverKind::sgd_qhd, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(validate(default_config(SolverKind::basin_hopping, 2.5)), std::invalid_argument);
  CHECK_THROWS_AS(validate(default_config(SolverKind::dual_annealing, 1e5)), std::invalid_argument);
  CHECK_THROWS_AS(solver_kind_from_string("newton"), std::invalid_argument);
  for (auto kind : {SolverKind::sgd_const, SolverKind::sgd_qhd, SolverKind::basin_hopping,
                    SolverKind::dual_annealing}) {
    CHECK(solver_kind_from_string(to_string(kind)) == kind);
    SolverConfig cfg = default_config(kind, kind == SolverKind::sgd_const ? 0.5 : 32.0, 77);
    nlohmann::json j;
    to_json(j, cfg);
    SolverConfig back;
    from_json(j, back);
    nlohmann::json j2;
    to_json(j2, back);
    CHECK(j == j2);
  }
}
