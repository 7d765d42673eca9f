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

#include <Eigen/Dense>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qhdlab/instance.hpp"

namespace qhdlab {

enum class SolverKind { sgd_const, sgd_qhd, basin_hopping, dual_annealing };

std::string to_string(SolverKind kind);
/// Throws std::invalid_argument for an unknown name.
SolverKind solver_kind_from_string(std::string_view name);

/// Parameters for one solver run. `theta` is the swept parameter: the
/// learning rate (sgd_const), lambda_f (sgd_qhd) or the iteration count
/// (basin_hopping, dual_annealing).
struct SolverConfig {
  SolverKind kind = SolverKind::sgd_const;
  double theta = 0.25;
  std::uint64_t seed = 0;

  // SGD
  double total_time = 1000.0;               // T
  double s_max = 0.01;
  std::optional<std::int64_t> stall_limit;  // k; nullopt means no limit

  // Basin-hopping
  double step_size = 1.0;
  double temperature = 1.0;  // 0 accepts downhill moves only

  // Dual annealing
  double visit_param = 2.62;      // q_v
  double accept_param = -5.0;     // q_a
  double initial_temp = 5230.0;   // T_0
  double restart_temp_ratio = 2e-5;
  bool terminal_local_search = true;
};

/// Defaults per kind: sgd_const uses T = 1000 and k = 1000; sgd_qhd uses the
/// full schedule domain and k = infinity.
SolverConfig default_config(SolverKind kind, double theta, std::uint64_t seed = 0);

/// Throws std::invalid_argument when theta is outside the documented range
/// for its kind or another field is out of domain.
void validate(const SolverConfig& cfg);

void to_json(nlohmann::json& j, const SolverConfig& cfg);
/// Missing fields take default_config values for the given kind and theta.
void from_json(const nlohmann::json& j, SolverConfig& cfg);

struct SolveResult {
  Eigen::VectorXd best_x;
  double best_value = 0.0;
  bool success = false;
  double runtime_seconds = 0.0;  // CPU time of the calling thread
  std::int64_t evaluations = 0;  // objective and gradient evaluations
  std::int64_t iterations = 0;
  double abstract_time = 0.0;    // SGD elapsed schedule time
  bool diverged = false;
};

void to_json(nlohmann::json& j, const SolveResult& r);

/// Learning rate s(t): theta for sgd_const, 1/(2(t + 1/(2 lambda_f))) for
/// sgd_qhd on [0, lambda_f/2 - 1/(2 lambda_f)].
double sgd_schedule(SolverKind kind, double theta, double t);
double sgd_qhd_schedule_end(double lambda_f);

/// Stochastic gradient descent with a capped effective learning rate: steps
/// of s_cur when s_cur < s_max, otherwise steps of s_max with noise variance
/// scaled by s_cur / s_max. When `path` is given it receives every iterate,
/// starting point included.
SolveResult sgd_run(const Instance& inst, const SolverConfig& cfg, std::vector<Eigen::VectorXd>* path = nullptr);

struct LocalResult {
  Eigen::VectorXd x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  std::int64_t evaluations = 0;
};

/// Gradient descent with Armijo backtracking (c = 1e-4, shrink 0.5, unit
/// initial step) until ||grad|| <= grad_tol or max_iterations.
LocalResult local_minimize(const Instance& inst, const Eigen::VectorXd& x0, int max_iterations = 10000,
                           double grad_tol = 1e-8);

/// Monte Carlo over local minima: uniform perturbation in [-step, step]^d,
/// local minimization, Metropolis acceptance at cfg.temperature. Starts from
/// a N(0, I) draw.
SolveResult basin_hopping(const Instance& inst, const SolverConfig& cfg);

/// Temperature of generalized simulated annealing at iteration i (since the
/// last restart): T_0 (2^(q_v-1) - 1) / ((i+2)^(q_v-1) - 1).
double annealing_temperature(const SolverConfig& cfg, std::int64_t i);

/// Generalized simulated annealing on the box [-M, M]^d with a distorted
/// Cauchy-Lorentz visiting distribution, a chain of 2d visits per
/// iteration, reannealing below T_0 * restart_temp_ratio and an optional
/// local minimization from the best point at the end.
SolveResult dual_annealing(const Instance& inst, const SolverConfig& cfg);

/// Dispatches on cfg.kind, fills runtime_seconds and success.
SolveResult solve(const Instance& inst, const SolverConfig& cfg);

/// CPU seconds consumed by the calling thread.
double thread_cpu_seconds();

}  // namespace qhdlab
