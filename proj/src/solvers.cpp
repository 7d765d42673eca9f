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

#include "qhdlab/solvers.hpp"

#include <fmt/format.h>
#include <time.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "qhdlab/random.hpp"

namespace qhdlab {

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::sgd_const:
      return "sgd_const";
    case SolverKind::sgd_qhd:
      return "sgd_qhd";
    case SolverKind::basin_hopping:
      return "basin_hopping";
    case SolverKind::dual_annealing:
      return "dual_annealing";
  }
  return "unknown";
}

SolverKind solver_kind_from_string(std::string_view name) {
  for (auto k : {SolverKind::sgd_const, SolverKind::sgd_qhd, SolverKind::basin_hopping, SolverKind::dual_annealing})
    if (name == to_string(k)) return k;
  throw std::invalid_argument(fmt::format("unknown solver kind '{}'", name));
}

SolverConfig default_config(SolverKind kind, double theta, std::uint64_t seed) {
  SolverConfig cfg;
  cfg.kind = kind;
  cfg.theta = theta;
  cfg.seed = seed;
  if (kind == SolverKind::sgd_const) {
    cfg.total_time = 1000.0;
    cfg.stall_limit = 1000;
  } else if (kind == SolverKind::sgd_qhd) {
    cfg.total_time = theta > 1.0 ? sgd_qhd_schedule_end(theta) : 0.0;
    cfg.stall_limit.reset();
  }
  return cfg;
}

namespace {

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

}  // namespace

void validate(const SolverConfig& cfg) {
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument(fmt::format("{} config: {}", to_string(cfg.kind), why));
  };
  switch (cfg.kind) {
    case SolverKind::sgd_const:
      if (!(cfg.theta > 0.0 && cfg.theta <= 8.0)) fail("learning rate theta must lie in (0, 8]");
      break;
    case SolverKind::sgd_qhd:
      if (!(cfg.theta > 1.0 && cfg.theta <= 512.0)) fail("lambda_f theta must lie in (1, 512]");
      if (cfg.total_time > sgd_qhd_schedule_end(cfg.theta) * (1.0 + 1e-12))
        fail("T exceeds the schedule domain [0, lambda_f/2 - 1/(2 lambda_f)]");
      break;
    case SolverKind::basin_hopping:
      if (!is_integer(cfg.theta) || cfg.theta < 1.0 || cfg.theta > 2048.0)
        fail("iteration count theta must be an integer in [1, 2^11]");
      if (!(cfg.step_size > 0.0)) fail("step_size must be positive");
      if (!(cfg.temperature >= 0.0)) fail("temperature must be non-negative");
      break;
    case SolverKind::dual_annealing:
      if (!is_integer(cfg.theta) || cfg.theta < 1.0 || cfg.theta > 16384.0)
        fail("iteration count theta must be an integer in [1, 2^14]");
      if (!(cfg.visit_param > 1.0 && cfg.visit_param < 3.0)) fail("visit_param must lie in (1, 3)");
      if (!(cfg.accept_param < 1.0)) fail("accept_param must be below 1");
      if (!(cfg.initial_temp > 0.0)) fail("initial_temp must be positive");
      if (!(cfg.restart_temp_ratio > 0.0 && cfg.restart_temp_ratio < 1.0)) fail("restart_temp_ratio must lie in (0, 1)");
      break;
  }
  if (cfg.kind == SolverKind::sgd_const || cfg.kind == SolverKind::sgd_qhd) {
    if (!(cfg.total_time > 0.0) || !std::isfinite(cfg.total_time)) fail("T must be positive and finite");
    if (!(cfg.s_max > 0.0)) fail("s_max must be positive");
    if (cfg.stall_limit && *cfg.stall_limit < 1) fail("k must be positive");
  }
}

void to_json(nlohmann::json& j, const SolverConfig& cfg) {
  j = nlohmann::json{{"kind", to_string(cfg.kind)}, {"theta", cfg.theta}, {"seed", cfg.seed}};
  switch (cfg.kind) {
    case SolverKind::sgd_const:
    case SolverKind::sgd_qhd:
      j["T"] = cfg.total_time;
      j["s_max"] = cfg.s_max;
      j["k"] = cfg.stall_limit ? nlohmann::json(*cfg.stall_limit) : nlohmann::json("inf");
      break;
    case SolverKind::basin_hopping:
      j["step_size"] = cfg.step_size;
      j["temperature"] = cfg.temperature;
      break;
    case SolverKind::dual_annealing:
      j["visit_param"] = cfg.visit_param;
      j["accept_param"] = cfg.accept_param;
      j["initial_temp"] = cfg.initial_temp;
      j["restart_temp_ratio"] = cfg.restart_temp_ratio;
      j["terminal_local_search"] = cfg.terminal_local_search;
      break;
  }
}

void from_json(const nlohmann::json& j, SolverConfig& cfg) {
  cfg = default_config(solver_kind_from_string(j.at("kind").get<std::string>()), j.at("theta").get<double>(),
                       j.value("seed", std::uint64_t{0}));
  cfg.total_time = j.value("T", cfg.total_time);
  cfg.s_max = j.value("s_max", cfg.s_max);
  if (j.contains("k")) {
    const auto& k = j.at("k");
    if (k.is_null() || (k.is_string() && k.get<std::string>() == "inf"))
      cfg.stall_limit.reset();
    else
      cfg.stall_limit = k.get<std::int64_t>();
  }
  cfg.step_size = j.value("step_size", cfg.step_size);
  cfg.temperature = j.value("temperature", cfg.temperature);
  cfg.visit_param = j.value("visit_param", cfg.visit_param);
  cfg.accept_param = j.value("accept_param", cfg.accept_param);
  cfg.initial_temp = j.value("initial_temp", cfg.initial_temp);
  cfg.restart_temp_ratio = j.value("restart_temp_ratio", cfg.restart_temp_ratio);
  cfg.terminal_local_search = j.value("terminal_local_search", cfg.terminal_local_search);
}

void to_json(nlohmann::json& j, const SolveResult& r) {
  j = nlohmann::json{{"best_x", std::vector<double>(r.best_x.data(), r.best_x.data() + r.best_x.size())},
                     {"best_value", r.best_value},
                     {"success", r.success},
                     {"runtime_seconds", r.runtime_seconds},
                     {"evaluations", r.evaluations},
                     {"iterations", r.iterations},
                     {"abstract_time", r.abstract_time},
                     {"diverged", r.diverged}};
}

double sgd_qhd_schedule_end(double lambda_f) {
  if (!(lambda_f > 1.0)) throw std::invalid_argument("sgd_qhd schedule needs lambda_f > 1");
  return 0.5 * lambda_f - 0.5 / lambda_f;
}

double sgd_schedule(SolverKind kind, double theta, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("sgd_schedule: t must be non-negative");
  if (kind == SolverKind::sgd_const) return theta;
  if (kind != SolverKind::sgd_qhd) throw std::invalid_argument("sgd_schedule: not an SGD kind");
  const double end = sgd_qhd_schedule_end(theta);
  if (t > end * (1.0 + 1e-12)) throw std::out_of_range(fmt::format("sgd_schedule: t = {} beyond {}", t, end));
  return 1.0 / (2.0 * (t + 0.5 / theta));
}

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

namespace {

// Times a solver body on the thread CPU clock and fills the derived fields.
template <typename Body>
SolveResult timed_run(const Instance& inst, Body&& body) {
  const double start = thread_cpu_seconds();
  SolveResult r = body();
  r.runtime_seconds = thread_cpu_seconds() - start;
  r.best_value = eval_objective(inst, r.best_x);
  r.success = !r.diverged && r.best_value <= inst.well.success_threshold();
  return r;
}

SolveResult sgd_body(const Instance& inst, const SolverConfig& cfg, std::vector<Eigen::VectorXd>* path) {
  if (cfg.kind != SolverKind::sgd_const && cfg.kind != SolverKind::sgd_qhd)
    throw std::invalid_argument("sgd_run: config kind is not SGD");
  validate(cfg);
  const int d = inst.dim;
  Rng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x[i] = d * normal(rng);
  Eigen::VectorXd grad(d);
  double value = eval_objective_and_gradient(inst, x, grad);

  SolveResult r;
  r.best_x = x;
  r.best_value = value;
  r.evaluations = 1;
  if (path) path->assign(1, x);
  std::int64_t stalled = 0;
  double t = 0.0;
  Eigen::VectorXd xi(d);
  while (t < cfg.total_time) {
    const double s_cur = sgd_schedule(cfg.kind, cfg.theta, t);
    for (int i = 0; i < d; ++i) xi[i] = normal(rng);
    if (s_cur < cfg.s_max) {
      x -= s_cur * (grad + xi);
      t += s_cur;
    } else {
      x -= cfg.s_max * (grad + std::sqrt(s_cur / cfg.s_max) * xi);
      t += cfg.s_max;
    }
    ++r.iterations;
    if (path) path->push_back(x);
    if (!(x.norm() <= 1e6)) {
      r.diverged = true;
      break;
    }
    value = eval_objective_and_gradient(inst, x, grad);
    ++r.evaluations;
    if (value < r.best_value) {
      r.best_value = value;
      r.best_x = x;
      stalled = 0;
    } else if (cfg.stall_limit && ++stalled >= *cfg.stall_limit) {
      break;
    }
  }
  r.abstract_time = t;
  return r;
}

}  // namespace

SolveResult sgd_run(const Instance& inst, const SolverConfig& cfg, std::vector<Eigen::VectorXd>* path) {
  return timed_run(inst, [&] { return sgd_body(inst, cfg, path); });
}

LocalResult local_minimize(const Instance& inst, const Eigen::VectorXd& x0, int max_iterations, double grad_tol) {
  if (!x0.allFinite()) throw std::invalid_argument("local_minimize: x0 must be finite");
  constexpr double kArmijo = 1e-4;
  constexpr double kShrink = 0.5;
  constexpr int kMaxBacktracks = 80;

  LocalResult r;
  r.x = x0;
  Eigen::VectorXd grad(x0.size()), trial_grad(x0.size());
  r.value = eval_objective_and_gradient(inst, r.x, grad);
  r.evaluations = 1;
  for (; r.iterations < max_iterations; ++r.iterations) {
    const double gnorm2 = grad.squaredNorm();
    if (std::sqrt(gnorm2) <= grad_tol) {
      r.converged = true;
      return r;
    }
    // Near a minimum the predicted decrease falls below the rounding of F;
    // there a step is also taken if F stays level and the gradient shrinks.
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(r.value));
    double alpha = 1.0;
    bool accepted = false;
    for (int b = 0; b < kMaxBacktracks; ++b, alpha *= kShrink) {
      const Eigen::VectorXd trial = r.x - alpha * grad;
      const double v = eval_objective_and_gradient(inst, trial, trial_grad);
      ++r.evaluations;
      const bool armijo = v <= r.value - kArmijo * alpha * gnorm2;
      const bool level = v <= r.value + slack && trial_grad.squaredNorm() < gnorm2;
      if (armijo || level) {
        r.x = trial;
        r.value = v;
        grad.swap(trial_grad);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  r.converged = grad.norm() <= grad_tol;
  return r;
}

namespace {

SolveResult basin_hopping_body(const Instance& inst, const SolverConfig& cfg) {
  if (cfg.kind != SolverKind::basin_hopping) throw std::invalid_argument("basin_hopping: wrong config kind");
  validate(cfg);
  const int d = inst.dim;
  Rng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> step(-cfg.step_size, cfg.step_size);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Eigen::VectorXd x0(d);
  for (int i = 0; i < d; ++i) x0[i] = normal(rng);
  LocalResult current = local_minimize(inst, x0);

  SolveResult r;
  r.evaluations = current.evaluations;
  r.best_x = current.x;
  r.best_value = current.value;

  const auto iterations = static_cast<std::int64_t>(cfg.theta);
  Eigen::VectorXd trial(d);
  for (std::int64_t it = 0; it < iterations; ++it) {
    for (int i = 0; i < d; ++i) trial[i] = current.x[i] + step(rng);
    LocalResult proposal = local_minimize(inst, trial);
    r.evaluations += proposal.evaluations;
    ++r.iterations;
    // Draw unconditionally so the stream does not depend on the branch taken.
    const double u = unit(rng);
    if (!proposal.converged) continue;
    if (proposal.value < r.best_value) {
      r.best_value = proposal.value;
      r.best_x = proposal.x;
    }
    const double rise = proposal.value - current.value;
    bool accept = rise <= 0.0;
    if (!accept && cfg.temperature > 0.0) accept = u < std::exp(-rise / cfg.temperature);
    if (accept) current = std::move(proposal);
  }
  return r;
}

}  // namespace

SolveResult basin_hopping(const Instance& inst, const SolverConfig& cfg) {
  return timed_run(inst, [&] { return basin_hopping_body(inst, cfg); });
}

double annealing_temperature(const SolverConfig& cfg, std::int64_t i) {
  const double q = cfg.visit_param - 1.0;
  const double t1 = std::expm1(q * std::numbers::ln2);
  const double t2 = std::expm1(q * std::log(static_cast<double>(i) + 2.0));
  return cfg.initial_temp * t1 / t2;
}

namespace {

// Distorted Cauchy-Lorentz visiting distribution of generalized simulated
// annealing, with the heavy tail clipped at kTailLimit.
class VisitingDistribution {
 public:
  static constexpr double kTailLimit = 1e8;
  static constexpr double kMinVisitBound = 1e-10;

  VisitingDistribution(double qv, double lower, double upper) : qv_(qv), lower_(lower), range_(upper - lower) {
    const double factor2 = std::exp((4.0 - qv) * std::log(qv - 1.0));
    const double factor3 = std::exp((2.0 - qv) * std::numbers::ln2 / (qv - 1.0));
    factor4_p_ = std::sqrt(std::numbers::pi) * factor2 / (factor3 * (3.0 - qv));
    const double factor5 = 1.0 / (qv - 1.0) - 0.5;
    const double d1 = 2.0 - factor5;
    factor6_ = std::numbers::pi * (1.0 - factor5) / std::sin(std::numbers::pi * (1.0 - factor5)) /
               std::exp(std::lgamma(d1));
  }

  // Visit number `step` of a chain: steps below dim move every coordinate,
  // the rest move coordinate step - dim.
  Eigen::VectorXd visit(const Eigen::VectorXd& x, int step, double temperature, Rng& rng) const {
    const int dim = static_cast<int>(x.size());
    Eigen::VectorXd out = x;
    if (step < dim) {
      Eigen::VectorXd v = draw(temperature, dim, rng);
      const double upper_sample = unit_(rng), lower_sample = unit_(rng);
      for (int i = 0; i < dim; ++i) {
        if (v[i] > kTailLimit)
          v[i] = kTailLimit * upper_sample;
        else if (v[i] < -kTailLimit)
          v[i] = -kTailLimit * lower_sample;
        out[i] = wrap(x[i] + v[i]);
      }
    } else {
      double v = draw(temperature, 1, rng)[0];
      if (v > kTailLimit)
        v = kTailLimit * unit_(rng);
      else if (v < -kTailLimit)
        v = -kTailLimit * unit_(rng);
      const int i = step - dim;
      out[i] = wrap(x[i] + v);
    }
    return out;
  }

 private:
  Eigen::VectorXd draw(double temperature, int n, Rng& rng) const {
    Eigen::VectorXd xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
      xs[i] = normal_(rng);
      ys[i] = normal_(rng);
    }
    const double factor1 = std::exp(std::log(temperature) / (qv_ - 1.0));
    const double factor4 = factor4_p_ * factor1;
    const double sigmax = std::exp(-(qv_ - 1.0) * std::log(factor6_ / factor4) / (3.0 - qv_));
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i)
      out[i] = sigmax * xs[i] / std::exp((qv_ - 1.0) * std::log(std::abs(ys[i])) / (3.0 - qv_));
    return out;
  }

  double wrap(double v) const {
    const double a = v - lower_;
    double w = std::fmod(std::fmod(a, range_) + range_, range_) + lower_;
    if (std::abs(w - lower_) < kMinVisitBound) w += kMinVisitBound;
    return w;
  }

  double qv_, lower_, range_;
  double factor4_p_ = 0.0, factor6_ = 0.0;
  mutable std::normal_distribution<double> normal_{0.0, 1.0};
  mutable std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

SolveResult dual_annealing_body(const Instance& inst, const SolverConfig& cfg) {
  if (cfg.kind != SolverKind::dual_annealing) throw std::invalid_argument("dual_annealing: wrong config kind");
  validate(cfg);
  const int d = inst.dim;
  const double bound = inst.well.box_M;
  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const VisitingDistribution visiting(cfg.visit_param, -bound, bound);

  auto random_point = [&] {
    Eigen::VectorXd p(d);
    for (int i = 0; i < d; ++i) p[i] = -bound + 2.0 * bound * unit(rng);
    return p;
  };

  SolveResult r;
  Eigen::VectorXd current = random_point();
  double current_value = eval_objective(inst, current);
  r.evaluations = 1;
  r.best_x = current;
  r.best_value = current_value;

  const double restart_temp = cfg.initial_temp * cfg.restart_temp_ratio;
  const auto iterations = static_cast<std::int64_t>(cfg.theta);
  std::int64_t since_restart = 0;
  for (std::int64_t it = 0; it < iterations; ++it, ++since_restart) {
    double temperature = annealing_temperature(cfg, since_restart);
    if (temperature < restart_temp) {
      current = random_point();
      current_value = eval_objective(inst, current);
      ++r.evaluations;
      since_restart = 0;
      temperature = annealing_temperature(cfg, 0);
    }
    const double step_temp = temperature / static_cast<double>(since_restart + 1);
    for (int j = 0; j < 2 * d; ++j) {
      Eigen::VectorXd candidate = visiting.visit(current, j, temperature, rng);
      const double value = eval_objective(inst, candidate);
      ++r.evaluations;
      if (value < current_value) {
        current = std::move(candidate);
        current_value = value;
        if (value < r.best_value) {
          r.best_value = value;
          r.best_x = current;
        }
        continue;
      }
      const double u = unit(rng);
      const double base = 1.0 - (1.0 - cfg.accept_param) * (value - current_value) / step_temp;
      const double accept = base > 0.0 ? std::exp(std::log(base) / (1.0 - cfg.accept_param)) : 0.0;
      if (u <= accept) {
        current = std::move(candidate);
        current_value = value;
      }
    }
    ++r.iterations;
  }

  if (cfg.terminal_local_search) {
    const LocalResult polished = local_minimize(inst, r.best_x);
    r.evaluations += polished.evaluations;
    if (polished.value < r.best_value) {
      r.best_value = polished.value;
      r.best_x = polished.x;
    }
  }
  return r;
}

}  // namespace

SolveResult dual_annealing(const Instance& inst, const SolverConfig& cfg) {
  return timed_run(inst, [&] { return dual_annealing_body(inst, cfg); });
}

SolveResult solve(const Instance& inst, const SolverConfig& cfg) {
  switch (cfg.kind) {
    case SolverKind::sgd_const:
    case SolverKind::sgd_qhd:
      return sgd_run(inst, cfg);
    case SolverKind::basin_hopping:
      return basin_hopping(inst, cfg);
    case SolverKind::dual_annealing:
      return dual_annealing(inst, cfg);
  }
  throw std::invalid_argument("solve: unknown solver kind");
}

}  // namespace qhdlab
