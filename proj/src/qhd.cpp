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

#include "qhdlab/qhd.hpp"

#include <fftw3.h>
#include <fmt/format.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "qhdlab/errors.hpp"
#include "qhdlab/quadrature.hpp"
#include "qhdlab/spectral.hpp"

namespace qhdlab {

// ---------------------------------------------------------------------------
// Schedule

double QhdSchedule::final_time() const { return std::log(lambda_f); }
double QhdSchedule::rescaled_start() const { return 1.0 / (epsilon * lambda_f); }
double QhdSchedule::rescaled_end() const { return lambda_f / epsilon; }

double default_epsilon(double lambda_f, EpsilonRule rule) {
  if (!(lambda_f > 1.0)) throw std::invalid_argument("default_epsilon: lambda_f must exceed 1");
  const double l = rule == EpsilonRule::natural_log ? std::log(lambda_f) : std::log10(lambda_f);
  return 1.0 / (10.0 * l);
}

QhdSchedule make_schedule(double lambda_f, int steps, EpsilonRule rule) {
  if (steps < 1) throw std::invalid_argument("make_schedule: steps must be positive");
  return QhdSchedule{lambda_f, default_epsilon(lambda_f, rule), steps};
}

double lambda_at(const QhdSchedule& schedule, double t) {
  const double tf = schedule.final_time();
  const double slack = 1e-12 * std::max(1.0, tf);
  if (t < -slack || t > tf + slack) throw std::out_of_range(fmt::format("lambda_at: t = {} outside [0, {}]", t, tf));
  return std::exp(2.0 * t - tf);
}

double rescaled_coupling(const QhdSchedule& schedule, double s) {
  const double lo = schedule.rescaled_start(), hi = schedule.rescaled_end();
  const double slack = 1e-12 * hi;
  if (s < lo - slack || s > hi + slack)
    throw std::out_of_range(fmt::format("rescaled_coupling: s = {} outside [{}, {}]", s, lo, hi));
  const double denom = -schedule.epsilon * s + schedule.lambda_f + 1.0 / schedule.lambda_f;
  return 1.0 / (denom * denom);
}

Eigen::ArrayXd sample_potential(const Instance& inst, const Grid1D& grid) {
  const int n = grid.size();
  const Eigen::ArrayXd x = grid.nodes();
  if (inst.dim == 1) {
    Eigen::ArrayXd v(n);
    for (int i = 0; i < n; ++i) v[i] = eval_objective(inst, Eigen::Matrix<double, 1, 1>(x[i]));
    return v;
  }
  if (inst.dim == 2) {
    Eigen::ArrayXd v(static_cast<Eigen::Index>(n) * n);
    Eigen::Vector2d p;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        p << x[i], x[j];
        v[static_cast<Eigen::Index>(i) * n + j] = eval_objective(inst, p);
      }
    return v;
  }
  throw std::invalid_argument("sample_potential: wavefunction simulation supports d <= 2 only");
}

// ---------------------------------------------------------------------------
// Split-step propagator

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct SplitStepPropagator::Impl {
  int dim;
  Grid1D grid;
  Eigen::ArrayXd potential;
  Eigen::ArrayXd half_k2;  // k^2 / 2 per axis
  Eigen::Index size;
  fftw_complex* buffer = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  mutable Eigen::ArrayXcd axis_phase;

  Impl(int d, const Grid1D& g, Eigen::ArrayXd v) : dim(d), grid(g), potential(std::move(v)) {
    if (dim != 1 && dim != 2) throw std::invalid_argument("SplitStepPropagator: dim must be 1 or 2");
    const int n = grid.size();
    size = dim == 1 ? n : static_cast<Eigen::Index>(n) * n;
    if (potential.size() != size) throw std::invalid_argument("SplitStepPropagator: potential size mismatch");
    half_k2 = 0.5 * grid.wavenumbers().square();
    std::lock_guard lock(planner_mutex());
    buffer = fftw_alloc_complex(static_cast<std::size_t>(size));
    if (dim == 1) {
      forward = fftw_plan_dft_1d(n, buffer, buffer, FFTW_FORWARD, FFTW_ESTIMATE);
      backward = fftw_plan_dft_1d(n, buffer, buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
    } else {
      forward = fftw_plan_dft_2d(n, n, buffer, buffer, FFTW_FORWARD, FFTW_ESTIMATE);
      backward = fftw_plan_dft_2d(n, n, buffer, buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    axis_phase.resize(n);
  }

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    if (buffer) fftw_free(buffer);
  }

  Eigen::Map<Eigen::ArrayXcd> psi() const {
    return Eigen::Map<Eigen::ArrayXcd>(reinterpret_cast<std::complex<double>*>(buffer), size);
  }

  void apply_potential_phase(double scale) const {
    auto p = psi();
    for (Eigen::Index i = 0; i < size; ++i) p[i] *= std::polar(1.0, -scale * potential[i]);
  }

  // exp(-i scale |k|^2 / 2) in Fourier space, with the inverse-FFT 1/N folded in.
  void apply_kinetic(double scale) const {
    const int n = grid.size();
    fftw_execute(forward);
    Eigen::ArrayXcd& axis = axis_phase;
    for (int m = 0; m < n; ++m) axis[m] = std::polar(1.0 / n, -scale * half_k2[m]);
    auto p = psi();
    if (dim == 1) {
      p *= axis;
    } else {
      for (int i = 0; i < n; ++i) p.segment(static_cast<Eigen::Index>(i) * n, n) *= axis[i] * axis;
    }
    fftw_execute(backward);
  }

  double tail_mass_of_buffer() const {
    // Expects Fourier coefficients in the buffer.
    const int n = grid.size();
    const auto p = psi();
    auto outer = [n](int m) {
      const int f = m < n / 2 ? m : n - m;
      return f >= n / 4;
    };
    double tail = 0.0, total = 0.0;
    if (dim == 1) {
      for (int m = 0; m < n; ++m) {
        const double a = std::norm(p[m]);
        total += a;
        if (outer(m)) tail += a;
      }
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double a = std::norm(p[static_cast<Eigen::Index>(i) * n + j]);
          total += a;
          if (outer(i) || outer(j)) tail += a;
        }
    }
    return total > 0.0 ? tail / total : 0.0;
  }
};

SplitStepPropagator::SplitStepPropagator(int dim, const Grid1D& grid, Eigen::ArrayXd potential)
    : impl_(std::make_unique<Impl>(dim, grid, std::move(potential))) {}
SplitStepPropagator::~SplitStepPropagator() = default;
SplitStepPropagator::SplitStepPropagator(SplitStepPropagator&&) noexcept = default;
SplitStepPropagator& SplitStepPropagator::operator=(SplitStepPropagator&&) noexcept = default;

double SplitStepPropagator::spectral_tail_mass(const WaveState& state) const {
  impl_->psi() = state.amplitudes;
  fftw_execute(impl_->forward);
  return impl_->tail_mass_of_buffer();
}

PropagationReport SplitStepPropagator::evolve(const WaveState& init, std::span<const double> mesh,
                                              const TimeCoefficients& coefficients) const {
  Impl& im = *impl_;
  if (init.dim != im.dim || !(init.grid == im.grid)) throw std::invalid_argument("evolve: state/grid mismatch");
  if (mesh.size() < 2) throw std::invalid_argument("evolve: mesh needs at least two nodes");
  const double norm0 = init.norm();

  im.psi() = init.amplitudes;
  const std::size_t steps = mesh.size() - 1;
  auto half_potential = [&](std::size_t j) {
    const double tau = mesh[j + 1] - mesh[j];
    const double mid = 0.5 * (mesh[j] + mesh[j + 1]);
    return 0.5 * tau * coefficients.potential(mid);
  };
  double pending = half_potential(0);
  for (std::size_t j = 0; j < steps; ++j) {
    const double tau = mesh[j + 1] - mesh[j];
    const double mid = 0.5 * (mesh[j] + mesh[j + 1]);
    im.apply_potential_phase(pending);
    im.apply_kinetic(tau * coefficients.kinetic(mid));
    const double this_half = half_potential(j);
    pending = this_half + (j + 1 < steps ? half_potential(j + 1) : 0.0);
  }
  im.apply_potential_phase(half_potential(steps - 1));

  PropagationReport report;
  report.state = WaveState(init.dim, init.grid, im.psi());
  report.steps = static_cast<int>(steps);
  report.norm_drift = std::abs(report.state.norm() - norm0);
  if (report.norm_drift > 1e-6) {
    throw NumericalError(fmt::format("split-step propagation lost unitarity: norm drift {:.3e} after {} steps",
                                     report.norm_drift, steps));
  }

  const double edge = im.grid.half_width() - 0.5;
  double edge_mass = 0.0;
  const double vol = report.state.cell_volume();
  for (Eigen::Index idx = 0; idx < report.state.amplitudes.size(); ++idx) {
    bool near = std::abs(report.state.coordinate(idx, 0)) > edge;
    if (init.dim == 2) near = near || std::abs(report.state.coordinate(idx, 1)) > edge;
    if (near) edge_mass += vol * std::norm(report.state.amplitudes[idx]);
  }
  report.edge_mass = edge_mass;
  report.spectral_tail_mass = spectral_tail_mass(report.state);
  return report;
}

std::vector<double> uniform_mesh(double t0, double t1, int steps) {
  if (steps < 1 || !(t1 > t0)) throw std::invalid_argument("uniform_mesh: need t1 > t0 and steps >= 1");
  std::vector<double> mesh(static_cast<std::size_t>(steps) + 1);
  for (int j = 0; j <= steps; ++j) mesh[static_cast<std::size_t>(j)] = t0 + (t1 - t0) * j / steps;
  mesh.back() = t1;
  return mesh;
}

namespace {

void check_qhd_inputs(const Instance& inst, const QhdSchedule& schedule, const WaveState& init) {
  if (inst.dim > 2) throw std::invalid_argument("QHD emulation supports d <= 2 only");
  if (inst.dim != init.dim) throw std::invalid_argument("QHD: instance and state dimensions differ");
  if (!(schedule.lambda_f > 1.0) || !(schedule.epsilon > 0.0) || schedule.steps < 1)
    throw std::invalid_argument("QHD: schedule needs lambda_f > 1, epsilon > 0, steps >= 1");
  if (std::abs(init.norm() - 1.0) > 1e-10) throw std::invalid_argument("QHD: initial state must be unit norm");
}

void report_diagnostics(const PropagationReport& r) {
  if (r.spectral_tail_mass > 1e-8)
    warn(fmt::format("propagation: spectral tail mass {:.3e} exceeds 1e-8 (possible aliasing)", r.spectral_tail_mass));
  if (r.edge_mass > 1e-8) warn(fmt::format("propagation: mass {:.3e} near the periodic boundary", r.edge_mass));
}

}  // namespace

PropagationReport propagate(const Instance& inst, const QhdSchedule& schedule, const WaveState& init) {
  check_qhd_inputs(inst, schedule, init);
  SplitStepPropagator prop(init.dim, init.grid, sample_potential(inst, init.grid));
  const double eps = schedule.epsilon;
  TimeCoefficients coef{[&](double t) { return 1.0 / (lambda_at(schedule, t) * eps); },
                        [&](double t) { return lambda_at(schedule, t) / eps; }};
  auto report = prop.evolve(init, uniform_mesh(0.0, schedule.final_time(), schedule.steps), coef);
  report_diagnostics(report);
  return report;
}

PropagationReport propagate_rescaled(const Instance& inst, const QhdSchedule& schedule, const WaveState& init) {
  check_qhd_inputs(inst, schedule, init);
  SplitStepPropagator prop(init.dim, init.grid, sample_potential(inst, init.grid));
  const double s0 = schedule.rescaled_start();
  const double span = schedule.lambda_f / schedule.epsilon;
  std::vector<double> mesh = uniform_mesh(0.0, schedule.final_time(), schedule.steps);
  for (double& t : mesh) t = s0 + span * -std::expm1(-2.0 * t);
  mesh.front() = s0;
  mesh.back() = schedule.rescaled_end();
  TimeCoefficients coef{[](double) { return 0.5; },
                        [&](double s) { return 0.5 * rescaled_coupling(schedule, s); }};
  auto report = prop.evolve(init, mesh, coef);
  report_diagnostics(report);
  return report;
}

// ---------------------------------------------------------------------------
// Observables

namespace {

// exp(i k_m (x - x0)) with the Nyquist mode taken as cos so the interpolant
// of real data stays real.
Eigen::ArrayXcd fourier_row(const Eigen::ArrayXd& k, double offset) {
  const Eigen::Index n = k.size();
  Eigen::ArrayXcd e(n);
  const Eigen::ArrayXd arg = k * offset;
  e.real() = arg.cos();
  e.imag() = arg.sin();
  e[n / 2] = std::complex<double>(std::cos(k[n / 2] * offset), 0.0);
  return e;
}

bool ball_inside_box(const Eigen::VectorXd& center, double delta, double half_width) {
  for (Eigen::Index i = 0; i < center.size(); ++i)
    if (center[i] - delta <= -half_width || center[i] + delta >= half_width) return false;
  return true;
}

double node_ball_mass(const WaveState& state, const Eigen::VectorXd& center, double delta) {
  double mass = 0.0;
  for (Eigen::Index idx = 0; idx < state.amplitudes.size(); ++idx) {
    double r2 = 0.0;
    for (int a = 0; a < state.dim; ++a) {
      const double dx = state.coordinate(idx, a) - center[a];
      r2 += dx * dx;
    }
    if (r2 <= delta * delta) mass += std::norm(state.amplitudes[idx]);
  }
  return mass * state.cell_volume();
}

Eigen::ArrayXcd fourier_coefficients(const WaveState& state) {
  const int n = state.grid.size();
  Eigen::ArrayXcd coeffs = state.amplitudes;
  auto* data = reinterpret_cast<fftw_complex*>(coeffs.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = state.dim == 1 ? fftw_plan_dft_1d(n, data, data, FFTW_FORWARD, FFTW_ESTIMATE)
                          : fftw_plan_dft_2d(n, n, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  // ESTIMATE planning leaves the input untouched.
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  coeffs /= static_cast<double>(coeffs.size());
  return coeffs;
}

double interpolated_ball_mass(const WaveState& state, const Eigen::VectorXd& center, double delta) {
  const Eigen::ArrayXcd coeffs = fourier_coefficients(state);
  const Eigen::ArrayXd k = state.grid.wavenumbers();
  const double x0 = -state.grid.half_width();
  const int n = state.grid.size();

  if (state.dim == 1) {
    constexpr int kPanels = 16;
    const auto [gx, gw] = gauss_legendre(12);
    const double a = center[0] - delta;
    const double width = 2.0 * delta / kPanels;
    double mass = 0.0;
    for (int p = 0; p < kPanels; ++p) {
      const double left = a + p * width;
      for (Eigen::Index q = 0; q < gx.size(); ++q) {
        const double x = left + 0.5 * width * (gx[q] + 1.0);
        const std::complex<double> psi = (fourier_row(k, x - x0) * coeffs).sum();
        mass += 0.5 * width * gw[q] * std::norm(psi);
      }
    }
    return mass;
  }

  constexpr int kRadial = 24;
  constexpr int kAngular = 48;
  const auto [gx, gw] = gauss_legendre(kRadial);
  using RowMajor = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> c(coeffs.data(), n, n);
  double mass = 0.0;
  for (int q = 0; q < kRadial; ++q) {
    const double r = 0.5 * delta * (gx[q] + 1.0);
    const double wr = 0.5 * delta * gw[q] * r;
    for (int a = 0; a < kAngular; ++a) {
      const double theta = 2.0 * std::numbers::pi * a / kAngular;
      const double x = center[0] + r * std::cos(theta);
      const double y = center[1] + r * std::sin(theta);
      const Eigen::VectorXcd ey = fourier_row(k, y - x0).matrix();
      const Eigen::VectorXcd ex = fourier_row(k, x - x0).matrix();
      const std::complex<double> psi = ex.transpose() * (c * ey);
      mass += wr * (2.0 * std::numbers::pi / kAngular) * std::norm(psi);
    }
  }
  return mass;
}

}  // namespace

double ball_mass(const WaveState& state, const Eigen::VectorXd& center, double delta, BallQuadrature quadrature) {
  if (!(delta > 0.0)) throw std::invalid_argument("ball_mass: delta must be positive");
  if (center.size() != state.dim) throw std::invalid_argument("ball_mass: center dimension mismatch");
  if (quadrature == BallQuadrature::interpolated && ball_inside_box(center, delta, state.grid.half_width()))
    return interpolated_ball_mass(state, center, delta);
  if (delta < 2.0 * state.grid.spacing())
    warn(fmt::format("ball_mass: delta = {} is under 2h = {}; the ball is under-resolved", delta,
                     2.0 * state.grid.spacing()));
  return node_ball_mass(state, center, delta);
}

double failure_probability(const WaveState& state, const Instance& inst, double delta, BallQuadrature quadrature) {
  if (inst.dim != state.dim) throw std::invalid_argument("failure_probability: dimension mismatch");
  const double p = 1.0 - ball_mass(state, inst.minimizer(), delta, quadrature) / (state.norm() * state.norm());
  return std::clamp(p, 0.0, 1.0);
}

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::adiabatic_pde:
      return "adiabatic_pde";
    case RunMode::rescaled_pde:
      return "rescaled_pde";
    case RunMode::ground_state_reference:
      return "ground_state_reference";
  }
  return "unknown";
}

namespace {

// Product ground state prod_k phi((U x)_k) sampled on the 2D grid, with phi
// the 1D ground state on a four times finer grid, linearly interpolated.
WaveState product_ground_state(const Instance& inst, double lambda_f, const Grid1D& grid) {
  const Grid1D fine(grid.half_width(), 4 * grid.size());
  const WaveState phi = ground_state(well_potential(inst.well), fine, lambda_f);
  const double h = fine.spacing();
  auto phi_at = [&](double y) {
    const double u = (y + fine.half_width()) / h;
    if (u < 0.0 || u >= fine.size() - 1) return 0.0;
    const auto j = static_cast<Eigen::Index>(u);
    const double f = u - static_cast<double>(j);
    return (1.0 - f) * phi.amplitudes[j].real() + f * phi.amplitudes[j + 1].real();
  };
  const int n = grid.size();
  Eigen::ArrayXcd amps(static_cast<Eigen::Index>(n) * n);
  Eigen::Vector2d x;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      x << grid.node(i), grid.node(j);
      const Eigen::Vector2d y = inst.rotation * x;
      amps[static_cast<Eigen::Index>(i) * n + j] = phi_at(y[0]) * phi_at(y[1]);
    }
  WaveState state(2, grid, std::move(amps));
  state.normalize();
  return state;
}

}  // namespace

RunOutcome ground_state_reference(const Instance& inst, double lambda_f, double delta, const Grid1D& grid,
                                  BallQuadrature quadrature) {
  if (inst.dim != 1 && inst.dim != 2) throw std::invalid_argument("ground_state_reference: d must be 1 or 2");
  WaveState gs;
  if (inst.dim == 1) {
    const Potential v = [&inst](double x) { return eval_objective(inst, Eigen::Matrix<double, 1, 1>(x)); };
    gs = ground_state(v, grid, lambda_f);
  } else {
    gs = product_ground_state(inst, lambda_f, grid);
  }
  RunOutcome out;
  out.failure_prob = failure_probability(gs, inst, delta, quadrature);
  out.delta = delta;
  out.lambda_f = lambda_f;
  out.epsilon = 0.0;
  out.steps = 0;
  out.mode = RunMode::ground_state_reference;
  return out;
}

RobustnessCheck observable_robustness_check(const WaveState& s1, const WaveState& s2, const Instance& inst,
                                            double delta, BallQuadrature quadrature) {
  const Eigen::VectorXd center = inst.minimizer();
  RobustnessCheck check;
  check.lhs = std::abs(ball_mass(s1, center, delta, quadrature) - ball_mass(s2, center, delta, quadrature));
  check.bound = 2.0 * s1.distance(s2);
  // Quadrature of the interpolant is exact only up to rounding.
  check.holds = check.lhs <= check.bound + 1e-12;
  return check;
}

RunOutcome qhd_run(const Instance& inst, double lambda_f, int steps, const QhdRunOptions& options) {
  const QhdSchedule schedule = make_schedule(lambda_f, steps, options.epsilon_rule);
  const auto report = propagate(inst, schedule, uniform_state(inst.dim, options.grid));
  return RunOutcome{failure_probability(report.state, inst, options.delta, options.quadrature), options.delta,
                    lambda_f, schedule.epsilon, steps, RunMode::adiabatic_pde};
}

RunOutcome converged_qhd_run(const Instance& inst, double lambda_f, const QhdRunOptions& options) {
  const WaveState init = uniform_state(inst.dim, options.grid);
  SplitStepPropagator prop(inst.dim, options.grid, sample_potential(inst, options.grid));
  const double eps = default_epsilon(lambda_f, options.epsilon_rule);
  const QhdSchedule probe{lambda_f, eps, 1};
  TimeCoefficients coef{[&](double t) { return 1.0 / (lambda_at(probe, t) * eps); },
                        [&](double t) { return lambda_at(probe, t) / eps; }};

  PropagationReport report;
  auto run = [&](int steps) {
    report = prop.evolve(init, uniform_mesh(0.0, probe.final_time(), steps), coef);
    return failure_probability(report.state, inst, options.delta, options.quadrature);
  };

  int steps = options.initial_steps;
  double previous = run(steps);
  while (true) {
    if (2 * steps > options.max_steps)
      throw NumericalError(fmt::format("QHD run at lambda_f = {} did not converge within {} steps", lambda_f,
                                       options.max_steps));
    steps *= 2;
    const double current = run(steps);
    if (std::abs(current - previous) <= options.step_tolerance) {
      report_diagnostics(report);
      return RunOutcome{current, options.delta, lambda_f, eps, steps, RunMode::adiabatic_pde};
    }
    previous = current;
  }
}

void write_qhd_csv_header(std::ostream& out) { out << "lambda_f,delta,epsilon,steps,failure_prob,mode\n"; }

void write_qhd_csv_row(std::ostream& out, const RunOutcome& o) {
  out << fmt::format("{:.17g},{:.17g},{:.17g},{},{:.17g},{}\n", o.lambda_f, o.delta, o.epsilon, o.steps,
                     o.failure_prob, to_string(o.mode));
}

}  // namespace qhdlab
