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
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qhdlab/grid.hpp"
#include "qhdlab/instance.hpp"

namespace qhdlab {

/// lambda(t) = exp(2t - log lambda_f) on [0, log lambda_f], time scaled by epsilon.
struct QhdSchedule {
  double lambda_f = 16.0;
  double epsilon = 0.0;
  int steps = 1000;

  double final_time() const;
  /// Endpoints of the rescaled time interval [1/(eps lambda_f), lambda_f/eps].
  double rescaled_start() const;
  double rescaled_end() const;
};

enum class EpsilonRule { natural_log, log10 };

/// 1/(10 log lambda_f) with the natural log, or log10 when requested.
double default_epsilon(double lambda_f, EpsilonRule rule = EpsilonRule::natural_log);
QhdSchedule make_schedule(double lambda_f, int steps, EpsilonRule rule = EpsilonRule::natural_log);

double lambda_at(const QhdSchedule& schedule, double t);
/// Rescaled coupling phi(s) = 1 / (-eps s + lambda_f + 1/lambda_f)^2.
double rescaled_coupling(const QhdSchedule& schedule, double s);

/// Samples F_U on the tensor grid (dim 1 or 2, row-major).
Eigen::ArrayXd sample_potential(const Instance& inst, const Grid1D& grid);

/// i d/dt psi = [kinetic(t) (-1/2 Laplacian) + potential(t) V] psi.
struct TimeCoefficients {
  std::function<double(double)> kinetic;
  std::function<double(double)> potential;
};

struct PropagationReport {
  WaveState state;
  int steps = 0;
  double norm_drift = 0.0;          // | ||psi_final|| - ||psi_0|| |
  double spectral_tail_mass = 0.0;  // mass in modes beyond half the Nyquist band
  double edge_mass = 0.0;           // mass within 0.5 of the periodic boundary
};

/// Strang split-step Fourier integrator on a periodic box. Potential phases
/// are applied as half steps around a full kinetic step, all coefficients
/// evaluated at the step midpoint; consecutive potential half steps are
/// fused. Not thread-safe per instance; make one per worker.
class SplitStepPropagator {
 public:
  SplitStepPropagator(int dim, const Grid1D& grid, Eigen::ArrayXd potential);
  ~SplitStepPropagator();
  SplitStepPropagator(SplitStepPropagator&&) noexcept;
  SplitStepPropagator& operator=(SplitStepPropagator&&) noexcept;

  /// Evolves through the time nodes mesh[0] < ... < mesh[m].
  PropagationReport evolve(const WaveState& init, std::span<const double> mesh,
                           const TimeCoefficients& coefficients) const;

  /// Normalized |psi_hat|^2 mass outside the inner half of the band.
  double spectral_tail_mass(const WaveState& state) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<double> uniform_mesh(double t0, double t1, int steps);

/// Original formulation: i eps d/dt psi = H(t) psi, uniform steps in t.
PropagationReport propagate(const Instance& inst, const QhdSchedule& schedule, const WaveState& init);

/// Rescaled formulation i d/ds psi = 1/2 [-1/2 Laplacian + phi(s) F] psi on
/// s in [1/(eps lambda_f), lambda_f/eps]. The s-mesh is the image of the
/// uniform t-mesh under s(t), which concentrates steps where phi is large.
PropagationReport propagate_rescaled(const Instance& inst, const QhdSchedule& schedule, const WaveState& init);

enum class BallQuadrature {
  nodes,         // h^d times the sum over nodes inside the ball
  interpolated,  // Gauss quadrature of the trigonometric interpolant over the ball
};

/// Probability mass of |state|^2 inside the ball of radius delta about x*.
double ball_mass(const WaveState& state, const Eigen::VectorXd& center, double delta,
                 BallQuadrature quadrature = BallQuadrature::interpolated);

/// 1 - <psi| 1_{B_delta(x*)} |psi>.
double failure_probability(const WaveState& state, const Instance& inst, double delta,
                           BallQuadrature quadrature = BallQuadrature::interpolated);

enum class RunMode { adiabatic_pde, rescaled_pde, ground_state_reference };
std::string to_string(RunMode mode);

struct RunOutcome {
  double failure_prob = 0.0;
  double delta = 0.0;
  double lambda_f = 0.0;
  double epsilon = 0.0;
  int steps = 0;
  RunMode mode = RunMode::adiabatic_pde;
};

/// Failure probability of the ground state of H(t_f). For d = 2 it is the
/// product of 1D ground states in the rotated coordinates.
RunOutcome ground_state_reference(const Instance& inst, double lambda_f, double delta, const Grid1D& grid,
                                  BallQuadrature quadrature = BallQuadrature::interpolated);

struct RobustnessCheck {
  double lhs = 0.0;
  double bound = 0.0;
  bool holds = true;
};

/// |<s1|1_B|s1> - <s2|1_B|s2>| against 2 ||s1 - s2||.
RobustnessCheck observable_robustness_check(const WaveState& s1, const WaveState& s2, const Instance& inst,
                                            double delta, BallQuadrature quadrature = BallQuadrature::interpolated);

struct QhdRunOptions {
  Grid1D grid{4.0, 1024};
  double delta = 0.1;
  EpsilonRule epsilon_rule = EpsilonRule::natural_log;
  int initial_steps = 4000;
  int max_steps = 1 << 22;
  double step_tolerance = 1e-4;  // |p(2S) - p(S)| at acceptance
  BallQuadrature quadrature = BallQuadrature::interpolated;
};

/// QHD from the uniform state with a fixed number of steps.
RunOutcome qhd_run(const Instance& inst, double lambda_f, int steps, const QhdRunOptions& options);

/// QHD from the uniform state, doubling the step count until the failure
/// probability changes by at most step_tolerance.
RunOutcome converged_qhd_run(const Instance& inst, double lambda_f, const QhdRunOptions& options);

/// CSV: lambda_f,delta,epsilon,steps,failure_prob,mode
void write_qhd_csv_header(std::ostream& out);
void write_qhd_csv_row(std::ostream& out, const RunOutcome& outcome);

}  // namespace qhdlab
