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
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "qhdlab/double_well.hpp"
#include "qhdlab/fit.hpp"
#include "qhdlab/grid.hpp"
#include "qhdlab/tridiagonal.hpp"

namespace qhdlab {

using Potential = std::function<double(double)>;

inline Potential well_potential(const DoubleWell& dw) {
  return [dw](double x) { return well_value(dw, x); };
}

inline Potential harmonic_potential(double omega) {
  return [omega](double x) { return 0.5 * omega * omega * x * x; };
}

/// H(lambda) = (1/lambda)(-1/2 d^2/dx^2) + lambda V on a Grid1D, discretized
/// with the three-point stencil and Dirichlet walls just outside the nodes.
struct DiscreteHamiltonian {
  SymTridiagonal matrix;
  Grid1D grid;
  double lambda;
};

DiscreteHamiltonian build_hamiltonian(const Potential& potential, const Grid1D& grid, double lambda);

/// The k lowest eigenpairs with grid-L2-normalized vectors (h sum v^2 = 1).
std::vector<EigenPair> lowest_eigenpairs(const DiscreteHamiltonian& op, int k);

/// Lowest k eigenvalues with the O(h^2) stencil error removed by Richardson
/// extrapolation over the grid and its refinement: (4 E(h/2) - E(h)) / 3.
Eigen::VectorXd extrapolated_eigenvalues(const Potential& potential, const Grid1D& grid, double lambda, int k);

struct GapCurve {
  std::vector<double> lambdas;
  std::vector<double> e0, e1, delta;  // NaN marks a failed sample
  std::vector<bool> valid;
  double delta_min = 0.0;
  double argmin_lambda = 0.0;
};

GapCurve gap_curve(const Potential& potential, std::span<const double> lambdas, const Grid1D& grid);
inline GapCurve gap_curve(const DoubleWell& dw, std::span<const double> lambdas, const Grid1D& grid) {
  return gap_curve(well_potential(dw), lambdas, grid);
}

/// n log-spaced values from lo to hi inclusive.
std::vector<double> log_spaced(double lo, double hi, int n);

/// Harmonic level (n + 1/2) gamma at the global minimum.
double semiclassical_reference(const DoubleWell& dw, int n);

/// Gaussian (lambda gamma / pi)^{1/4} exp(-gamma lambda (x - x*)^2 / 2) sampled
/// on the grid and renormalized. Warns when its width is under 3h.
WaveState harmonic_approx_state(double lambda, const DoubleWell& dw, const Grid1D& grid);

/// Ground state of H(lambda) as a (real) WaveState.
WaveState ground_state(const Potential& potential, const Grid1D& grid, double lambda);

struct MgfSample {
  double s = 0.0;
  double log_mgf = 0.0;  // log E[exp(s (X - x*))]
  double margin = 0.0;   // log_mgf - s^2 beta / (2 lambda)
  bool skipped = false;
};

struct GroundStateStats {
  double lambda = 0.0;
  double sigma_sq = 0.0;  // Var(X)
  double beta_hat = 0.0;  // lambda * sigma_sq
  double beta_used = 0.0;
  double mgf_margin = 0.0;  // max over non-skipped samples
  std::vector<MgfSample> samples;
};

inline constexpr double kDefaultMgfS[] = {-4.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 4.0};

/// Moments of |state|^2 about x*. beta defaults to this state's own beta_hat.
GroundStateStats ground_state_stats(const WaveState& state, double lambda, const DoubleWell& dw,
                                    std::optional<double> beta = std::nullopt,
                                    std::span<const double> s_values = kDefaultMgfS);

struct SubGaussianSweep {
  std::vector<GroundStateStats> stats;
  double beta_fit = 0.0;          // max over the sweep of lambda sigma^2
  double log_log_slope = 0.0;     // slope of log sigma^2 against log lambda
};

/// Ground states over a lambda sweep; MGF margins use the fitted beta.
SubGaussianSweep sub_gaussian_sweep(const DoubleWell& dw, std::span<const double> lambdas, const Grid1D& grid,
                                    std::span<const double> s_values = kDefaultMgfS);

/// CSV: lambda,e0,e1,delta[,sigma_sq,beta_hat]
void write_gap_csv(std::ostream& out, const GapCurve& curve, const std::vector<GroundStateStats>* stats = nullptr);

}  // namespace qhdlab
