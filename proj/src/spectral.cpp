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

#include "qhdlab/spectral.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qhdlab/errors.hpp"

namespace qhdlab {

DiscreteHamiltonian build_hamiltonian(const Potential& potential, const Grid1D& grid, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("build_hamiltonian: lambda must be positive");
  const int n = grid.size();
  const double h = grid.spacing();
  const double kinetic = 1.0 / (lambda * h * h);
  SymTridiagonal t;
  t.diag.resize(n);
  for (int j = 0; j < n; ++j) t.diag[j] = kinetic + lambda * potential(grid.node(j));
  t.off = Eigen::VectorXd::Constant(n - 1, -0.5 * kinetic);
  return {std::move(t), grid, lambda};
}

std::vector<EigenPair> lowest_eigenpairs(const DiscreteHamiltonian& op, int k) {
  if (k < 1 || k >= op.grid.size() / 4) throw std::invalid_argument("lowest_eigenpairs: need 1 <= k << n");
  return tridiagonal_lowest_eigenpairs(op.matrix, k, op.grid.spacing());
}

Eigen::VectorXd extrapolated_eigenvalues(const Potential& potential, const Grid1D& grid, double lambda, int k) {
  const Eigen::VectorXd coarse = tridiagonal_lowest_eigenvalues(build_hamiltonian(potential, grid, lambda).matrix, k);
  const Eigen::VectorXd fine =
      tridiagonal_lowest_eigenvalues(build_hamiltonian(potential, grid.refined(), lambda).matrix, k);
  return (4.0 * fine - coarse) / 3.0;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw std::invalid_argument("log_spaced: need 0 < lo <= hi, n >= 1");
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  out.back() = hi;
  return out;
}

GapCurve gap_curve(const Potential& potential, std::span<const double> lambdas, const Grid1D& grid) {
  GapCurve curve;
  curve.delta_min = std::numeric_limits<double>::infinity();
  curve.argmin_lambda = std::numeric_limits<double>::quiet_NaN();
  for (double lambda : lambdas) {
    if (!(lambda > 0.0)) throw std::invalid_argument("gap_curve: lambdas must be positive");
  }
  for (double lambda : lambdas) {
    curve.lambdas.push_back(lambda);
    try {
      const auto pairs = lowest_eigenpairs(build_hamiltonian(potential, grid, lambda), 2);
      const double gap = pairs[1].value - pairs[0].value;
      curve.e0.push_back(pairs[0].value);
      curve.e1.push_back(pairs[1].value);
      curve.delta.push_back(gap);
      curve.valid.push_back(true);
      if (gap < curve.delta_min) {
        curve.delta_min = gap;
        curve.argmin_lambda = lambda;
      }
    } catch (const EigenSolverError& e) {
      warn(fmt::format("gap_curve: lambda = {} skipped: {}", lambda, e.what()));
      const double nan = std::numeric_limits<double>::quiet_NaN();
      curve.e0.push_back(nan);
      curve.e1.push_back(nan);
      curve.delta.push_back(nan);
      curve.valid.push_back(false);
    }
  }
  return curve;
}

double semiclassical_reference(const DoubleWell& dw, int n) {
  if (n < 0) throw std::invalid_argument("semiclassical_reference: n must be >= 0");
  return (n + 0.5) * dw.gamma();
}

WaveState harmonic_approx_state(double lambda, const DoubleWell& dw, const Grid1D& grid) {
  if (!(lambda > 0.0)) throw std::invalid_argument("harmonic_approx_state: lambda must be positive");
  const double gamma = dw.gamma();
  const double width = 1.0 / std::sqrt(2.0 * gamma * lambda);
  if (width < 3.0 * grid.spacing())
    warn(fmt::format("harmonic_approx_state: Gaussian width {:.3g} is under 3h = {:.3g}", width,
                     3.0 * grid.spacing()));
  const Eigen::ArrayXd x = grid.nodes() - dw.x_star;
  const double amp = std::pow(lambda * gamma / std::numbers::pi, 0.25);
  WaveState s(1, grid, (amp * (-0.5 * gamma * lambda * x.square()).exp()).cast<std::complex<double>>());
  s.normalize();
  return s;
}

WaveState ground_state(const Potential& potential, const Grid1D& grid, double lambda) {
  const auto pairs = lowest_eigenpairs(build_hamiltonian(potential, grid, lambda), 1);
  return WaveState(1, grid, pairs[0].vector.array().cast<std::complex<double>>());
}

GroundStateStats ground_state_stats(const WaveState& state, double lambda, const DoubleWell& dw,
                                    std::optional<double> beta, std::span<const double> s_values) {
  if (state.dim != 1) throw std::invalid_argument("ground_state_stats: 1D states only");
  const double h = state.grid.spacing();
  const Eigen::ArrayXd density = state.amplitudes.abs2() * h;
  const Eigen::ArrayXd y = state.grid.nodes() - dw.x_star;
  const double mass = density.sum();

  GroundStateStats out;
  out.lambda = lambda;
  const double mean = (density * y).sum() / mass;
  out.sigma_sq = (density * (y - mean).square()).sum() / mass;
  out.beta_hat = lambda * out.sigma_sq;
  out.beta_used = beta.value_or(out.beta_hat);
  out.mgf_margin = -std::numeric_limits<double>::infinity();

  const double y_max = y.abs().maxCoeff();
  const double log_cap = std::log(1e300);
  for (double s : s_values) {
    MgfSample sample;
    sample.s = s;
    if (std::abs(s) * y_max > log_cap) {
      sample.skipped = true;
      warn(fmt::format("ground_state_stats: exp(s x) overflows for s = {}; sample skipped", s));
    } else {
      sample.log_mgf = std::log((density * (s * y).exp()).sum() / mass);
      sample.margin = sample.log_mgf - 0.5 * s * s * out.beta_used / lambda;
      out.mgf_margin = std::max(out.mgf_margin, sample.margin);
    }
    out.samples.push_back(sample);
  }
  if (!(out.sigma_sq > 0.0)) throw NumericalError("ground_state_stats: non-positive variance");
  return out;
}

SubGaussianSweep sub_gaussian_sweep(const DoubleWell& dw, std::span<const double> lambdas, const Grid1D& grid,
                                    std::span<const double> s_values) {
  if (lambdas.size() < 2) throw std::invalid_argument("sub_gaussian_sweep: need two or more lambdas");
  std::vector<WaveState> states;
  SubGaussianSweep sweep;
  for (double lambda : lambdas) {
    states.push_back(ground_state(well_potential(dw), grid, lambda));
    sweep.beta_fit = std::max(sweep.beta_fit, ground_state_stats(states.back(), lambda, dw, std::nullopt, {}).beta_hat);
  }
  std::vector<double> log_lambda, log_sigma;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    sweep.stats.push_back(ground_state_stats(states[i], lambdas[i], dw, sweep.beta_fit, s_values));
    log_lambda.push_back(std::log(lambdas[i]));
    log_sigma.push_back(std::log(sweep.stats.back().sigma_sq));
  }
  sweep.log_log_slope = fit_line(log_lambda, log_sigma).slope;
  return sweep;
}

void write_gap_csv(std::ostream& out, const GapCurve& curve, const std::vector<GroundStateStats>* stats) {
  out << "lambda,e0,e1,delta";
  if (stats) out << ",sigma_sq,beta_hat";
  out << '\n';
  for (std::size_t i = 0; i < curve.lambdas.size(); ++i) {
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}", curve.lambdas[i], curve.e0[i], curve.e1[i], curve.delta[i]);
    if (stats) out << fmt::format(",{:.17g},{:.17g}", (*stats)[i].sigma_sq, (*stats)[i].beta_hat);
    out << '\n';
  }
}

}  // namespace qhdlab
