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

#include "qhdlab/double_well.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace qhdlab {

namespace {

// Real roots of the depressed cubic t^3 + p t + q = 0 with three real roots,
// ascending.
std::array<double, 3> depressed_cubic_roots(double p, double q) {
  const double m = 2.0 * std::sqrt(-p / 3.0);
  const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
  const double theta = std::acos(arg) / 3.0;
  std::array<double, 3> roots{};
  for (int k = 0; k < 3; ++k) {
    roots[k] = m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

// Newton iteration on w' safeguarded by a bracket, stops at |step| <= 1e-15.
double polish_root(const DoubleWell& dw, double x, double lo, double hi) {
  double flo = well_derivative(dw, lo);
  for (int it = 0; it < 200; ++it) {
    const double f = well_derivative(dw, x);
    if (f == 0.0) return x;
    if ((f < 0.0) == (flo < 0.0)) {
      lo = x;
      flo = f;
    } else {
      hi = x;
    }
    double next = x - f / well_second_derivative(dw, x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  return x;
}

}  // namespace

double DoubleWell::gamma() const { return std::sqrt(gamma_sq); }

DoubleWell make_double_well(double box_M) {
  if (!(box_M > 0.0)) throw std::invalid_argument("make_double_well: box_M must be positive");
  DoubleWell dw;
  dw.box_M = box_M;
  dw.c = 0.0;

  // w'(x) = 4x^3 - 2x + 2*shift  ->  x^3 - x/2 + shift/2 = 0.
  const auto approx = depressed_cubic_roots(-0.5, 0.5 * dw.shift);
  std::array<double, 3> roots{};
  for (int k = 0; k < 3; ++k) {
    const double width = 1e-3;
    roots[k] = polish_root(dw, approx[k], approx[k] - width, approx[k] + width);
  }

  const double v0 = well_value(dw, roots[0]);
  const double v2 = well_value(dw, roots[2]);
  const bool left_is_global = v0 <= v2;
  dw.x_star = left_is_global ? roots[0] : roots[2];
  dw.x_second = left_is_global ? roots[2] : roots[0];
  dw.x_barrier = roots[1];
  dw.c = std::min(v0, v2);
  dw.second_value = well_value(dw, dw.x_second);
  dw.gamma_sq = well_second_derivative(dw, dw.x_star);
  dw.rho = std::max(std::abs(well_second_derivative(dw, box_M)), 2.0);
  return dw;
}

}  // namespace qhdlab
