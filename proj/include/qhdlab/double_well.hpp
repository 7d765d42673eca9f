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

#include <stdexcept>

namespace qhdlab {

/// Asymmetric quartic double well w(x) = x^4 - (x - shift)^2 - c.
///
/// The offset c is the minimum of the unshifted quartic, so the global
/// minimum of w is exactly zero at x_star. All fields are filled by
/// make_double_well(); the struct is a plain value and safe to share.
struct DoubleWell {
  double shift = 1.0 / 32.0;  // horizontal shift inside the quadratic term
  double c = 0.0;             // vertical offset, min_x of x^4 - (x - shift)^2
  double x_star = 0.0;        // global minimizer
  double x_second = 0.0;      // secondary (local) minimizer
  double x_barrier = 0.0;     // local maximum between the two wells
  double second_value = 0.0;  // w(x_second), the constant C
  double gamma_sq = 0.0;      // w''(x_star)
  double rho = 0.0;           // sup_{|x| <= box_M} |w''(x)|
  double box_M = 4.0;         // truncation half-width

  double gamma() const;
  /// Success threshold C/2 used by the benchmark.
  double success_threshold() const { return 0.5 * second_value; }
};

/// Builds the canonical well with shift 1/32. Stationary points come from
/// the trigonometric form of the cubic w'(x) = 0 and are polished by
/// bracketed Newton/bisection to 1e-12.
DoubleWell make_double_well(double box_M = 4.0);

template <typename Scalar>
Scalar well_value(const DoubleWell& dw, const Scalar& x) {
  const Scalar x2 = x * x;
  const Scalar y = x - Scalar(dw.shift);
  return x2 * x2 - y * y - Scalar(dw.c);
}

template <typename Scalar>
Scalar well_derivative(const DoubleWell& dw, const Scalar& x) {
  return Scalar(4) * x * x * x - Scalar(2) * (x - Scalar(dw.shift));
}

template <typename Scalar>
Scalar well_second_derivative(const DoubleWell&, const Scalar& x) {
  return Scalar(12) * x * x - Scalar(2);
}

/// Value (order 0), first (1) or second (2) derivative of w at x.
inline double eval_well(const DoubleWell& dw, double x, int order) {
  switch (order) {
    case 0:
      return well_value(dw, x);
    case 1:
      return well_derivative(dw, x);
    case 2:
      return well_second_derivative(dw, x);
    default:
      throw std::invalid_argument("eval_well: order must be 0, 1 or 2");
  }
}

}  // namespace qhdlab
