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
#include <vector>

namespace qhdlab {

/// Real symmetric tridiagonal matrix.
struct SymTridiagonal {
  Eigen::VectorXd diag;
  Eigen::VectorXd off;  // size n-1

  Eigen::Index size() const { return diag.size(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  /// Gershgorin interval containing the spectrum.
  std::pair<double, double> gershgorin() const;
  /// Number of eigenvalues strictly below x (Sturm sequence).
  Eigen::Index count_below(double x) const;
};

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;  // normalized so weight * |v|^2 = 1
  double residual = 0.0;   // ||T v - value v|| / ||v||
};

/// The k lowest eigenpairs, ascending. Eigenvalues by Sturm bisection,
/// vectors by inverse iteration with a pivoted tridiagonal LU and
/// Rayleigh-quotient refinement. Vectors are scaled so that
/// weight * sum v_i^2 = 1 and their largest-magnitude entry is positive.
/// Throws EigenSolverError if any residual exceeds rel_tol * max(|value|, 1e-300).
std::vector<EigenPair> tridiagonal_lowest_eigenpairs(const SymTridiagonal& t, int k, double weight = 1.0,
                                                     double rel_tol = 1e-8);

/// The k lowest eigenvalues only (bisection).
Eigen::VectorXd tridiagonal_lowest_eigenvalues(const SymTridiagonal& t, int k);

}  // namespace qhdlab
