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
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "qhdlab/double_well.hpp"

namespace qhdlab {

/// A member of the rotated separable family F_U(x) = sum_k w((U x)_k).
/// Immutable after construction.
struct Instance {
  int dim = 1;
  Eigen::MatrixXd rotation;  // U, orthogonal
  DoubleWell well;
  std::uint64_t seed = 0;

  /// x* = U^T (x_star, ..., x_star).
  Eigen::VectorXd minimizer() const;
};

/// Haar-distributed U in O(d): QR of a Gaussian matrix (filled row-major
/// from a mt19937_64 seeded with `seed`), columns of Q multiplied by
/// sign(diag R). A rank-deficient draw is retried on the next substream.
Eigen::MatrixXd sample_haar_orthogonal(int d, std::uint64_t seed);

Instance make_instance(int dim, std::uint64_t seed, const DoubleWell& well = make_double_well());
/// U = I; the unrotated separable instance.
Instance make_identity_instance(int dim, const DoubleWell& well = make_double_well());
/// Instance with a caller-supplied rotation (checked for orthogonality).
Instance make_instance_with_rotation(const Eigen::MatrixXd& rotation, std::uint64_t seed,
                                     const DoubleWell& well = make_double_well());

namespace detail {
inline void check_dim(const Instance& inst, Eigen::Index n) {
  if (n != inst.dim) throw std::invalid_argument("instance: dimension mismatch");
}
}  // namespace detail

template <typename Derived>
double eval_objective(const Instance& inst, const Eigen::MatrixBase<Derived>& x) {
  detail::check_dim(inst, x.size());
  const Eigen::VectorXd y = inst.rotation * x;
  double total = 0.0;
  for (Eigen::Index k = 0; k < y.size(); ++k) total += well_value(inst.well, y[k]);
  return total;
}

/// Gradient U^T g with g_k = w'((U x)_k).
template <typename Derived>
Eigen::VectorXd eval_gradient(const Instance& inst, const Eigen::MatrixBase<Derived>& x) {
  detail::check_dim(inst, x.size());
  Eigen::VectorXd g = inst.rotation * x;
  for (Eigen::Index k = 0; k < g.size(); ++k) g[k] = well_derivative(inst.well, g[k]);
  return inst.rotation.transpose() * g;
}

/// Value and gradient sharing one rotation product.
template <typename Derived>
double eval_objective_and_gradient(const Instance& inst, const Eigen::MatrixBase<Derived>& x,
                                   Eigen::VectorXd& grad) {
  detail::check_dim(inst, x.size());
  Eigen::VectorXd y = inst.rotation * x;
  double total = 0.0;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    total += well_value(inst.well, y[k]);
    y[k] = well_derivative(inst.well, y[k]);
  }
  grad.noalias() = inst.rotation.transpose() * y;
  return total;
}

/// F_U(y) <= C/2 with the exact computed C.
template <typename Derived>
bool is_success(const Instance& inst, const Eigen::MatrixBase<Derived>& y) {
  return eval_objective(inst, y) <= inst.well.success_threshold();
}

struct LocalMinimum {
  Eigen::VectorXd point;
  double value = 0.0;
  int second_well_count = 0;  // number of coordinates sitting in the x_second well
};

/// All 2^d points U^T v with v in {x_star, x_second}^d. Refuses d > 20.
std::vector<LocalMinimum> enumerate_local_minima(const Instance& inst);

/// Instance file: JSON {dim, seed, c, box_M, U (row-major)}.
std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& text);
void save_instance(const Instance& inst, const std::filesystem::path& path);
Instance load_instance(const std::filesystem::path& path);

}  // namespace qhdlab
