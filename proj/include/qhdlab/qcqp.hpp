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
#include <string>
#include <vector>

#include "qhdlab/instance.hpp"

namespace qhdlab {

/// Lifted quadratic model of a quartic instance. Variables are indexed
/// 0..d-1 for x_i and d.. for the products X_ij (i <= j), in row order.
struct QcqpModel {
  struct Term {
    int a = -1;  // first variable index (-1 for constant)
    int b = -1;  // second variable index (-1 for linear terms)
    double coef = 0.0;
  };
  /// Defines aux = x_i * x_j.
  struct ProductConstraint {
    int aux = 0;
    int i = 0;
    int j = 0;
  };

  int dim = 0;
  std::vector<std::string> names;
  double constant = 0.0;
  std::vector<Term> linear;     // b == -1
  std::vector<Term> quadratic;  // a <= b
  std::vector<ProductConstraint> constraints;

  int variable_count() const { return static_cast<int>(names.size()); }
  int aux_index(int i, int j) const;

  /// Objective at a full assignment of all variables.
  double objective(const Eigen::VectorXd& values) const;
  /// Objective at (x, x x^T); equals F_U(x) for an exported instance.
  double objective_at(const Eigen::VectorXd& x) const;
  /// max |X_ij - x_i x_j| over all constraints.
  double max_constraint_violation(const Eigen::VectorXd& values) const;
  Eigen::VectorXd lift(const Eigen::VectorXd& x) const;
};

QcqpModel export_qcqp(const Instance& inst);

/// Text serialization; grammar in docs/formats.md.
std::string qcqp_to_text(const QcqpModel& model, const std::string& header_comment = {});
QcqpModel qcqp_from_text(const std::string& text);

}  // namespace qhdlab
