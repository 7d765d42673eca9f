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


#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "qhdlab/double_well.hpp"
#include "qhdlab/instance.hpp"
#include "qhdlab/solvers.hpp"

using namespace qhdlab;

namespace {

// Central-difference Hessian of the objective, built from gradients.
Eigen::MatrixXd numeric_hessian(const Instance& inst, const Eigen::VectorXd& x, double h = 1e-5) {
  const int d = inst.dim;
  Eigen::MatrixXd hess(d, d);
  for (int j = 0; j < d; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e[j] = h;
    hess.col(j) = (eval_gradient(inst, x + e) - eval_gradient(inst, x - e)) / (2 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

}  // namespace

TEST_CASE("double well constants match a dense scan") {
  const DoubleWell dw = make_double_well();
  double best = 1e300, best_x = 0.0;
  for (int i = 0; i <= 400000; ++i) {
    const double x = -2.0 + 4.0 * i / 400000.0;
    const double v = std::pow(x, 4) - std::pow(x - 1.0 / 32.0, 2);
    if (v < best) best = v, best_x = x;
  }
  CHECK(dw.c == doctest::Approx(best).epsilon(1e-9));
  CHECK(dw.x_star == doctest::Approx(best_x).epsilon(1e-4));
  CHECK(well_value(dw, dw.x_star) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(dw.x_star == doctest::Approx(-0.7222).epsilon(1e-4));
  CHECK(dw.second_value == doctest::Approx(0.08837).epsilon(1e-3));
  CHECK(dw.gamma_sq == doctest::Approx(4.2596).epsilon(1e-4));
  CHECK(dw.success_threshold() == doctest::Approx(dw.second_value / 2));
  CHECK(well_derivative(dw, dw.x_second) == doctest::Approx(0.0).scale(1.0));
  CHECK(well_derivative(dw, dw.x_barrier) == doctest::Approx(0.0).scale(1.0));
  CHECK(dw.x_star < dw.x_barrier);
  CHECK(dw.x_barrier < dw.x_second);
}

TEST_CASE("Haar samples are orthogonal and cover both determinant signs") {
  int negative = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Eigen::MatrixXd u = sample_haar_orthogonal(5, seed);
    CHECK((u.transpose() * u - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-12);
    if (u.determinant() < 0) ++negative;
  }
  CHECK(negative > 60);
  CHECK(negative < 140);
  CHECK(sample_haar_orthogonal(3, 11).isApprox(sample_haar_orthogonal(3, 11), 0.0));
}

TEST_CASE("Haar entries have second moment 1/d") {
  for (int d : {2, 4, 8}) {
    const int draws = 4000;
    double mean = 0.0;
    for (int s = 0; s < draws; ++s) {
      const Eigen::MatrixXd u = sample_haar_orthogonal(d, 1000 + s);
      mean += u(0, 0) * u(0, 0);
    }
    mean /= draws;
    // Var(U11^2) = 2 (d - 1) / (d^2 (d + 2)) for the Haar measure.
    const double sd = std::sqrt(2.0 * (d - 1) / (d * d * (d + 2.0)) / draws);
    CHECK(std::abs(mean - 1.0 / d) < 4 * sd);
  }
}

TEST_CASE("gradient agrees with central differences") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (int d = 1; d <= 6; ++d) {
    const Instance inst = make_instance(d, 40 + d);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd x(d);
      for (int i = 0; i < d; ++i) x[i] = 1.5 * normal(rng);
      const Eigen::VectorXd g = eval_gradient(inst, x);
      Eigen::VectorXd fd(d);
      const double h = 1e-6;
      for (int i = 0; i < d; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
        e[i] = h;
        fd[i] = (eval_objective(inst, x + e) - eval_objective(inst, x - e)) / (2 * h);
      }
      CHECK((g - fd).norm() <= 1e-4 * std::max(1.0, g.norm()));
      Eigen::VectorXd g2(d);
      CHECK(eval_objective_and_gradient(inst, x, g2) == doctest::Approx(eval_objective(inst, x)));
      CHECK((g2 - g).norm() < 1e-12 * std::max(1.0, g.norm()));
    }
  }
}

TEST_CASE("objective is a sum of wells in rotated coordinates") {
  const Instance inst = make_instance(3, 9);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(3, -0.4, 0.9);
  const Eigen::VectorXd y = inst.rotation * x;
  double direct = 0.0;
  for (int k = 0; k < 3; ++k) direct += std::pow(y[k], 4) - std::pow(y[k] - 1.0 / 32.0, 2) - inst.well.c;
  CHECK(eval_objective(inst, x) == doctest::Approx(direct).epsilon(1e-13));
  CHECK(eval_objective(inst, inst.minimizer()) == doctest::Approx(0.0).scale(1.0).epsilon(1e-13));
  CHECK(is_success(inst, inst.minimizer()));
}

TEST_CASE("enumerated minima are the basins local_minimize reaches") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  for (int d = 1; d <= 4; ++d) {
    const Instance inst = make_instance(d, 70 + d);
    const auto minima = enumerate_local_minima(inst);
    REQUIRE(minima.size() == (std::size_t{1} << d));
    for (const auto& m : minima) {
      CHECK(eval_gradient(inst, m.point).norm() < 1e-10);
      CHECK(m.value == doctest::Approx(m.second_well_count * inst.well.second_value).scale(1.0).epsilon(1e-10));
      const Eigen::VectorXd jitter = 0.05 * Eigen::VectorXd::NullaryExpr(d, [&] { return normal(rng); });
      const LocalResult r = local_minimize(inst, m.point + jitter);
      CHECK(r.converged);
      CHECK((r.x - m.point).norm() < 1e-6);
    }
    // Random starts all end at one of the enumerated minima.
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::VectorXd x0 = 1.5 * Eigen::VectorXd::NullaryExpr(d, [&] { return normal(rng); });
      const LocalResult r = local_minimize(inst, x0);
      double nearest = 1e300;
      for (const auto& m : minima) nearest = std::min(nearest, (r.x - m.point).norm());
      CHECK(nearest < 1e-6);
    }
  }
}

TEST_CASE("Hessian is positive definite at every local minimum") {
  const Instance inst = make_instance(3, 5);
  for (const auto& m : enumerate_local_minima(inst)) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(numeric_hessian(inst, m.point));
    CHECK(es.eigenvalues().minCoeff() > 0.5);
  }
}

TEST_CASE("instance JSON round trip preserves the objective") {
  const Instance inst = make_instance(4, 123);
  const Instance back = instance_from_json(instance_to_json(inst));
  CHECK(back.dim == 4);
  CHECK(back.seed == 123);
  CHECK(back.rotation.isApprox(inst.rotation, 0.0));
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, -1.0, 1.0);
  CHECK(eval_objective(back, x) == eval_objective(inst, x));
  CHECK_THROWS_AS(make_instance_with_rotation(Eigen::MatrixXd::Constant(2, 2, 1.0), 0), std::invalid_argument);
  CHECK_THROWS_AS(instance_from_json("{\"dim\": 2}"), std::exception);
}
