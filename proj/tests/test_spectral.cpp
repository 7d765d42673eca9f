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
#include <random>
#include <sstream>

#include "qhdlab/double_well.hpp"
#include "qhdlab/errors.hpp"
#include "qhdlab/fit.hpp"
#include "qhdlab/spectral.hpp"
#include "qhdlab/tridiagonal.hpp"

using namespace qhdlab;

namespace {

SymTridiagonal random_tridiagonal(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SymTridiagonal t;
  t.diag = Eigen::VectorXd::NullaryExpr(n, [&] { return 3.0 * u(rng); });
  t.off = Eigen::VectorXd::NullaryExpr(n - 1, [&] { return u(rng); });
  return t;
}

Eigen::MatrixXd dense(const SymTridiagonal& t) {
  const Eigen::Index n = t.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  m.diagonal() = t.diag;
  for (Eigen::Index i = 0; i + 1 < n; ++i) m(i, i + 1) = m(i + 1, i) = t.off[i];
  return m;
}

}  // namespace

TEST_CASE("tridiagonal matvec matches the dense product") {
  const SymTridiagonal t = random_tridiagonal(57, 1);
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(57, -2.0, 3.0);
  CHECK((t.apply(v) - dense(t) * v).norm() < 1e-12);
}

TEST_CASE("Sturm count and bisection agree with a dense eigensolver") {
  for (std::uint64_t seed : {2u, 3u, 4u}) {
    const SymTridiagonal t = random_tridiagonal(150, seed);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(t));
    const Eigen::VectorXd ref = es.eigenvalues();
    for (double x : {-2.0, 0.0, 0.7, 2.5}) CHECK(t.count_below(x) == (ref.array() < x).count());
    const auto [lo, hi] = t.gershgorin();
    CHECK(lo <= ref.minCoeff());
    CHECK(hi >= ref.maxCoeff());

    const auto pairs = tridiagonal_lowest_eigenpairs(t, 6);
    const Eigen::VectorXd values = tridiagonal_lowest_eigenvalues(t, 6);
    for (int i = 0; i < 6; ++i) {
      CHECK(pairs[i].value == doctest::Approx(ref[i]).epsilon(1e-11));
      CHECK(values[i] == doctest::Approx(ref[i]).epsilon(1e-11));
      const double overlap = std::abs(pairs[i].vector.dot(es.eigenvectors().col(i)));
      CHECK(overlap == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(pairs[i].residual < 1e-10);
    }
  }
}

TEST_CASE("eigenvectors carry the quadrature weight") {
  const SymTridiagonal t = random_tridiagonal(80, 9);
  const double w = 0.03;
  const auto pairs = tridiagonal_lowest_eigenpairs(t, 2, w);
  CHECK(w * pairs[0].vector.squaredNorm() == doctest::Approx(1.0));
  CHECK(pairs[0].vector.maxCoeff() >= -pairs[0].vector.minCoeff());
}

TEST_CASE("harmonic oscillator levels are (n + 1/2) for any lambda") {
  const Grid1D grid(8.0, 512);
  for (double lambda : {0.5, 2.0}) {
    const Eigen::VectorXd e = extrapolated_eigenvalues(harmonic_potential(1.0), grid, lambda, 3);
    for (int k = 0; k < 3; ++k) CHECK(e[k] == doctest::Approx(k + 0.5).epsilon(1e-5));
  }
  // Plain finite differences converge at second order.
  const auto coarse = lowest_eigenpairs(build_hamiltonian(harmonic_potential(1.0), grid, 1.0), 1);
  const auto fine = lowest_eigenpairs(build_hamiltonian(harmonic_potential(1.0), grid.refined(), 1.0), 1);
  const double ratio = (coarse[0].value - 0.5) / (fine[0].value - 0.5);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("double-well gap curve has a single interior minimum") {
  const DoubleWell dw = make_double_well();
  const Grid1D grid(4.0, 512);
  const auto lambdas = log_spaced(0.5, 50.0, 12);
  CHECK(lambdas.front() == 0.5);
  CHECK(lambdas.back() == 50.0);
  const GapCurve curve = gap_curve(dw, lambdas, grid);
  REQUIRE(curve.delta.size() == lambdas.size());
  for (bool v : curve.valid) CHECK(v);
  CHECK(curve.delta_min > 0.3);
  CHECK(curve.argmin_lambda > 2.0);
  CHECK(curve.argmin_lambda < 10.0);
  // Large lambda: the gap tends to the harmonic spacing gamma.
  CHECK(curve.delta.back() == doctest::Approx(dw.gamma()).epsilon(0.05));

  std::ostringstream csv;
  write_gap_csv(csv, curve);
  CHECK(csv.str().rfind("lambda,e0,e1,delta\n", 0) == 0);
}

TEST_CASE("ground state approaches the harmonic Gaussian") {
  const DoubleWell dw = make_double_well();
  const Grid1D grid(4.0, 1024);
  double previous = 1e300;
  for (double lambda : {5.0, 20.0, 80.0}) {
    WaveState g = ground_state(well_potential(dw), grid, lambda);
    CHECK(g.norm() == doctest::Approx(1.0).epsilon(1e-10));
    const WaveState h = harmonic_approx_state(lambda, dw, grid);
    const double dist = std::min(g.distance(h), [&] {
      WaveState neg = g;
      neg.amplitudes = -neg.amplitudes;
      return neg.distance(h);
    }());
    CHECK(dist < previous);
    previous = dist;
  }
}

TEST_CASE("ground-state variance scales like 1/(2 gamma lambda)") {
  const DoubleWell dw = make_double_well();
  const Grid1D grid(4.0, 2048);
  const double lambda = 80.0;
  const auto stats = ground_state_stats(ground_state(well_potential(dw), grid, lambda), lambda, dw);
  CHECK(stats.beta_hat == doctest::Approx(1.0 / (2.0 * dw.gamma())).epsilon(0.05));
  // For a Gaussian the margin would be zero at every s.
  CHECK(std::abs(stats.mgf_margin) < 0.1);
}

TEST_CASE("eigen solver rejects bad requests") {
  const Grid1D grid(4.0, 256);
  CHECK_THROWS_AS(build_hamiltonian(harmonic_potential(1.0), grid, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(lowest_eigenpairs(build_hamiltonian(harmonic_potential(1.0), grid, 1.0), 200),
                  std::invalid_argument);
  CHECK_THROWS_AS(Grid1D(4.0, 100), std::invalid_argument);
}

TEST_CASE("line fit recovers exact lines") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(2.5 * v - 1.0);
  const LineFit f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.5));
  CHECK(f.intercept == doctest::Approx(-1.0));
  CHECK(f.r_squared == doctest::Approx(1.0));
  const std::vector<double> same{2, 2};
  CHECK_THROWS_AS(fit_line(same, same), std::invalid_argument);
}
