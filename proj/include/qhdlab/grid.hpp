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
#include <complex>
#include <numbers>
#include <stdexcept>

namespace qhdlab {

/// Uniform grid on [-M, M) with n nodes x_j = -M + j h, h = 2M/n.
/// The same nodes serve the Dirichlet finite-difference eigenproblem and
/// the periodic Fourier propagator.
class Grid1D {
 public:
  Grid1D(double half_width, int n) : half_width_(half_width), n_(n) {
    if (!(half_width > 0.0)) throw std::invalid_argument("Grid1D: half width must be positive");
    if (n < 64 || (n & (n - 1)) != 0) throw std::invalid_argument("Grid1D: n must be a power of two >= 64");
  }

  double half_width() const { return half_width_; }
  int size() const { return n_; }
  double spacing() const { return 2.0 * half_width_ / n_; }
  double node(int j) const { return -half_width_ + j * spacing(); }
  Eigen::ArrayXd nodes() const { return Eigen::ArrayXd::LinSpaced(n_, 0, n_ - 1) * spacing() - half_width_; }
  /// Angular wavenumbers in FFT order (0, 1, ..., n/2-1, -n/2, ..., -1) * 2pi/(2M).
  Eigen::ArrayXd wavenumbers() const;
  /// Same grid with n doubled.
  Grid1D refined() const { return Grid1D(half_width_, 2 * n_); }

  friend bool operator==(const Grid1D& a, const Grid1D& b) {
    return a.half_width_ == b.half_width_ && a.n_ == b.n_;
  }

 private:
  double half_width_;
  int n_;
};

inline Eigen::ArrayXd Grid1D::wavenumbers() const {
  Eigen::ArrayXd k(n_);
  const double dk = std::numbers::pi / half_width_;
  for (int m = 0; m < n_; ++m) k[m] = dk * (m < n_ / 2 ? m : m - n_);
  return k;
}

/// Complex amplitudes on Grid1D^dim (dim 1 or 2), row-major for dim 2:
/// index i * n + j holds (x_i, x_j). Normalized so h^dim sum |psi|^2 = 1.
struct WaveState {
  int dim = 1;
  Grid1D grid{4.0, 64};
  Eigen::ArrayXcd amplitudes;

  WaveState() = default;
  WaveState(int dim_, const Grid1D& g);
  WaveState(int dim_, const Grid1D& g, Eigen::ArrayXcd amps);

  double cell_volume() const;
  /// sqrt(h^dim sum |psi|^2).
  double norm() const;
  void normalize();
  /// Grid L2 inner product <a|b> (conjugate-linear in a).
  std::complex<double> inner(const WaveState& other) const;
  /// ||a - b|| in the grid L2 norm.
  double distance(const WaveState& other) const;
  /// Position of node index along `axis` for flat index `idx`.
  double coordinate(Eigen::Index idx, int axis) const;
};

/// Constant state on the periodic box (ground state of the free Laplacian).
WaveState uniform_state(int dim, const Grid1D& grid);

}  // namespace qhdlab
