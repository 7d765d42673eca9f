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

#include <cmath>

#include "qhdlab/grid.hpp"

namespace qhdlab {

namespace {

Eigen::Index state_size(int dim, const Grid1D& g) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("WaveState: dim must be 1 or 2");
  return dim == 1 ? g.size() : static_cast<Eigen::Index>(g.size()) * g.size();
}

}  // namespace

WaveState::WaveState(int dim_, const Grid1D& g) : dim(dim_), grid(g), amplitudes(Eigen::ArrayXcd::Zero(state_size(dim_, g))) {}

WaveState::WaveState(int dim_, const Grid1D& g, Eigen::ArrayXcd amps) : dim(dim_), grid(g), amplitudes(std::move(amps)) {
  if (amplitudes.size() != state_size(dim_, g)) throw std::invalid_argument("WaveState: amplitude count mismatch");
}

double WaveState::cell_volume() const { return std::pow(grid.spacing(), dim); }

double WaveState::norm() const { return std::sqrt(cell_volume() * amplitudes.abs2().sum()); }

void WaveState::normalize() {
  const double n = norm();
  if (!(n > 0.0)) throw std::domain_error("WaveState: cannot normalize a zero state");
  amplitudes /= n;
}

std::complex<double> WaveState::inner(const WaveState& other) const {
  if (other.amplitudes.size() != amplitudes.size()) throw std::invalid_argument("WaveState: size mismatch");
  return cell_volume() * (amplitudes.conjugate() * other.amplitudes).sum();
}

double WaveState::distance(const WaveState& other) const {
  if (other.amplitudes.size() != amplitudes.size()) throw std::invalid_argument("WaveState: size mismatch");
  return std::sqrt(cell_volume() * (amplitudes - other.amplitudes).abs2().sum());
}

double WaveState::coordinate(Eigen::Index idx, int axis) const {
  const int n = grid.size();
  if (dim == 1) return grid.node(static_cast<int>(idx));
  const auto i = static_cast<int>(idx / n);
  const auto j = static_cast<int>(idx % n);
  return grid.node(axis == 0 ? i : j);
}

WaveState uniform_state(int dim, const Grid1D& grid) {
  WaveState s(dim, grid);
  s.amplitudes.setConstant(std::complex<double>(1.0, 0.0));
  s.normalize();
  return s;
}

}  // namespace qhdlab
