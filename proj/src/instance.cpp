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

#include "qhdlab/instance.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "qhdlab/random.hpp"

namespace qhdlab {

Eigen::VectorXd Instance::minimizer() const {
  return rotation.transpose() * Eigen::VectorXd::Constant(dim, well.x_star);
}

Eigen::MatrixXd sample_haar_orthogonal(int d, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("sample_haar_orthogonal: d must be >= 1");
  for (std::uint64_t substream = 0;; ++substream) {
    Rng rng(substream == 0 ? seed : derive_seed(seed, {substream}));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd g(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = normal(rng);

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    bool singular = false;
    for (int i = 0; i < d; ++i) singular = singular || r(i, i) == 0.0;
    if (singular) continue;

    Eigen::MatrixXd q = qr.householderQ();
    for (int j = 0; j < d; ++j) {
      if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    return q;
  }
}

namespace {

void check_orthogonal(const Eigen::MatrixXd& u) {
  if (u.rows() != u.cols() || u.rows() < 1) throw std::invalid_argument("instance: rotation must be square");
  const Eigen::MatrixXd err = u * u.transpose() - Eigen::MatrixXd::Identity(u.rows(), u.cols());
  if (err.cwiseAbs().maxCoeff() > 1e-12) throw std::invalid_argument("instance: rotation is not orthogonal");
}

}  // namespace

Instance make_instance(int dim, std::uint64_t seed, const DoubleWell& well) {
  if (dim < 1) throw std::invalid_argument("make_instance: dim must be >= 1");
  return Instance{dim, sample_haar_orthogonal(dim, seed), well, seed};
}

Instance make_identity_instance(int dim, const DoubleWell& well) {
  if (dim < 1) throw std::invalid_argument("make_identity_instance: dim must be >= 1");
  return Instance{dim, Eigen::MatrixXd::Identity(dim, dim), well, 0};
}

Instance make_instance_with_rotation(const Eigen::MatrixXd& rotation, std::uint64_t seed, const DoubleWell& well) {
  check_orthogonal(rotation);
  return Instance{static_cast<int>(rotation.rows()), rotation, well, seed};
}

std::vector<LocalMinimum> enumerate_local_minima(const Instance& inst) {
  if (inst.dim > 20) throw std::invalid_argument("enumerate_local_minima: d > 20 is not supported");
  const std::uint64_t count = std::uint64_t{1} << inst.dim;
  std::vector<LocalMinimum> out;
  out.reserve(count);
  Eigen::VectorXd v(inst.dim);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    int seconds = 0;
    for (int k = 0; k < inst.dim; ++k) {
      const bool second = (mask >> k) & 1U;
      v[k] = second ? inst.well.x_second : inst.well.x_star;
      seconds += second;
    }
    LocalMinimum m;
    m.point = inst.rotation.transpose() * v;
    m.value = eval_objective(inst, m.point);
    m.second_well_count = seconds;
    out.push_back(std::move(m));
  }
  return out;
}

std::string instance_to_json(const Instance& inst) {
  nlohmann::ordered_json j;
  j["dim"] = inst.dim;
  j["seed"] = inst.seed;
  j["c"] = inst.well.c;
  j["box_M"] = inst.well.box_M;
  std::vector<double> u;
  u.reserve(static_cast<std::size_t>(inst.dim) * inst.dim);
  for (int i = 0; i < inst.dim; ++i)
    for (int k = 0; k < inst.dim; ++k) u.push_back(inst.rotation(i, k));
  j["U"] = u;
  return j.dump(2);
}

Instance instance_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const int dim = j.at("dim").get<int>();
  if (dim < 1) throw std::invalid_argument("instance file: dim must be >= 1");
  const auto u = j.at("U").get<std::vector<double>>();
  if (u.size() != static_cast<std::size_t>(dim) * dim)
    throw std::invalid_argument("instance file: U must hold dim*dim entries");
  const double box_M = j.contains("box_M") ? j.at("box_M").get<double>() : 4.0;
  const DoubleWell well = make_double_well(box_M);
  if (j.contains("c") && std::abs(j.at("c").get<double>() - well.c) > 1e-12)
    throw std::invalid_argument("instance file: offset c does not match the canonical well");

  Eigen::MatrixXd rotation(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) rotation(i, k) = u[static_cast<std::size_t>(i) * dim + k];
  return make_instance_with_rotation(rotation, j.at("seed").get<std::uint64_t>(), well);
}

void save_instance(const Instance& inst, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << instance_to_json(inst) << '\n';
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

}  // namespace qhdlab
