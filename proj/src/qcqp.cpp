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

#include "qhdlab/qcqp.hpp"

#include <fmt/format.h>

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace qhdlab {

int QcqpModel::aux_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  // Row-major enumeration of the upper triangle.
  return dim + i * dim - i * (i - 1) / 2 + (j - i);
}

Eigen::VectorXd QcqpModel::lift(const Eigen::VectorXd& x) const {
  if (x.size() != dim) throw std::invalid_argument("qcqp: dimension mismatch");
  Eigen::VectorXd v(variable_count());
  v.head(dim) = x;
  for (const auto& con : constraints) v[con.aux] = x[con.i] * x[con.j];
  return v;
}

double QcqpModel::objective(const Eigen::VectorXd& values) const {
  if (values.size() != variable_count()) throw std::invalid_argument("qcqp: assignment size mismatch");
  double total = constant;
  for (const auto& t : linear) total += t.coef * values[t.a];
  for (const auto& t : quadratic) total += t.coef * values[t.a] * values[t.b];
  return total;
}

double QcqpModel::objective_at(const Eigen::VectorXd& x) const { return objective(lift(x)); }

double QcqpModel::max_constraint_violation(const Eigen::VectorXd& values) const {
  double worst = 0.0;
  for (const auto& con : constraints)
    worst = std::max(worst, std::abs(values[con.aux] - values[con.i] * values[con.j]));
  return worst;
}

QcqpModel export_qcqp(const Instance& inst) {
  const int d = inst.dim;
  QcqpModel m;
  m.dim = d;
  for (int i = 0; i < d; ++i) m.names.push_back(fmt::format("x{}", i + 1));
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      m.names.push_back(fmt::format("X{}_{}", i + 1, j + 1));
      m.constraints.push_back({m.aux_index(i, j), i, j});
    }

  const int n_aux = d * (d + 1) / 2;
  // y_k = U_k . x,  y_k^2 = a_k . X with a_k(ii) = U_ki^2, a_k(ij) = 2 U_ki U_kj.
  // w(y) = (y^2)^2 - y^2 + y/16 - 1/1024 - c for shift 1/32.
  const double shift = inst.well.shift;
  Eigen::MatrixXd quad = Eigen::MatrixXd::Zero(n_aux, n_aux);
  Eigen::VectorXd lin_aux = Eigen::VectorXd::Zero(n_aux);
  Eigen::VectorXd lin_x = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd a(n_aux);
  for (int k = 0; k < d; ++k) {
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        const double uu = inst.rotation(k, i) * inst.rotation(k, j);
        a[m.aux_index(i, j) - d] = (i == j) ? uu : 2.0 * uu;
      }
    quad += a * a.transpose();
    lin_aux -= a;
    lin_x += 2.0 * shift * inst.rotation.row(k).transpose();
  }
  m.constant = -d * (shift * shift + inst.well.c);

  for (int i = 0; i < d; ++i)
    if (lin_x[i] != 0.0) m.linear.push_back({i, -1, lin_x[i]});
  for (int p = 0; p < n_aux; ++p)
    if (lin_aux[p] != 0.0) m.linear.push_back({d + p, -1, lin_aux[p]});
  for (int p = 0; p < n_aux; ++p)
    for (int q = p; q < n_aux; ++q) {
      const double coef = (p == q) ? quad(p, p) : 2.0 * quad(p, q);
      if (coef != 0.0) m.quadratic.push_back({d + p, d + q, coef});
    }
  return m;
}

namespace {

std::string num(double v) { return fmt::format("{:+.17g}", v); }

}  // namespace

std::string qcqp_to_text(const QcqpModel& model, const std::string& header_comment) {
  std::ostringstream out;
  out << "\\ qhdlab QCQP model\n";
  if (!header_comment.empty()) out << "\\ " << header_comment << '\n';
  out << "VARIABLES\n";
  for (const auto& n : model.names) out << "  " << n << " free\n";
  out << "OBJECTIVE\n  minimize\n";
  for (const auto& t : model.linear) out << "  " << num(t.coef) << ' ' << model.names[t.a] << '\n';
  for (const auto& t : model.quadratic)
    out << "  " << num(t.coef) << ' ' << model.names[t.a] << " * " << model.names[t.b] << '\n';
  out << "  " << num(model.constant) << '\n';
  out << "CONSTRAINTS\n";
  int idx = 1;
  for (const auto& c : model.constraints)
    out << "  p" << idx++ << ": " << model.names[c.aux] << " = " << model.names[c.i] << " * " << model.names[c.j]
        << '\n';
  out << "END\n";
  return out.str();
}

QcqpModel qcqp_from_text(const std::string& text) {
  QcqpModel m;
  std::map<std::string, int> index;
  enum class Section { none, variables, objective, constraints, done } section = Section::none;
  std::istringstream in(text);
  std::string line;
  auto lookup = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw std::invalid_argument("qcqp text: unknown variable " + name);
    return it->second;
  };
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first) || first[0] == '\\') continue;
    if (first == "VARIABLES") { section = Section::variables; continue; }
    if (first == "OBJECTIVE") { section = Section::objective; continue; }
    if (first == "CONSTRAINTS") { section = Section::constraints; continue; }
    if (first == "END") { section = Section::done; break; }
    switch (section) {
      case Section::variables: {
        index[first] = static_cast<int>(m.names.size());
        m.names.push_back(first);
        if (first[0] == 'x') m.dim += 1;
        break;
      }
      case Section::objective: {
        if (first == "minimize") break;
        const double coef = std::stod(first);
        std::string a, star, b;
        if (!(ls >> a)) {
          m.constant += coef;
        } else if (!(ls >> star)) {
          m.linear.push_back({lookup(a), -1, coef});
        } else {
          if (star != "*" || !(ls >> b)) throw std::invalid_argument("qcqp text: malformed term: " + line);
          int ia = lookup(a), ib = lookup(b);
          if (ia > ib) std::swap(ia, ib);
          m.quadratic.push_back({ia, ib, coef});
        }
        break;
      }
      case Section::constraints: {
        std::string aux, eq, a, star, b;
        if (!(ls >> aux >> eq >> a >> star >> b) || eq != "=" || star != "*")
          throw std::invalid_argument("qcqp text: malformed constraint: " + line);
        m.constraints.push_back({lookup(aux), lookup(a), lookup(b)});
        break;
      }
      default:
        throw std::invalid_argument("qcqp text: content outside a section: " + line);
    }
  }
  if (section != Section::done) throw std::invalid_argument("qcqp text: missing END");
  return m;
}

}  // namespace qhdlab
