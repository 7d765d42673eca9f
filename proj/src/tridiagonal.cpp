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

#include "qhdlab/tridiagonal.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

#include "qhdlab/errors.hpp"

namespace qhdlab {

Eigen::VectorXd SymTridiagonal::apply(const Eigen::VectorXd& v) const {
  const Eigen::Index n = size();
  Eigen::VectorXd out = diag.cwiseProduct(v);
  if (n > 1) {
    out.head(n - 1) += off.cwiseProduct(v.tail(n - 1));
    out.tail(n - 1) += off.cwiseProduct(v.head(n - 1));
  }
  return out;
}

std::pair<double, double> SymTridiagonal::gershgorin() const {
  const Eigen::Index n = size();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Eigen::Index i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(off[i - 1]);
    if (i + 1 < n) r += std::abs(off[i]);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  return {lo, hi};
}

Eigen::Index SymTridiagonal::count_below(double x) const {
  const Eigen::Index n = size();
  const double tiny = std::numeric_limits<double>::min() * 4.0;
  Eigen::Index count = 0;
  double q = diag[0] - x;
  if (q == 0.0) q = -tiny;
  if (q < 0.0) ++count;
  for (Eigen::Index i = 1; i < n; ++i) {
    q = (diag[i] - x) - off[i - 1] * off[i - 1] / q;
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

namespace {

double bisect_eigenvalue(const SymTridiagonal& t, Eigen::Index index, double lo, double hi) {
  const double scale = std::max(std::abs(lo), std::abs(hi));
  const double tol = 4.0 * std::numeric_limits<double>::epsilon() * scale;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (t.count_below(mid) > index) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// LU factorization of (T - shift I) with partial pivoting; U has two
// superdiagonals after fill-in.
class PivotedTridiagonalLU {
 public:
  PivotedTridiagonalLU(const SymTridiagonal& t, double shift) {
    const Eigen::Index n = t.size();
    u0_.resize(n);
    u1_.setZero(n);
    u2_.setZero(n);
    mult_.setZero(n);
    swapped_.assign(static_cast<std::size_t>(n), false);
    const auto [glo, ghi] = t.gershgorin();
    const double floor = std::numeric_limits<double>::epsilon() * std::max(std::abs(glo), std::abs(ghi));

    double cur_diag = t.diag[0] - shift;
    double cur_sup = n > 1 ? t.off[0] : 0.0;
    double cur_sup2 = 0.0;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      const double sub = t.off[k];
      const double nd = t.diag[k + 1] - shift;
      const double ns = k + 2 < n ? t.off[k + 1] : 0.0;
      double next_diag, next_sup;
      if (std::abs(sub) > std::abs(cur_diag)) {
        swapped_[static_cast<std::size_t>(k)] = true;
        u0_[k] = sub;
        u1_[k] = nd;
        u2_[k] = ns;
        const double m = cur_diag / sub;
        mult_[k] = m;
        next_diag = cur_sup - m * nd;
        next_sup = cur_sup2 - m * ns;
      } else {
        if (cur_diag == 0.0) cur_diag = floor;
        u0_[k] = cur_diag;
        u1_[k] = cur_sup;
        u2_[k] = cur_sup2;
        const double m = sub / cur_diag;
        mult_[k] = m;
        next_diag = nd - m * cur_sup;
        next_sup = ns - m * cur_sup2;
      }
      cur_diag = next_diag;
      cur_sup = next_sup;
      cur_sup2 = 0.0;
    }
    u0_[n - 1] = cur_diag;
    for (Eigen::Index k = 0; k < n; ++k)
      if (std::abs(u0_[k]) < floor) u0_[k] = u0_[k] < 0.0 ? -floor : floor;
  }

  void solve_in_place(Eigen::VectorXd& rhs) const {
    const Eigen::Index n = u0_.size();
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      if (swapped_[static_cast<std::size_t>(k)]) std::swap(rhs[k], rhs[k + 1]);
      rhs[k + 1] -= mult_[k] * rhs[k];
    }
    rhs[n - 1] /= u0_[n - 1];
    if (n > 1) rhs[n - 2] = (rhs[n - 2] - u1_[n - 2] * rhs[n - 1]) / u0_[n - 2];
    for (Eigen::Index k = n - 3; k >= 0; --k) {
      rhs[k] = (rhs[k] - u1_[k] * rhs[k + 1] - u2_[k] * rhs[k + 2]) / u0_[k];
    }
  }

 private:
  Eigen::VectorXd u0_, u1_, u2_, mult_;
  std::vector<bool> swapped_;
};

}  // namespace

Eigen::VectorXd tridiagonal_lowest_eigenvalues(const SymTridiagonal& t, int k) {
  const Eigen::Index n = t.size();
  if (k < 1 || k > n) throw std::invalid_argument("tridiagonal eigenvalues: need 1 <= k <= n");
  const auto [lo, hi] = t.gershgorin();
  Eigen::VectorXd values(k);
  double lower = lo;
  for (int i = 0; i < k; ++i) {
    values[i] = bisect_eigenvalue(t, i, lower, hi);
    lower = std::min(values[i], hi);
    // Bisection for the next index can start at the previous value: the
    // count there is at most i + 1.
    lower = std::max(lo, lower - 8.0 * std::numeric_limits<double>::epsilon() * std::abs(lower));
  }
  return values;
}

std::vector<EigenPair> tridiagonal_lowest_eigenpairs(const SymTridiagonal& t, int k, double weight, double rel_tol) {
  const Eigen::Index n = t.size();
  const Eigen::VectorXd values = tridiagonal_lowest_eigenvalues(t, k);
  std::vector<EigenPair> pairs;
  pairs.reserve(static_cast<std::size_t>(k));

  for (int i = 0; i < k; ++i) {
    PivotedTridiagonalLU lu(t, values[i]);
    // Deterministic start vector with components along every eigenvector.
    Eigen::VectorXd v(n);
    for (Eigen::Index j = 0; j < n; ++j) v[j] = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(j) + 0.3 * i);
    v.normalize();
    for (int it = 0; it < 4; ++it) {
      lu.solve_in_place(v);
      for (const auto& prev : pairs) v -= (prev.vector.dot(v) * weight) * prev.vector;
      v.normalize();
    }
    const Eigen::VectorXd tv = t.apply(v);
    const double rayleigh = v.dot(tv);
    const double residual = (tv - rayleigh * v).norm();
    if (!(residual <= rel_tol * std::max(std::abs(rayleigh), 1e-300))) {
      throw EigenSolverError(
          fmt::format("eigenpair {} did not converge: residual {:.3e} for eigenvalue {:.17g}", i, residual, rayleigh),
          residual);
    }
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    v /= std::sqrt(weight);
    pairs.push_back({rayleigh, std::move(v), residual});
  }
  return pairs;
}

}  // namespace qhdlab
