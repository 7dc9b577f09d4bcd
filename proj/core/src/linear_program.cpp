// Copyright 2026 The qmaxent Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qmaxent/linear_program.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace qmaxent {

LpSolution maximize_packing_lp(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  if (b.size() != rows || c.size() != cols) throw std::invalid_argument("LP dimensions do not match");
  if ((b.array() < 0.0).any()) throw std::invalid_argument("LP right-hand side must be nonnegative");
  constexpr double kEps = 1e-12;

  // Tableau: [A I | b] with objective row [-c 0 | 0].
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(rows + 1, cols + rows + 1);
  t.topLeftCorner(rows, cols) = a;
  t.block(0, cols, rows, rows).setIdentity();
  t.topRightCorner(rows, 1) = b;
  t.bottomLeftCorner(1, cols) = -c.transpose();
  std::vector<Eigen::Index> basic(static_cast<std::size_t>(rows));
  for (Eigen::Index r = 0; r < rows; ++r) basic[static_cast<std::size_t>(r)] = cols + r;

  LpSolution sol;
  const Eigen::Index rhs = cols + rows;
  for (int iter = 0; iter < 100000; ++iter) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < rhs; ++j) {
      if (t(rows, j) < -kEps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (t(r, enter) > kEps) {
        const double ratio = t(r, rhs) / t(r, enter);
        if (ratio < best - kEps ||
            (ratio <= best + kEps && leave >= 0 && basic[static_cast<std::size_t>(r)] < basic[static_cast<std::size_t>(leave)])) {
          best = std::min(best, ratio);
          leave = r;
        }
      }
    }
    if (leave < 0) {
      sol.bounded = false;
      sol.value = std::numeric_limits<double>::infinity();
      return sol;
    }
    t.row(leave) /= t(leave, enter);
    for (Eigen::Index r = 0; r <= rows; ++r) {
      if (r != leave && t(r, enter) != 0.0) t.row(r) -= t(r, enter) * t.row(leave);
    }
    basic[static_cast<std::size_t>(leave)] = enter;
  }
  sol.x = Eigen::VectorXd::Zero(cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (basic[static_cast<std::size_t>(r)] < cols) sol.x(basic[static_cast<std::size_t>(r)]) = t(r, rhs);
  }
  sol.value = c.dot(sol.x);
  return sol;
}

}  // namespace qmaxent
