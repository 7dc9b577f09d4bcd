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

#pragma once

#include <Eigen/Dense>

namespace qmaxent {

struct LpSolution {
  double value = 0.0;
  Eigen::VectorXd x;
  bool bounded = true;
};

/// maximize c^T x subject to A x <= b, x >= 0, with b >= 0 (the origin is
/// feasible). Dense tableau simplex with Bland's pivoting rule.
LpSolution maximize_packing_lp(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c);

}  // namespace qmaxent
