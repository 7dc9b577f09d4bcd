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

#include <optional>
#include <string>
#include <vector>

#include "qmaxent/operator_core.hpp"

namespace qmaxent {

// Hamming-type quantities use the sqrt(n) convention:
//   ||O||_Lip = sqrt(n) max_i max{tr O(rho - sigma) : tr_i rho = tr_i sigma}
//            = 2 sqrt(n) max_i min_Y ||O - I_i (x) Y||_inf,
//   W1(rho, sigma) = min{sum_i ||X_i||_1 : rho - sigma = sum_i X_i, tr_i X_i = 0} / (2 sqrt(n)).

/// Jump operators L_k with Bohr frequencies omega_k for a full-rank reference
/// state: sigma L_k sigma^{-1} = exp(-omega_k) L_k.
struct DifferentialStructure {
  SiteSystem system;
  std::vector<Matrix> ops;
  std::vector<double> omega;
  std::optional<Matrix> reference;

  /// Checks adjoint closure, the modular eigen-relation (1e-8) and ||L_k|| <= 1.
  /// Returns an empty string when valid, otherwise the first violation.
  std::string check(double tol = 1e-8) const;
};

/// All single-site Paulis with omega = 0, adapted to the maximally mixed state.
DifferentialStructure depolarizing_structure(const SiteSystem& system);

/// Per qubit: L = (p(1-p))^{1/4} a with a = |1><0| and omega = log((1-p)/p),
/// plus its adjoint with -omega. Adapted to the product of diag(1-p, p).
/// With `circuit` set, every operator and the reference are conjugated by it.
DifferentialStructure shallow_circuit_structure(const SiteSystem& system, double p,
                                                const std::optional<Matrix>& circuit = std::nullopt);

/// sqrt(sum_k (e^{-omega_k/2} + e^{omega_k/2}) ||[L_k, O]||_inf^2).
double lip_diff(const Matrix& o, const DifferentialStructure& ds);

/// 2 sqrt(n) max_j sum_{i : j in supp O_i} ||O_i||_inf.
double lip_hamming_upper(const std::vector<LocalOperator>& terms, const SiteSystem& system);

struct Bracket {
  double lower = 0.0;
  double upper = 0.0;
  bool certified = false;  // upper - lower <= tol
  double value() const { return 0.5 * (lower + upper); }
};

/// min_Y ||O - I_site (x) Y||_inf by annealed log-sum-exp smoothing of the
/// operator norm. The lower end comes from a feasible primal witness X
/// (Hermitian, tr_site X = 0, ||X||_1 <= 1) via tr(O X).
Bracket site_distance(const Matrix& o, const SiteSystem& system, int site, double tol = 1e-6);

/// Hamming Lipschitz constant bracket. Limited to dim <= 256.
Bracket lip_hamming_exact(const Matrix& o, const SiteSystem& system, double tol = 1e-6);

/// Quasi-local (k, g) class membership of a given decomposition.
struct QuasiLocalClass {
  int k = 1;
  double g = 1.0;
  bool contains(const std::vector<LocalOperator>& decomposition, const SiteSystem& system) const;
};

enum class W1Mode { hamming, loc };

struct W1Options {
  W1Mode mode = W1Mode::hamming;
  QuasiLocalClass loc;
  /// When set, the upper bound is also capped by sqrt(D(rho||sigma) / (2 alpha)).
  std::optional<double> tc_alpha;
};

struct W1Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Hamming mode: lower from the best of several witnesses scaled by their
/// Lipschitz upper bounds; upper from the telescoping decomposition minimized
/// over site orderings. Loc mode: the exact value (1/sqrt(n)) max sum_A t_A
/// ||tr_{A^c}(rho - sigma)||_1 over sum_{A ni v} t_A <= g, solved as an LP.
W1Bounds w1_bounds(const DensityOperator& rho, const DensityOperator& sigma, const W1Options& opts = {});

/// Upper bound from one ordering of the telescoping decomposition.
double w1_telescoping(const Matrix& delta, const SiteSystem& system, const std::vector<int>& order);

struct TcConstant {
  double beta_c;
  double tc_factor;  // W1_loc <= tc_factor sqrt(D)
};

/// beta_c = 1 / (8 e^3 g k), tc_factor = sqrt(2 g / (beta_c - beta)).
TcConstant tc_constant_local(int k, double g, double beta);

struct TcRecord {
  double w1_lower;
  double w1_upper;
  double divergence;
  double tc_rhs;
  bool violated;
};

struct TcReport {
  std::vector<TcRecord> records;
  int violations = 0;
};

/// Checks w1_lower(rho, sigma) <= rhs_factor * sqrt(D(rho||sigma)) per state.
/// For a constant alpha use rhs_factor = 1 / sqrt(2 alpha).
TcReport tc_verify(const DensityOperator& sigma, const std::vector<DensityOperator>& ensemble, double rhs_factor,
                   const W1Options& opts = {}, int threads = 1);

/// sqrt(n - k) (k + (e^{v t} - 1) e^{-mu} / (1 - e^{-mu})).
double lr_growth_1d(int k, double v, double mu_decay, double t, int n);

struct ShallowSurrogate {
  double beta_eps;
  double d_exact_per_qubit;
  double d_total;
  double stated_bound;  // n eps
};

/// Relative entropy of |0><0|^{(x) n} against the product of e^{beta Z}/tr with
/// beta = log(1/eps), next to the n eps bound.
ShallowSurrogate shallow_surrogate(double eps, int n);

}  // namespace qmaxent
