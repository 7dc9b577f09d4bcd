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

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace qmaxent {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;

/// Hermiticity tolerance, relative to max(1, ||X||_fro).
inline constexpr double kHermitianTol = 1e-12;

/// Raised when an operation's numerical contract cannot be met (singular
/// reference states, non-convergence, oracle contract breaches).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// n sites of local dimension d. The full space is (C^d)^{(x) n} with site 0
/// as the most significant tensor factor.
class SiteSystem {
 public:
  static constexpr std::size_t kDefaultDimensionCap = 4096;

  SiteSystem(int n, int d = 2, std::size_t dimension_cap = kDefaultDimensionCap);

  int sites() const { return n_; }
  int local_dim() const { return d_; }
  std::size_t dim() const { return dim_; }

  /// Digit of `site` in the base-d expansion of a full basis index.
  int digit(std::size_t index, int site) const;
  std::size_t stride(int site) const { return strides_[static_cast<std::size_t>(site)]; }

  bool operator==(const SiteSystem& other) const { return n_ == other.n_ && d_ == other.d_; }

 private:
  int n_;
  int d_;
  std::size_t dim_;
  std::vector<std::size_t> strides_;
};

/// A single-site Pauli factor, site is 0-indexed.
struct PauliFactor {
  int site;
  char letter;  // 'X', 'Y' or 'Z'
  bool operator==(const PauliFactor&) const = default;
};

/// Tensor product of single-qubit Paulis. The empty string is the identity.
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::vector<PauliFactor> factors);

  /// Parses "Z1*Z2", "x3", "I" (identity). Sites are 1-indexed in text.
  static PauliString parse(std::string_view text);

  const std::vector<PauliFactor>& factors() const { return factors_; }
  std::vector<int> support() const;
  int weight() const { return static_cast<int>(factors_.size()); }
  bool is_identity() const { return factors_.empty(); }
  bool is_diagonal() const;
  /// Letter acting on `site`, 'I' when the site is outside the support.
  char letter_at(int site) const;
  std::string str() const;

  bool operator==(const PauliString&) const = default;

 private:
  std::vector<PauliFactor> factors_;
};

/// 2x2 Pauli matrix for 'I', 'X', 'Y', 'Z'.
Matrix pauli_matrix(char letter);

/// Dense operator acting on an ordered subset of sites. The tensor factors of
/// `matrix` follow the order of `support`.
struct LocalOperator {
  std::vector<int> support;
  Matrix matrix;
  std::optional<PauliString> pauli;

  static LocalOperator from_pauli(const PauliString& p);
  bool is_hermitian(double tol = kHermitianTol) const;
};

/// Validated density operator: Hermitian, unit trace (1e-10), eigenvalues
/// >= -1e-10.
class DensityOperator {
 public:
  DensityOperator(Matrix matrix, SiteSystem system);

  const Matrix& matrix() const { return matrix_; }
  const SiteSystem& system() const { return system_; }

  static DensityOperator maximally_mixed(const SiteSystem& system);
  /// Product of single-site states, site 0 first.
  static DensityOperator product(std::span<const Matrix> factors, const SiteSystem& system);

 private:
  Matrix matrix_;
  SiteSystem system_;
};

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
struct HermitianEigen {
  Vector values;
  Matrix vectors;
};

/// Symmetrizes (X + X^dagger)/2 after checking the Hermiticity tolerance.
Matrix hermitian_part(const Matrix& x, double tol = kHermitianTol);
bool is_hermitian(const Matrix& x, double tol = kHermitianTol);
HermitianEigen eigh(const Matrix& h);

/// U f(diag) U^dagger from a full eigendecomposition.
Matrix herm_fn(const Matrix& h, const std::function<double(double)>& f);
Matrix herm_fn(const HermitianEigen& eig, const std::function<double(double)>& f);

/// Tensor-product embedding of `op` into the full space.
Matrix embed_local(const LocalOperator& op, const SiteSystem& system);
Matrix embed_pauli(const PauliString& p, const SiteSystem& system);

/// Traces out `traced_sites`; the result acts on the remaining sites in
/// ascending order. Tracing every site gives a 1x1 matrix holding tr(X).
Matrix partial_trace(const Matrix& x, const SiteSystem& system, std::span<const int> traced_sites);

/// Sites of `system` not contained in `sites`, ascending.
std::vector<int> complement_sites(const SiteSystem& system, std::span<const int> sites);

/// Kronecker product a (x) b.
Matrix kron(const Matrix& a, const Matrix& b);
Matrix commutator(const Matrix& a, const Matrix& b);

double operator_norm(const Matrix& x);
double trace_norm(const Matrix& x);
double frobenius_norm(const Matrix& x);
/// ||Y||_{2,sigma} = ||sigma^{1/4} Y sigma^{1/4}||_fro. sigma must be full rank.
double weighted_two_norm(const Matrix& y, const Matrix& sigma);
/// <X, Y>_sigma = tr(sigma^{1/2} X^dagger sigma^{1/2} Y).
Complex weighted_inner(const Matrix& x, const Matrix& y, const Matrix& sigma);

/// Cached sigma^{1/4} and sigma^{1/2} for repeated weighted-norm evaluations.
class WeightedGeometry {
 public:
  explicit WeightedGeometry(const Matrix& sigma);

  double norm(const Matrix& y) const;
  Complex inner(const Matrix& x, const Matrix& y) const;
  const Matrix& sigma() const { return sigma_; }
  const Matrix& sqrt_sigma() const { return sqrt_sigma_; }

 private:
  Matrix sigma_;
  Matrix quarter_;
  Matrix sqrt_sigma_;
};

struct Norms {
  double operator_norm;
  double trace_norm;
  double frobenius;
  std::optional<double> weighted_two_norm;
};

Norms norms(const Matrix& x, const Matrix* sigma = nullptr);

/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const Matrix& h);

}  // namespace qmaxent
