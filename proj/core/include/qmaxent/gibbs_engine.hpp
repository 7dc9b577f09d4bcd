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
#include <vector>

#include "qmaxent/operator_core.hpp"

namespace qmaxent {

/// A family of Gibbs states sigma(mu) = exp(-beta sum_i mu_i E_i) / Z(mu)
/// exposed through the quantities the max-entropy solver needs.
class GibbsFamily {
 public:
  virtual ~GibbsFamily() = default;

  virtual int num_params() const = 0;
  virtual double beta() const = 0;
  /// Number of sites n and local dimension d; n log d bounds D(sigma(l)||sigma(0)).
  virtual int num_sites() const = 0;
  virtual int local_dim() const = 0;

  virtual double log_partition(const Vector& mu) const = 0;
  /// e_i(mu) = tr[sigma(mu) E_i].
  virtual Vector expectations(const Vector& mu) const = 0;
};

/// Condition report for the Hilbert-Schmidt Gram matrix of the basis.
struct BasisQuality {
  double gram_condition;
  /// Set when the Gram matrix is numerically singular (condition > 1e10).
  bool near_degenerate;
};

class GibbsModel final : public GibbsFamily {
 public:
  GibbsModel(SiteSystem system, std::vector<LocalOperator> basis, double beta);

  int num_params() const override { return static_cast<int>(basis_.size()); }
  double beta() const override { return beta_; }
  int num_sites() const override { return system_.sites(); }
  int local_dim() const override { return system_.local_dim(); }

  double log_partition(const Vector& mu) const override;
  Vector expectations(const Vector& mu) const override;

  const SiteSystem& system() const { return system_; }
  const std::vector<LocalOperator>& basis() const { return basis_; }
  /// E_i embedded in the full space.
  const Matrix& dense(int i) const { return dense_[static_cast<std::size_t>(i)]; }
  /// True when every pair [E_i, E_j] vanishes (checked numerically).
  bool commuting() const { return commuting_; }
  const BasisQuality& quality() const { return quality_; }

  /// H(mu) = sum_i mu_i E_i.
  Matrix hamiltonian(const Vector& mu) const;
  GibbsModel with_beta(double beta) const;

 private:
  void check_params(const Vector& mu) const;

  SiteSystem system_;
  std::vector<LocalOperator> basis_;
  double beta_;
  std::vector<Matrix> dense_;
  bool commuting_ = false;
  BasisQuality quality_{};
};

/// Spectral data of beta H(mu) with log-sum-exp stabilized Boltzmann weights.
struct GibbsSpectrum {
  HermitianEigen eig;   // of H(mu)
  Vector weights;       // normalized exp(-beta (e_a - e_min)), sums to 1
  double log_partition;
};

GibbsSpectrum gibbs_spectrum(const GibbsModel& model, const Vector& mu);

DensityOperator gibbs_state(const GibbsModel& model, const Vector& mu);
double log_partition(const GibbsModel& model, const Vector& mu);
Vector expectations(const GibbsModel& model, const Vector& mu);

/// f(mu) = log Z(mu) + beta <mu, e_target>.
double dual_objective(const GibbsFamily& family, const Vector& mu, const Vector& e_target);
/// (grad f)_i = beta (e_target_i - e_i(mu)).
Vector dual_gradient(const GibbsFamily& family, const Vector& mu, const Vector& e_target);

enum class HessianMethod { spectral, commuting, finite_diff };

/// Hessian of f (equivalently of log Z). `fd_step` is used by finite_diff only.
Eigen::MatrixXd dual_hessian(const GibbsModel& model, const Vector& mu, HessianMethod method,
                             double fd_step = 1e-4);

/// D(rho||sigma) = tr[rho (log rho - log sigma)]. sigma must be full rank
/// (min eigenvalue > 1e-12); eigenvalues of rho below 1e-14 drop out.
double relative_entropy(const Matrix& rho, const Matrix& sigma);
double relative_entropy(const DensityOperator& rho, const DensityOperator& sigma);

struct SymmetricDivergence {
  double direct;         // D(sigma(mu)||sigma(lambda)) + D(sigma(lambda)||sigma(mu))
  double inner_product;  // -beta <lambda - mu, e(lambda) - e(mu)>
  double residual;       // |direct - inner_product|
};

SymmetricDivergence symmetric_divergence(const GibbsModel& model, const Vector& lambda, const Vector& mu);

}  // namespace qmaxent
