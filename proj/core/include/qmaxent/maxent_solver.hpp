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

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "qmaxent/gibbs_engine.hpp"
#include "qmaxent/random.hpp"
#include "qmaxent/shadow_sampler.hpp"

namespace qmaxent {

/// Source of approximate expectations e'(mu) with ||e'(mu) - e(mu)||_2 <= accuracy().
class ExpectationOracle {
 public:
  virtual ~ExpectationOracle() = default;
  virtual Vector expectations(const Vector& mu) = 0;
  virtual double accuracy() const = 0;
};

/// Exact expectations from the family itself.
class ExactOracle final : public ExpectationOracle {
 public:
  explicit ExactOracle(const GibbsFamily& family) : family_(family) {}
  Vector expectations(const Vector& mu) override { return family_.expectations(mu); }
  double accuracy() const override { return 0.0; }

 private:
  const GibbsFamily& family_;
};

/// Exact expectations plus a random perturbation of l2 norm at most `delta`.
class NoisyOracle final : public ExpectationOracle {
 public:
  NoisyOracle(const GibbsFamily& family, double delta, std::uint64_t seed);
  Vector expectations(const Vector& mu) override;
  double accuracy() const override { return delta_; }

 private:
  const GibbsFamily& family_;
  double delta_;
  Rng rng_;
};

/// Shadow estimates from fresh snapshots of sigma(mu) on every call. The
/// basis must consist of Pauli strings. accuracy() is the declared l2
/// accuracy, which holds with the planned probability only.
class ShadowOracle final : public ExpectationOracle {
 public:
  ShadowOracle(const GibbsModel& model, ShadowScheme scheme, std::size_t snapshots, double declared_accuracy,
               int threads = 1);
  Vector expectations(const Vector& mu) override;
  double accuracy() const override { return accuracy_; }

 private:
  const GibbsModel& model_;
  ShadowScheme scheme_;
  std::size_t snapshots_;
  double accuracy_;
  int threads_;
  std::vector<PauliString> paulis_;
  std::uint64_t calls_ = 0;
};

struct SolverOptions {
  double c = 11.0;
  /// Upper bound on the Hessian of f; defaults to 2 beta^2 m.
  std::optional<double> U;
  /// Optional strong-convexity constant.
  std::optional<double> L;
  double delta_mu = 1e-6;
  int max_iters = 10000;
  /// Record every k-th iterate (0 disables the trajectory).
  int trace_every = 0;
  /// l_inf accuracy of e_hat itself; adds 2 beta eps m to the certificate.
  double data_eps = 0.0;
  /// Compare oracle output against exact expectations and fail on contract breach.
  bool audit = false;

  void validate() const;
};

enum class Halting { stopping_rule, max_iters };

struct Certificate {
  /// 2 (4c+1) beta delta_mu sqrt(m) + 2 beta data_eps m after a stopping-rule
  /// halt; the a posteriori bound otherwise.
  double d_sym_bound;
  double trace_dist_bound;
  /// 2 beta sqrt(m) (residual + delta_mu + sqrt(m) data_eps).
  double a_posteriori_bound;
  std::optional<double> exact_d_sym;
};

struct IterateRecord {
  int iter;
  Vector mu;
  double f;
  double grad_norm;
  std::optional<double> d_sym_exact;
};

struct SolverResult {
  Vector mu_star;
  Halting halting;
  int iterations;
  /// ||e_hat - e'(mu_star)||_2 at the final iterate.
  double residual;
  double U;
  std::vector<IterateRecord> iterates;
  Certificate certificate;
};

/// Projected gradient descent on f(mu) = log Z(mu) + beta <mu, e_hat> over the
/// unit l_inf ball, starting at 0. `lambda_true` enables exact D_sym reporting.
SolverResult solve(const GibbsFamily& family, const Vector& e_hat, ExpectationOracle& oracle,
                   const SolverOptions& opts, const Vector* lambda_true = nullptr);

/// D_sym(sigma(lambda), sigma(mu)) = -beta <lambda - mu, e(lambda) - e(mu)>.
double symmetric_divergence_from_expectations(const GibbsFamily& family, const Vector& lambda, const Vector& mu);

struct IterationBounds {
  double general;
  std::optional<double> strongly_convex;
};

/// general = 10 c U n log d / (9 beta^2 (4c+1)^2 delta_mu^2);
/// strongly_convex = log(n log d / eps) / (-log(1 - 18 L / (10 c U))).
IterationBounds iteration_bounds(double U, std::optional<double> L, double beta, int n, int d, double delta_mu,
                                 double eps, double c = 11.0);

struct ProgressAudit {
  std::vector<double> rel_entropy;      // D(sigma(lambda)||sigma(mu_t))
  std::vector<double> objective;        // f(mu_t) with e_hat = e(lambda)
  std::vector<double> guaranteed_drop;  // 9 beta^2 ||e(mu_t) - e(lambda)||^2 / (10 c U)
  double max_identity_residual = 0.0;   // |delta f - delta D| over steps
  bool monotone = true;
  bool progress_ok = true;
  int first_progress_violation = -1;
};

/// Replays a full trajectory (trace_every = 1) against the true parameters.
ProgressAudit audit_progress(const std::vector<IterateRecord>& trajectory, const GibbsModel& model,
                             const Vector& lambda_true, double c, double U);

}  // namespace qmaxent
