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

#include "qmaxent/maxent_solver.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qmaxent {

NoisyOracle::NoisyOracle(const GibbsFamily& family, double delta, std::uint64_t seed)
    : family_(family), delta_(delta), rng_(seed) {
  if (!(delta >= 0.0)) throw std::invalid_argument("noise level must be >= 0");
}

Vector NoisyOracle::expectations(const Vector& mu) {
  Vector e = family_.expectations(mu);
  if (delta_ == 0.0) return e;
  Vector dir(e.size());
  for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = rng_.normal();
  const double norm = dir.norm();
  if (norm > 0.0) e += (delta_ * rng_.uniform() / norm) * dir;
  return e;
}

ShadowOracle::ShadowOracle(const GibbsModel& model, ShadowScheme scheme, std::size_t snapshots,
                           double declared_accuracy, int threads)
    : model_(model), scheme_(scheme), snapshots_(snapshots), accuracy_(declared_accuracy), threads_(threads) {
  scheme_.validate();
  for (const auto& op : model.basis()) {
    if (!op.pauli) throw std::invalid_argument("shadow oracle needs a Pauli-string basis");
    paulis_.push_back(*op.pauli);
  }
}

Vector ShadowOracle::expectations(const Vector& mu) {
  ShadowScheme s = scheme_;
  s.seed = derive_seed(scheme_.seed, "oracle-call", calls_++);
  const auto batch = sample(gibbs_state(model_, mu), s, snapshots_, threads_);
  return estimate(batch, paulis_).estimates;
}

void SolverOptions::validate() const {
  if (!(c > 10.0)) throw std::invalid_argument("safety constant c must be > 10");
  if (U && !(*U > 0.0)) throw std::invalid_argument("Hessian upper bound U must be > 0");
  if (L && !(*L > 0.0)) throw std::invalid_argument("strong-convexity constant L must be > 0");
  if (!(delta_mu > 0.0)) throw std::invalid_argument("gradient accuracy delta_mu must be > 0");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (trace_every < 0) throw std::invalid_argument("trace_every must be >= 0");
  if (!(data_eps >= 0.0)) throw std::invalid_argument("data accuracy must be >= 0");
}

double symmetric_divergence_from_expectations(const GibbsFamily& family, const Vector& lambda, const Vector& mu) {
  return -family.beta() * (lambda - mu).dot(family.expectations(lambda) - family.expectations(mu));
}

SolverResult solve(const GibbsFamily& family, const Vector& e_hat, ExpectationOracle& oracle,
                   const SolverOptions& opts, const Vector* lambda_true) {
  opts.validate();
  const int m = family.num_params();
  const double beta = family.beta();
  if (e_hat.size() != m) throw std::invalid_argument("target expectation length mismatch");
  if (lambda_true && lambda_true->size() != m) throw std::invalid_argument("true parameter length mismatch");
  if (oracle.accuracy() > opts.delta_mu) {
    throw std::invalid_argument("oracle accuracy exceeds the declared delta_mu");
  }
  const double U = opts.U.value_or(2.0 * beta * beta * m);
  const double threshold = (4.0 * opts.c + 1.0) * opts.delta_mu;
  const double sqrt_m = std::sqrt(static_cast<double>(m));

  SolverResult res;
  res.U = U;
  Vector mu = Vector::Zero(m);
  int t = 0;
  for (;; ++t) {
    const Vector e_prime = oracle.expectations(mu);
    if (opts.audit) {
      const double err = (e_prime - family.expectations(mu)).norm();
      if (err > oracle.accuracy() + 1e-12) {
        throw NumericalError("expectation oracle broke its accuracy contract at iteration " + std::to_string(t));
      }
    }
    const Vector z = beta * (e_hat - e_prime);
    res.residual = (e_hat - e_prime).norm();
    if (opts.trace_every > 0 && t % opts.trace_every == 0) {
      IterateRecord rec{t, mu, dual_objective(family, mu, e_hat), z.norm(), std::nullopt};
      if (lambda_true) rec.d_sym_exact = symmetric_divergence_from_expectations(family, *lambda_true, mu);
      res.iterates.push_back(std::move(rec));
    }
    if (res.residual < threshold) {
      res.halting = Halting::stopping_rule;
      break;
    }
    if (t >= opts.max_iters) {
      res.halting = Halting::max_iters;
      break;
    }
    mu = (mu - z / (opts.c * U)).cwiseMax(-1.0).cwiseMin(1.0);
  }
  res.mu_star = mu;
  res.iterations = t;

  auto& cert = res.certificate;
  cert.a_posteriori_bound = 2.0 * beta * sqrt_m * (res.residual + opts.delta_mu + sqrt_m * opts.data_eps);
  cert.d_sym_bound = res.halting == Halting::stopping_rule
                         ? 2.0 * (4.0 * opts.c + 1.0) * beta * opts.delta_mu * sqrt_m + 2.0 * beta * opts.data_eps * m
                         : cert.a_posteriori_bound;
  cert.trace_dist_bound = std::sqrt(cert.d_sym_bound);
  if (lambda_true) cert.exact_d_sym = symmetric_divergence_from_expectations(family, *lambda_true, mu);
  return res;
}

IterationBounds iteration_bounds(double U, std::optional<double> L, double beta, int n, int d, double delta_mu,
                                 double eps, double c) {
  if (!(U > 0.0) || !(beta > 0.0) || n < 1 || d < 2 || !(delta_mu > 0.0) || !(eps > 0.0)) {
    throw std::invalid_argument("iteration bounds need positive arguments and d >= 2");
  }
  if (!(c > 10.0)) throw std::invalid_argument("safety constant c must be > 10");
  const double nlogd = n * std::log(static_cast<double>(d));
  IterationBounds out;
  out.general = 10.0 * c * U * nlogd / (9.0 * beta * beta * (4.0 * c + 1.0) * (4.0 * c + 1.0) * delta_mu * delta_mu);
  if (L) {
    const double rate = 18.0 * *L / (10.0 * c * U);
    if (!(*L > 0.0) || rate >= 1.0) throw std::invalid_argument("strong-convexity constant must satisfy 0 < 18L < 10cU");
    out.strongly_convex = std::log(nlogd / eps) / -std::log1p(-rate);
  }
  return out;
}

ProgressAudit audit_progress(const std::vector<IterateRecord>& trajectory, const GibbsModel& model,
                             const Vector& lambda_true, double c, double U) {
  ProgressAudit a;
  const double beta = model.beta();
  const Vector e_lambda = model.expectations(lambda_true);
  const auto sigma_lambda = gibbs_state(model, lambda_true);
  for (const auto& rec : trajectory) {
    a.rel_entropy.push_back(relative_entropy(sigma_lambda, gibbs_state(model, rec.mu)));
    a.objective.push_back(dual_objective(model, rec.mu, e_lambda));
    const double gap = (model.expectations(rec.mu) - e_lambda).squaredNorm();
    a.guaranteed_drop.push_back(9.0 * beta * beta * gap / (10.0 * c * U));
  }
  for (std::size_t t = 1; t < trajectory.size(); ++t) {
    const double df = a.objective[t] - a.objective[t - 1];
    const double dd = a.rel_entropy[t] - a.rel_entropy[t - 1];
    a.max_identity_residual = std::max(a.max_identity_residual, std::abs(df - dd));
    if (dd > 1e-12 * std::max(1.0, a.rel_entropy[t - 1])) a.monotone = false;
    if (df > -a.guaranteed_drop[t - 1] + 1e-12 * std::max(1.0, std::abs(a.objective[t - 1]))) {
      if (a.progress_ok) a.first_progress_violation = trajectory[t].iter;
      a.progress_ok = false;
    }
  }
  return a;
}

}  // namespace qmaxent
