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

#include "qmaxent/gibbs_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qmaxent {

namespace {

// Re tr(A B) for square matrices.
double real_trace_product(const Matrix& a, const Matrix& b) {
  return (a.cwiseProduct(b.transpose())).sum().real();
}

bool paulis_commute(const PauliString& a, const PauliString& b) {
  int anticommuting = 0;
  for (const auto& f : a.factors()) {
    const char other = b.letter_at(f.site);
    if (other != 'I' && other != f.letter) ++anticommuting;
  }
  return anticommuting % 2 == 0;
}

bool disjoint(const std::vector<int>& a, const std::vector<int>& b) {
  return std::none_of(a.begin(), a.end(), [&](int s) { return std::find(b.begin(), b.end(), s) != b.end(); });
}

}  // namespace

GibbsModel::GibbsModel(SiteSystem system, std::vector<LocalOperator> basis, double beta)
    : system_(system), basis_(std::move(basis)), beta_(beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("inverse temperature must be > 0");
  if (basis_.empty()) throw std::invalid_argument("basis must contain at least one operator");
  dense_.reserve(basis_.size());
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    auto& op = basis_[i];
    if (!op.is_hermitian()) throw std::invalid_argument("basis element " + std::to_string(i) + " is not Hermitian");
    op.matrix = hermitian_part(op.matrix);
    if (operator_norm(op.matrix) > 1.0 + 1e-10) {
      throw std::invalid_argument("basis element " + std::to_string(i) + " has operator norm > 1");
    }
    dense_.push_back(embed_local(op, system_));
  }

  commuting_ = true;
  for (std::size_t i = 0; i < basis_.size() && commuting_; ++i) {
    for (std::size_t j = i + 1; j < basis_.size(); ++j) {
      bool ok = false;
      if (disjoint(basis_[i].support, basis_[j].support)) {
        ok = true;
      } else if (basis_[i].pauli && basis_[j].pauli) {
        ok = paulis_commute(*basis_[i].pauli, *basis_[j].pauli);
      } else {
        ok = commutator(dense_[i], dense_[j]).norm() <= 1e-10 * std::max(1.0, dense_[i].norm());
      }
      if (!ok) {
        commuting_ = false;
        break;
      }
    }
  }

  const auto m = static_cast<Eigen::Index>(basis_.size());
  Eigen::MatrixXd gram(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      gram(i, j) = gram(j, i) = real_trace_product(dense_[static_cast<std::size_t>(i)], dense_[static_cast<std::size_t>(j)]);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gs(gram, Eigen::EigenvaluesOnly);
  const double lo = gs.eigenvalues()(0);
  const double hi = gs.eigenvalues()(m - 1);
  quality_.gram_condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  quality_.near_degenerate = !(quality_.gram_condition < 1e10);
}

void GibbsModel::check_params(const Vector& mu) const {
  if (mu.size() != num_params()) {
    throw std::invalid_argument("parameter length " + std::to_string(mu.size()) + " != basis size " +
                                std::to_string(num_params()));
  }
}

Matrix GibbsModel::hamiltonian(const Vector& mu) const {
  check_params(mu);
  const auto dim = static_cast<Eigen::Index>(system_.dim());
  Matrix h = Matrix::Zero(dim, dim);
  for (std::size_t i = 0; i < dense_.size(); ++i) {
    if (mu(static_cast<Eigen::Index>(i)) != 0.0) h += mu(static_cast<Eigen::Index>(i)) * dense_[i];
  }
  return h;
}

GibbsModel GibbsModel::with_beta(double beta) const { return GibbsModel(system_, basis_, beta); }

double GibbsModel::log_partition(const Vector& mu) const { return gibbs_spectrum(*this, mu).log_partition; }

Vector GibbsModel::expectations(const Vector& mu) const { return qmaxent::expectations(*this, mu); }

GibbsSpectrum gibbs_spectrum(const GibbsModel& model, const Vector& mu) {
  GibbsSpectrum out;
  out.eig = eigh(model.hamiltonian(mu));
  const double beta = model.beta();
  const double e_min = out.eig.values(0);
  out.weights = (-(beta * (out.eig.values.array() - e_min))).exp();
  const double s = out.weights.sum();
  out.weights /= s;
  out.log_partition = -beta * e_min + std::log(s);
  return out;
}

namespace {

Matrix state_from_spectrum(const GibbsSpectrum& spec) {
  Matrix rho = spec.eig.vectors * spec.weights.cast<Complex>().asDiagonal() * spec.eig.vectors.adjoint();
  return (rho + rho.adjoint()) * 0.5;
}

}  // namespace

DensityOperator gibbs_state(const GibbsModel& model, const Vector& mu) {
  return {state_from_spectrum(gibbs_spectrum(model, mu)), model.system()};
}

double log_partition(const GibbsModel& model, const Vector& mu) { return gibbs_spectrum(model, mu).log_partition; }

Vector expectations(const GibbsModel& model, const Vector& mu) {
  const Matrix rho = state_from_spectrum(gibbs_spectrum(model, mu));
  Vector e(model.num_params());
  for (int i = 0; i < model.num_params(); ++i) e(i) = real_trace_product(rho, model.dense(i));
  return e;
}

double dual_objective(const GibbsFamily& family, const Vector& mu, const Vector& e_target) {
  if (e_target.size() != family.num_params()) throw std::invalid_argument("target length mismatch");
  return family.log_partition(mu) + family.beta() * mu.dot(e_target);
}

Vector dual_gradient(const GibbsFamily& family, const Vector& mu, const Vector& e_target) {
  if (e_target.size() != family.num_params()) throw std::invalid_argument("target length mismatch");
  return family.beta() * (e_target - family.expectations(mu));
}

Eigen::MatrixXd dual_hessian(const GibbsModel& model, const Vector& mu, HessianMethod method, double fd_step) {
  const int m = model.num_params();
  const double beta = model.beta();
  Eigen::MatrixXd hess(m, m);

  switch (method) {
    case HessianMethod::spectral: {
      // Divided differences of x -> exp(-beta x) in the eigenbasis of H(mu).
      const GibbsSpectrum spec = gibbs_spectrum(model, mu);
      const Vector& h = spec.eig.values;
      const Vector& w = spec.weights;
      const auto dim = h.size();
      Eigen::MatrixXd g(dim, dim);
      for (Eigen::Index a = 0; a < dim; ++a) {
        for (Eigen::Index b = 0; b <= a; ++b) {
          // eigenvalues ascending: h(a) >= h(b)
          const double gap = h(a) - h(b);
          const double v = gap > 1e-300 ? w(b) * std::expm1(-beta * gap) / gap : -beta * w(b);
          g(a, b) = g(b, a) = v;
        }
      }
      std::vector<Matrix> rotated(static_cast<std::size_t>(m));
      Vector e(m);
      for (int i = 0; i < m; ++i) {
        rotated[static_cast<std::size_t>(i)] = spec.eig.vectors.adjoint() * model.dense(i) * spec.eig.vectors;
        e(i) = (rotated[static_cast<std::size_t>(i)].diagonal().real().array() * w.array()).sum();
      }
      for (int j = 0; j < m; ++j) {
        const Matrix weighted = rotated[static_cast<std::size_t>(j)].cwiseProduct(g.cast<Complex>());
        for (int i = 0; i <= j; ++i) {
          const double s = (rotated[static_cast<std::size_t>(i)].conjugate().cwiseProduct(weighted)).sum().real();
          hess(i, j) = hess(j, i) = -beta * s - beta * beta * e(i) * e(j);
        }
      }
      break;
    }
    case HessianMethod::commuting: {
      if (!model.commuting()) throw std::invalid_argument("commuting Hessian requested for a non-commuting basis");
      const Matrix rho = gibbs_state(model, mu).matrix();
      Vector e(m);
      for (int i = 0; i < m; ++i) e(i) = real_trace_product(rho, model.dense(i));
      for (int i = 0; i < m; ++i) {
        const Matrix rho_ei = rho * model.dense(i);
        for (int j = 0; j <= i; ++j) {
          hess(i, j) = hess(j, i) = beta * beta * (real_trace_product(rho_ei, model.dense(j)) - e(i) * e(j));
        }
      }
      break;
    }
    case HessianMethod::finite_diff: {
      // d^2 f / dmu_j dmu_i = -beta d e_i / d mu_j
      for (int j = 0; j < m; ++j) {
        Vector plus = mu;
        Vector minus = mu;
        plus(j) += fd_step;
        minus(j) -= fd_step;
        hess.col(j) = -beta * (model.expectations(plus) - model.expectations(minus)) / (2.0 * fd_step);
      }
      hess = (0.5 * (hess + hess.transpose())).eval();
      break;
    }
  }
  return hess;
}

double relative_entropy(const Matrix& rho, const Matrix& sigma) {
  const auto sig = eigh(sigma);
  if (sig.values(0) <= 1e-12) throw NumericalError("relative entropy requires a full-rank second argument");
  const auto r = eigh(rho);
  double neg_entropy = 0.0;
  for (Eigen::Index a = 0; a < r.values.size(); ++a) {
    const double p = r.values(a);
    if (p > 1e-14) neg_entropy += p * std::log(p);
  }
  const Matrix log_sigma = herm_fn(sig, [](double v) { return std::log(v); });
  const double cross = real_trace_product(hermitian_part(rho), log_sigma);
  return std::max(0.0, neg_entropy - cross);
}

double relative_entropy(const DensityOperator& rho, const DensityOperator& sigma) {
  if (!(rho.system() == sigma.system())) throw std::invalid_argument("states live on different systems");
  return relative_entropy(rho.matrix(), sigma.matrix());
}

SymmetricDivergence symmetric_divergence(const GibbsModel& model, const Vector& lambda, const Vector& mu) {
  const auto s_lambda = gibbs_state(model, lambda);
  const auto s_mu = gibbs_state(model, mu);
  SymmetricDivergence out{};
  out.direct = relative_entropy(s_mu, s_lambda) + relative_entropy(s_lambda, s_mu);
  out.inner_product = -model.beta() * (lambda - mu).dot(model.expectations(lambda) - model.expectations(mu));
  out.residual = std::abs(out.direct - out.inner_product);
  return out;
}

}  // namespace qmaxent
