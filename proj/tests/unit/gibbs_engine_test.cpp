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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "qmaxent/gibbs_engine.hpp"

namespace qmaxent {
namespace {

std::vector<LocalOperator> paulis(const std::vector<std::string>& texts) {
  std::vector<LocalOperator> out;
  for (const auto& t : texts) out.push_back(LocalOperator::from_pauli(PauliString::parse(t)));
  return out;
}

GibbsModel heisenberg3(double beta) {
  return GibbsModel(SiteSystem(3), paulis({"X1*X2", "Y1*Y2", "Z1*Z2", "X2*X3", "Z2*Z3", "X1", "Z3"}), beta);
}

Vector random_mu(int m, Rng& rng) {
  Vector mu(m);
  for (int i = 0; i < m; ++i) mu(i) = rng.uniform(-1.0, 1.0);
  return mu;
}

TEST(GibbsModelTest, ValidatesBasis) {
  const SiteSystem sys(2);
  std::vector<LocalOperator> big{LocalOperator{{0}, 2.0 * pauli_matrix('Z'), std::nullopt}};
  EXPECT_THROW(GibbsModel(sys, big, 1.0), std::invalid_argument);
  Matrix nonh = Matrix::Zero(2, 2);
  nonh(0, 1) = 0.5;
  std::vector<LocalOperator> bad{LocalOperator{{0}, nonh, std::nullopt}};
  EXPECT_THROW(GibbsModel(sys, bad, 1.0), std::invalid_argument);
  EXPECT_THROW(GibbsModel(sys, paulis({"Z1"}), -1.0), std::invalid_argument);
}

TEST(GibbsModelTest, CommutingDetection) {
  EXPECT_TRUE(GibbsModel(SiteSystem(3), paulis({"Z1*Z2", "Z2*Z3", "Z1"}), 1.0).commuting());
  EXPECT_TRUE(GibbsModel(SiteSystem(3), paulis({"X1*X2", "Z1*Z2"}), 1.0).commuting());
  EXPECT_FALSE(GibbsModel(SiteSystem(3), paulis({"X1*X2", "Z2*Z3"}), 1.0).commuting());
  EXPECT_FALSE(heisenberg3(1.0).commuting());
}

TEST(GibbsEngineTest, LogPartitionAndStateMatchTaylor) {
  Rng rng(21);
  const auto model = heisenberg3(0.8);
  for (int trial = 0; trial < 3; ++trial) {
    const Vector mu = random_mu(model.num_params(), rng);
    const Matrix h = model.hamiltonian(mu);
    EXPECT_NEAR(log_partition(model, mu), oracle::log_partition(h, 0.8), 1e-10);
    EXPECT_TRUE(gibbs_state(model, mu).matrix().isApprox(oracle::gibbs(h, 0.8), 1e-10));
  }
}

TEST(GibbsEngineTest, LargeBetaIsStable) {
  const auto model = GibbsModel(SiteSystem(2), paulis({"Z1*Z2", "Z1"}), 500.0);
  Vector mu(2);
  mu << 1.0, 0.5;
  // ground energy -1.5 is unique: (+1, -1)... check log Z against the closed form
  const double lz = log_partition(model, mu);
  const double energies[] = {1.5, -0.5, -1.5, 0.5};
  double expect = 0;
  for (double e : energies) expect += std::exp(-500.0 * (e + 1.5));
  EXPECT_NEAR(lz, std::log(expect) + 500.0 * 1.5, 1e-9);
  EXPECT_TRUE(std::isfinite(expectations(model, mu).sum()));
}

TEST(GibbsEngineTest, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  const auto model = heisenberg3(1.3);
  const Vector mu = random_mu(model.num_params(), rng);
  const Vector target = random_mu(model.num_params(), rng) * 0.5;
  auto f = [&](const Eigen::VectorXd& x) { return dual_objective(model, x, target); };
  const Vector fd = oracle::fd_gradient(f, mu);
  EXPECT_LT((dual_gradient(model, mu, target) - fd).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(GibbsEngineTest, SpectralHessianMatchesFiniteDifferences) {
  Rng rng(8);
  const auto model = heisenberg3(0.9);
  const Vector mu = random_mu(model.num_params(), rng);
  auto lz = [&](const Eigen::VectorXd& x) { return log_partition(model, x); };
  const Eigen::MatrixXd fd = oracle::fd_hessian(lz, mu);
  const Eigen::MatrixXd spectral = dual_hessian(model, mu, HessianMethod::spectral);
  EXPECT_LT((spectral - fd).cwiseAbs().maxCoeff(), 1e-5);
  const Eigen::MatrixXd fd_engine = dual_hessian(model, mu, HessianMethod::finite_diff);
  EXPECT_LT((spectral - fd_engine).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_LT((spectral - spectral.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GibbsEngineTest, HessianIsPositiveSemidefinite) {
  Rng rng(9);
  const auto model = heisenberg3(2.0);
  for (int trial = 0; trial < 3; ++trial) {
    const Vector mu = random_mu(model.num_params(), rng);
    const Eigen::MatrixXd hess = dual_hessian(model, mu, HessianMethod::spectral);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(GibbsEngineTest, DegenerateSpectrumHessian) {
  // mu = 0 makes every eigenvalue equal, exercising the divided-difference limit
  const auto model = heisenberg3(1.0);
  const Vector mu = Vector::Zero(model.num_params());
  const Eigen::MatrixXd hess = dual_hessian(model, mu, HessianMethod::spectral);
  // at the maximally mixed state Hess_ij = beta^2 tr(E_i E_j)/D for traceless Paulis
  EXPECT_TRUE(hess.isApprox(Eigen::MatrixXd::Identity(7, 7), 1e-12));
}

TEST(GibbsEngineTest, CommutingHessianAgrees) {
  Rng rng(12);
  const auto model = GibbsModel(SiteSystem(3), paulis({"Z1*Z2", "Z2*Z3", "Z1", "Z2", "Z3"}), 1.1);
  const Vector mu = random_mu(model.num_params(), rng);
  const Eigen::MatrixXd a = dual_hessian(model, mu, HessianMethod::commuting);
  const Eigen::MatrixXd b = dual_hessian(model, mu, HessianMethod::spectral);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_THROW(dual_hessian(heisenberg3(1.0), Vector::Zero(7), HessianMethod::commuting), std::invalid_argument);
}

TEST(RelativeEntropyTest, MatchesGibbsClosedForm) {
  Rng rng(13);
  const auto model = heisenberg3(0.7);
  const Vector a = random_mu(7, rng);
  const Vector b = random_mu(7, rng);
  const double direct = relative_entropy(gibbs_state(model, a).matrix(), gibbs_state(model, b).matrix());
  EXPECT_NEAR(direct, oracle::gibbs_relative_entropy(model.hamiltonian(a), model.hamiltonian(b), 0.7), 1e-10);
  EXPECT_GE(direct, 0.0);
  EXPECT_NEAR(relative_entropy(gibbs_state(model, a), gibbs_state(model, a)), 0.0, 1e-12);
}

TEST(RelativeEntropyTest, RejectsSingularSigma) {
  Matrix pure = Matrix::Zero(2, 2);
  pure(0, 0) = 1.0;
  EXPECT_THROW(relative_entropy(Matrix::Identity(2, 2) / 2.0, pure), NumericalError);
  EXPECT_NEAR(relative_entropy(pure, Matrix::Identity(2, 2) / 2.0), std::log(2.0), 1e-12);
}

TEST(SymmetricDivergenceTest, IdentityHolds) {
  Rng rng(17);
  const auto model = heisenberg3(1.5);
  for (int trial = 0; trial < 4; ++trial) {
    const auto sd = symmetric_divergence(model, random_mu(7, rng), random_mu(7, rng));
    EXPECT_LT(sd.residual, 1e-9);
    EXPECT_GT(sd.direct, 0.0);
  }
}

}  // namespace
}  // namespace qmaxent
