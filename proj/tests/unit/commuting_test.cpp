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
#include "qmaxent/commuting.hpp"

namespace qmaxent {
namespace {

std::vector<LocalOperator> paulis(const std::vector<std::string>& texts) {
  std::vector<LocalOperator> out;
  for (const auto& t : texts) out.push_back(LocalOperator::from_pauli(PauliString::parse(t)));
  return out;
}

double weighted_inner_re(const Matrix& x, const Matrix& y, const Matrix& sigma) {
  return weighted_inner(x, y, sigma).real();
}

TEST(HypergraphTest, CycleBallsAndSpheres) {
  const auto g = InteractionHypergraph::cycle(10);
  const auto bs = ball_sphere_counts(g, 2);
  EXPECT_EQ(bs.ball, 5);
  EXPECT_EQ(bs.sphere, 2);
  EXPECT_EQ(g.diameter(), 5);
  EXPECT_EQ(g.radius(), 1);
  EXPECT_EQ(g.distance(0, 7), 3);
  EXPECT_EQ(ball_sphere_counts(g, 5).sphere, 1);
}

TEST(HypergraphTest, PathAndDisconnected) {
  const auto p = InteractionHypergraph::path(5);
  EXPECT_EQ(p.distance(0, 4), 4);
  EXPECT_EQ(p.ball_size(0, 2), 3);
  EXPECT_EQ(p.ball_size(2, 2), 5);
  EXPECT_EQ(p.set_distance({0, 1}, {3, 4}), 2);
  const InteractionHypergraph split(4, {{0, 1}, {2, 3}});
  EXPECT_EQ(split.distance(0, 3), 4);
  const InteractionHypergraph tri(4, {{0, 1, 2}, {2, 3}});
  EXPECT_EQ(tri.distance(0, 2), 1);
  EXPECT_EQ(tri.radius(), 1);
}

TEST(HypergraphTest, FromModelDeduplicates) {
  const GibbsModel model(SiteSystem(3), paulis({"Z1*Z2", "X1*X2", "Z2*Z3", "Z1"}), 1.0);
  const auto g = InteractionHypergraph::from_model(model);
  EXPECT_EQ(g.hyperedges().size(), 3u);
  EXPECT_EQ(g.distance(0, 2), 2);
}

TEST(PetzMapTest, UnitalAndSelfAdjoint) {
  Rng rng(61);
  const SiteSystem sys(3);
  const Matrix sigma = oracle::random_density(8, rng, 0.2);
  for (int site = 0; site < 3; ++site) {
    const PetzMap petz(sigma, sys, site);
    EXPECT_TRUE(petz.apply(Matrix::Identity(8, 8)).isApprox(Matrix::Identity(8, 8), 1e-10));
    const Matrix x = oracle::random_hermitian(8, rng);
    const Matrix y = oracle::random_hermitian(8, rng);
    EXPECT_NEAR(weighted_inner_re(x, petz.apply(y), sigma), weighted_inner_re(petz.apply(x), y, sigma), 1e-9);
    const Matrix w = petz.weighted_matrix();
    EXPECT_LT((w - w.adjoint()).norm(), 1e-9);
    // output acts trivially on the site
    const Matrix rx = petz.apply(x);
    const Matrix on_site = embed_local(LocalOperator{{site}, pauli_matrix('X'), std::nullopt}, sys);
    EXPECT_LT(commutator(rx, on_site).norm(), 1e-9);
  }
}

TEST(PetzMapTest, ProductStateIsOneStepExpectation) {
  Rng rng(62);
  const SiteSystem sys(2);
  const Matrix a = oracle::random_density(2, rng, 0.2);
  const Matrix b = oracle::random_density(2, rng, 0.2);
  const Matrix sigma = kron(a, b);
  const Matrix x = oracle::random_hermitian(4, rng);
  const PetzMap petz(sigma, sys, 0);
  const std::vector<int> site0{0};
  const Matrix expected = kron(Matrix::Identity(2, 2), partial_trace(kron(a, Matrix::Identity(2, 2)) * x, sys, site0));
  EXPECT_TRUE(petz.apply(x).isApprox(expected, 1e-10));
  const ConditionalExpectation cond(sigma, sys, 0);
  EXPECT_TRUE(cond.apply(x).isApprox(expected, 1e-9));
}

TEST(ConditionalExpectationTest, IdempotentAndMatchesIteration) {
  const GibbsModel model(SiteSystem(3), paulis({"Z1*Z2", "X2*X3", "Z1", "X3"}), 0.9);
  Vector mu(4);
  mu << 0.7, -0.5, 0.3, 0.4;
  const Matrix sigma = gibbs_state(model, mu).matrix();
  Rng rng(63);
  const ConditionalExpectation cond(sigma, model.system(), 1);
  ASSERT_TRUE(cond.spectral());
  const Matrix x = oracle::random_hermitian(8, rng);
  const Matrix ex = cond.apply(x);
  EXPECT_TRUE(cond.apply(ex).isApprox(ex, 1e-8));
  EXPECT_TRUE(cond.apply(Matrix::Identity(8, 8)).isApprox(Matrix::Identity(8, 8), 1e-8));
  int iters = 0;
  const Matrix it = cond.apply_iterated(x, &iters);
  EXPECT_GT(iters, 0);
  EXPECT_LT(weighted_two_norm(it - ex, sigma), 1e-6);
  // frustration freeness: the state's expectation is preserved
  EXPECT_NEAR((sigma * ex).trace().real(), (sigma * x).trace().real(), 1e-8);
}

TEST(ContractionTest, ClassicalVarianceOracle) {
  // For diagonal models the Petz map is a conditional expectation over
  // configurations, so the ratio is sqrt(Var E[h | rest] / Var h).
  const GibbsModel model(SiteSystem(3), paulis({"Z1*Z2", "Z2*Z3", "Z2"}), 1.3);
  Vector mu(3);
  mu << 0.8, -0.6, 0.5;
  const int site = 1;
  const Matrix hx = local_hamiltonian(model, mu, site);
  std::vector<double> p(8), h(8);
  double z = 0;
  for (int s = 0; s < 8; ++s) {
    h[s] = hx(s, s).real();
    p[s] = std::exp(-1.3 * h[s]);
    z += p[s];
  }
  double mean = 0, var = 0;
  for (int s = 0; s < 8; ++s) {
    p[s] /= z;
    mean += p[s] * h[s];
  }
  for (int s = 0; s < 8; ++s) var += p[s] * (h[s] - mean) * (h[s] - mean);
  double var_cond = 0;
  for (int s = 0; s < 8; ++s) {
    const int partner = s ^ 0b010;
    const double cond = (p[s] * h[s] + p[partner] * h[partner]) / (p[s] + p[partner]);
    var_cond += p[s] * (cond - mean) * (cond - mean);
  }
  EXPECT_NEAR(contraction_coefficient(model, mu, site), std::sqrt(var_cond / var), 1e-10);
}

TEST(ContractionTest, SearchStaysBelowOneAndRejectsNonCommuting) {
  const GibbsModel model(SiteSystem(3), paulis({"Z1*Z2", "Z2*Z3", "Z1", "Z2", "Z3"}), 0.5);
  const auto res = contraction_search(model, 1, 5, 50, 3, 2);
  EXPECT_EQ(res.evaluations > 0, true);
  EXPECT_GT(res.value, 0.0);
  EXPECT_LT(res.value, 1.0);
  EXPECT_NEAR(contraction_coefficient(model, res.argmax, 1), res.value, 1e-12);
  const GibbsModel noncomm(SiteSystem(2), paulis({"X1*X2", "Z1"}), 1.0);
  EXPECT_THROW(contraction_coefficient(noncomm, Vector::Ones(2), 0), std::invalid_argument);
}

TEST(HessianBoundsTest, FormulasAndValidity) {
  const auto path = InteractionHypergraph::path(3);
  const double beta = 0.4;
  const double c = 0.5;
  const double lower = hessian_lower_bound(beta, 2, path, c);
  EXPECT_NEAR(lower, beta * beta * std::exp(-beta * (3 + 6)) * std::pow(2.0, -3) * (1 - c * c), 1e-15);
  EXPECT_THROW(hessian_lower_bound(beta, 2, path, 1.0), std::invalid_argument);
  DecaySpec decay;
  decay.c = 0.3;
  decay.xi = 1.2;
  // r0 = 1: B(1) = 3, B(2) = 3, spheres S(1) = 2, S(2) = 1
  const double series = 2 * std::exp(-1.2) + std::exp(-2.4);
  EXPECT_NEAR(hessian_upper_bound_decay(decay, beta, 2, path), beta * beta * (1 + 0.3 * 9 * 64 * series), 1e-12);

  const GibbsModel model(SiteSystem(3), paulis({"Z1*Z2", "Z2*Z3", "Z1", "Z2", "Z3"}), beta);
  Rng rng(71);
  double c_max = 0;
  for (int s = 0; s < 3; ++s) c_max = std::max(c_max, contraction_search(model, s, 5, 50, 1).value);
  for (int trial = 0; trial < 5; ++trial) {
    Vector mu(5);
    for (int i = 0; i < 5; ++i) mu(i) = rng.uniform(-1.0, 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dual_hessian(model, mu, HessianMethod::commuting));
    EXPECT_GE(es.eigenvalues().minCoeff(), hessian_lower_bound(beta, 2, path, c_max));
  }
}

TEST(CorrelationFitTest, IsingChainExponentialDecay) {
  // open Ising chain without fields: <Z_i Z_j> = tanh(beta J)^{|i-j|}
  const double beta = 0.8;
  const GibbsModel model(SiteSystem(5), paulis({"Z1*Z2", "Z2*Z3", "Z3*Z4", "Z4*Z5"}), beta);
  const Matrix sigma = gibbs_state(model, Vector::Constant(4, -1.0)).matrix();
  std::vector<CorrelationPair> pairs;
  for (int d = 1; d <= 4; ++d) {
    pairs.push_back({embed_pauli(PauliString({{0, 'Z'}}), model.system()),
                     embed_pauli(PauliString({{d, 'Z'}}), model.system()), d});
  }
  const auto fit = correlation_fit(sigma, pairs);
  EXPECT_EQ(fit.points, 4);
  EXPECT_NEAR(fit.xi, -std::log(std::tanh(beta)), 1e-8);
  EXPECT_NEAR(fit.c, 1.0, 1e-8);
  EXPECT_LT(fit.residual, 1e-8);
  pairs.pop_back();
  pairs.pop_back();
  EXPECT_THROW(correlation_fit(sigma, pairs), std::invalid_argument);
}

TEST(CorrelationFitTest, IndependentBondsGiveZeroDecay) {
  // Without fields the bond variables of an open chain are independent.
  const GibbsModel model(SiteSystem(4), paulis({"Z1*Z2", "Z2*Z3", "Z3*Z4"}), 0.9);
  Vector mu(3);
  mu << 0.7, -0.4, 0.9;
  const Matrix sigma = gibbs_state(model, mu).matrix();
  const std::vector<CorrelationPair> pairs{{model.dense(0), model.dense(1), 0}, {model.dense(0), model.dense(2), 1}};
  const auto fit = correlation_fit(sigma, pairs);
  EXPECT_EQ(fit.points, 0);
  EXPECT_EQ(fit.c, 0.0);
  EXPECT_NEAR(hessian_upper_bound_decay(fit, 0.9, 2, InteractionHypergraph::path(4)), 0.81, 1e-15);
}

TEST(BasisCheckTest, OrthogonalTraceless) {
  EXPECT_TRUE(orthogonal_traceless_basis(GibbsModel(SiteSystem(2), paulis({"Z1", "Z1*Z2"}), 1.0)));
  Matrix mixed = (pauli_matrix('Z') + pauli_matrix('X')) / std::sqrt(2.0);
  std::vector<LocalOperator> basis{LocalOperator::from_pauli(PauliString::parse("Z1")),
                                   LocalOperator{{0}, mixed, std::nullopt}};
  EXPECT_FALSE(orthogonal_traceless_basis(GibbsModel(SiteSystem(1), basis, 1.0)));
}

}  // namespace
}  // namespace qmaxent
