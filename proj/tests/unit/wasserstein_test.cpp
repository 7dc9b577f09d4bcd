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
#include "qmaxent/wasserstein.hpp"

namespace qmaxent {
namespace {

Matrix sum_z(const SiteSystem& sys) {
  Matrix o = Matrix::Zero(static_cast<Eigen::Index>(sys.dim()), static_cast<Eigen::Index>(sys.dim()));
  for (int i = 0; i < sys.sites(); ++i) o += embed_pauli(PauliString({{i, 'Z'}}), sys);
  return o;
}

double marginal_trace_distance(const Matrix& delta, const SiteSystem& sys, std::vector<int> keep) {
  const auto traced = complement_sites(sys, keep);
  return trace_norm(partial_trace(delta, sys, traced));
}

TEST(DifferentialStructureTest, DepolarizingLipOfZ) {
  const SiteSystem sys(1);
  const auto ds = depolarizing_structure(sys);
  EXPECT_EQ(ds.check(), "");
  EXPECT_NEAR(lip_diff(pauli_matrix('Z'), ds), 4.0, 1e-12);
  EXPECT_NEAR(lip_diff(Matrix::Identity(2, 2), ds), 0.0, 1e-12);
}

TEST(DifferentialStructureTest, ShallowStructureIsValidAndPIndependentOnZ) {
  const SiteSystem sys(2);
  for (double p : {0.1, 0.3, 0.5}) {
    const auto ds = shallow_circuit_structure(sys, p);
    EXPECT_EQ(ds.check(), "") << "p=" << p;
    // each of a, a^dag contributes 4 after the frequency weights cancel the amplitudes
    EXPECT_NEAR(lip_diff(embed_pauli(PauliString::parse("Z1"), sys), ds), std::sqrt(8.0), 1e-10);
  }
  Rng rng(6);
  Matrix g(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = Complex(rng.normal(), rng.normal());
  const Matrix u = Eigen::HouseholderQR<Matrix>(g).householderQ();
  const auto rotated = shallow_circuit_structure(sys, 0.2, u);
  EXPECT_EQ(rotated.check(), "");
  // conjugating O along with the structure leaves the constant unchanged
  const Matrix o = embed_pauli(PauliString::parse("X1*Z2"), sys);
  EXPECT_NEAR(lip_diff(u * o * u.adjoint(), rotated), lip_diff(o, shallow_circuit_structure(sys, 0.2)), 1e-10);
}

TEST(DifferentialStructureTest, CheckFlagsBrokenRelation) {
  const SiteSystem sys(1);
  auto ds = shallow_circuit_structure(sys, 0.2);
  ds.omega[0] = -ds.omega[0];
  EXPECT_NE(ds.check(), "");
}

TEST(LipHammingTest, SumOfZ) {
  for (int n : {2, 3, 4}) {
    const SiteSystem sys(n);
    const Bracket b = lip_hamming_exact(sum_z(sys), sys, 1e-6);
    const double expected = 2.0 * std::sqrt(static_cast<double>(n));
    EXPECT_LE(b.lower, expected + 1e-9);
    EXPECT_GE(b.upper, expected - 1e-9);
    EXPECT_LT(b.upper - b.lower, 1e-4);
    std::vector<LocalOperator> terms;
    for (int i = 0; i < n; ++i) terms.push_back(LocalOperator::from_pauli(PauliString({{i, 'Z'}})));
    EXPECT_NEAR(lip_hamming_upper(terms, sys), expected, 1e-12);
  }
}

TEST(LipHammingTest, SiteDistanceBracketsKnownValue) {
  // min_Y ||Z (x) Z - I (x) Y|| = 1, and terms acting away from the site cost nothing
  const SiteSystem sys(2);
  const Matrix o = embed_pauli(PauliString::parse("Z1*Z2"), sys) + 0.7 * embed_pauli(PauliString::parse("X2"), sys);
  const Bracket b0 = site_distance(o, sys, 0);
  EXPECT_LE(b0.lower, 1.0 + 1e-9);
  EXPECT_GE(b0.upper, 1.0 - 1e-9);
  EXPECT_LT(b0.upper - b0.lower, 1e-4);
  const Matrix local = 0.7 * embed_pauli(PauliString::parse("X2"), sys);
  const Bracket b1 = site_distance(local, sys, 0);
  EXPECT_LT(b1.upper, 1e-6);
}

TEST(LipHammingTest, UpperBoundDominatesExactOnRandomLocalSums) {
  Rng rng(14);
  const SiteSystem sys(3);
  std::vector<LocalOperator> terms;
  Matrix o = Matrix::Zero(8, 8);
  for (int i = 0; i + 1 < 3; ++i) {
    Matrix h = oracle::random_hermitian(4, rng);
    h /= operator_norm(h);
    terms.push_back(LocalOperator{{i, i + 1}, h, std::nullopt});
    o += embed_local(terms.back(), sys);
  }
  const Bracket b = lip_hamming_exact(o, sys);
  EXPECT_LE(b.lower, lip_hamming_upper(terms, sys) + 1e-9);
  EXPECT_LE(b.lower, b.upper + 1e-12);
}

TEST(W1Test, SingleSiteDifferenceIsExact) {
  Rng rng(19);
  const SiteSystem sys(3);
  const Matrix a = oracle::random_density(2, rng, 0.2);
  const Matrix b = oracle::random_density(2, rng, 0.2);
  const Matrix rest = oracle::random_density(4, rng, 0.2);
  const DensityOperator rho(kron(a, rest), sys);
  const DensityOperator sigma(kron(b, rest), sys);
  const auto w = w1_bounds(rho, sigma);
  const double exact = trace_norm(a - b) / (2.0 * std::sqrt(3.0));
  EXPECT_NEAR(w.lower, exact, 1e-6);
  EXPECT_NEAR(w.upper, exact, 1e-9);
}

TEST(W1Test, BracketOrderedOnRandomStates) {
  Rng rng(23);
  const SiteSystem sys(3);
  for (int trial = 0; trial < 3; ++trial) {
    const DensityOperator rho(oracle::random_density(8, rng, 0.1), sys);
    const DensityOperator sigma(oracle::random_density(8, rng, 0.1), sys);
    const auto w = w1_bounds(rho, sigma);
    EXPECT_GT(w.lower, 0.0);
    EXPECT_LE(w.lower, w.upper + 1e-12);
    // W1 dominates the trace distance scaled by 1/(2 sqrt n) and is at most sqrt(n) times it
    const double td = trace_norm(rho.matrix() - sigma.matrix());
    EXPECT_GE(w.upper, td / (2 * std::sqrt(3.0)) - 1e-9);
    EXPECT_LE(w.lower, std::sqrt(3.0) * td / 2 + 1e-9);
    std::vector<int> order{2, 0, 1};
    EXPECT_GE(w1_telescoping(rho.matrix() - sigma.matrix(), sys, order), w.upper - 1e-12);
  }
}

TEST(W1Test, LocModeMatchesVertexEnumeration) {
  Rng rng(29);
  const SiteSystem sys(2);
  const DensityOperator rho(oracle::random_density(4, rng, 0.1), sys);
  const DensityOperator sigma(oracle::random_density(4, rng, 0.1), sys);
  const Matrix delta = rho.matrix() - sigma.matrix();
  const double a0 = marginal_trace_distance(delta, sys, {0});
  const double a1 = marginal_trace_distance(delta, sys, {1});
  const double a01 = trace_norm(delta);
  W1Options opts;
  opts.mode = W1Mode::loc;
  opts.loc = {1, 0.5};
  auto w = w1_bounds(rho, sigma, opts);
  EXPECT_NEAR(w.lower, 0.5 * (a0 + a1) / std::sqrt(2.0), 1e-10);
  EXPECT_DOUBLE_EQ(w.lower, w.upper);
  opts.loc = {2, 0.5};
  w = w1_bounds(rho, sigma, opts);
  EXPECT_NEAR(w.lower, 0.5 * std::max(a0 + a1, a01) / std::sqrt(2.0), 1e-10);
}

TEST(W1Test, TcCapAndIdenticalStates) {
  Rng rng(31);
  const SiteSystem sys(2);
  const DensityOperator rho(oracle::random_density(4, rng, 0.1), sys);
  const DensityOperator sigma(oracle::random_density(4, rng, 0.1), sys);
  EXPECT_EQ(w1_bounds(rho, rho).upper, 0.0);
  W1Options opts;
  opts.tc_alpha = 1e6;
  const auto w = w1_bounds(rho, sigma, opts);
  EXPECT_GE(w.upper, w.lower);
  EXPECT_LE(w.upper, std::max(w.lower, std::sqrt(relative_entropy(rho, sigma) / 2e6)) + 1e-15);
}

TEST(QuasiLocalClassTest, Membership) {
  const SiteSystem sys(3);
  std::vector<LocalOperator> d{LocalOperator::from_pauli(PauliString::parse("Z1*Z2")),
                               LocalOperator::from_pauli(PauliString::parse("Z2*Z3"))};
  EXPECT_TRUE((QuasiLocalClass{2, 2.0}).contains(d, sys));
  EXPECT_FALSE((QuasiLocalClass{2, 1.5}).contains(d, sys));
  EXPECT_FALSE((QuasiLocalClass{1, 5.0}).contains(d, sys));
}

TEST(TcConstantTest, CriticalTemperature) {
  const auto t = tc_constant_local(1, 1.0, 0.0);
  EXPECT_NEAR(t.beta_c, 1.0 / (8.0 * std::exp(3.0)), 1e-15);
  EXPECT_NEAR(t.beta_c, 0.0062234, 1e-7);
  EXPECT_NEAR(t.tc_factor, std::sqrt(2.0 / t.beta_c), 1e-9);
  EXPECT_THROW(tc_constant_local(1, 1.0, 0.01), std::invalid_argument);
  EXPECT_NEAR(tc_constant_local(2, 3.0, 0.0).beta_c, t.beta_c / 6.0, 1e-15);
}

TEST(TcVerifyTest, FlagsOnlyTightFactors) {
  Rng rng(37);
  const SiteSystem sys(2);
  const DensityOperator sigma = DensityOperator::maximally_mixed(sys);
  std::vector<DensityOperator> ensemble;
  for (int i = 0; i < 4; ++i) ensemble.emplace_back(oracle::random_density(4, rng, 0.3), sys);
  // W1 <= sqrt(n) ((1/2) trace norm) and Pinsker make sqrt(n / 2) a valid factor
  const auto ok = tc_verify(sigma, ensemble, 1.0001, {}, 2);
  EXPECT_EQ(ok.violations, 0);
  const auto bad = tc_verify(sigma, ensemble, 1e-4, {}, 1);
  EXPECT_EQ(bad.violations, 4);
  for (const auto& r : ok.records) EXPECT_NEAR(r.tc_rhs, 1.0001 * std::sqrt(r.divergence), 1e-12);
}

TEST(LrGrowthTest, Formula) {
  const double q = std::exp(-0.5);
  EXPECT_NEAR(lr_growth_1d(2, 1.0, 0.5, 0.3, 10), std::sqrt(8.0) * (2 + std::expm1(0.3) * q / (1 - q)), 1e-12);
  EXPECT_NEAR(lr_growth_1d(2, 1.0, 0.5, 0.0, 10), 2 * std::sqrt(8.0), 1e-12);
}

TEST(ShallowSurrogateTest, ClosedForm) {
  for (double eps : {0.5, 0.1, 0.01}) {
    const auto s = shallow_surrogate(eps, 5);
    EXPECT_NEAR(s.beta_eps, std::log(1 / eps), 1e-14);
    EXPECT_NEAR(s.d_exact_per_qubit, std::log1p(eps * eps), 1e-10);
    EXPECT_NEAR(s.d_total, 5 * std::log1p(eps * eps), 1e-9);
    EXPECT_DOUBLE_EQ(s.stated_bound, 5 * eps);
    EXPECT_LE(s.d_total, s.stated_bound);
  }
  EXPECT_THROW(shallow_surrogate(0.0, 2), std::invalid_argument);
}

}  // namespace
}  // namespace qmaxent
