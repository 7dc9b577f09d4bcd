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
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "oracles.hpp"
#include "qmaxent/classical_chain.hpp"

namespace qmaxent {
namespace {

ChainSpec random_spec(int n, Boundary b, bool fields, double beta, std::uint64_t seed) {
  Rng rng(seed);
  ChainSpec s;
  s.n = n;
  s.beta = beta;
  s.boundary = b;
  s.J.resize(static_cast<std::size_t>(s.bonds()));
  s.h.assign(static_cast<std::size_t>(n), 0.0);
  for (auto& j : s.J) j = rng.uniform(-1.0, 1.0);
  if (fields) {
    for (auto& h : s.h) h = rng.uniform(-1.0, 1.0);
  }
  return s;
}

oracle::ChainBrute brute(const ChainSpec& s) {
  return oracle::chain_brute(s.n, s.J, s.h, s.beta, s.boundary == Boundary::periodic);
}

Matrix dense_circuit(const BrickworkCircuit& c) {
  const SiteSystem sys(c.n);
  const auto dim = static_cast<Eigen::Index>(sys.dim());
  Matrix u = Matrix::Identity(dim, dim);
  for (std::size_t l = 0; l < c.layers.size(); ++l) {
    int q = BrickworkCircuit::offset(static_cast<int>(l));
    for (const auto& g : c.layers[l]) {
      u = embed_local(LocalOperator{{q, q + 1}, Matrix(g), std::nullopt}, sys) * u;
      q += 2;
    }
  }
  return u;
}

TEST(ChainSpecTest, Validation) {
  ChainSpec s = random_spec(4, Boundary::open, true, 1.0, 1);
  EXPECT_NO_THROW(s.validate());
  s.J[0] = 1.5;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  ChainSpec p = random_spec(3, Boundary::periodic, false, 1.0, 1);
  EXPECT_NO_THROW(p.validate());
  p.n = 2;
  p.J.resize(2);
  p.h.resize(2);
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

class ChainBruteTest : public ::testing::TestWithParam<std::tuple<Boundary, bool, double>> {};

TEST_P(ChainBruteTest, TransferMatricesMatchEnumeration) {
  const auto [boundary, fields, beta] = GetParam();
  for (int n : {3, 5, 8}) {
    const ChainSpec s = random_spec(n, boundary, fields, beta, 100 + static_cast<std::uint64_t>(n));
    const auto b = brute(s);
    EXPECT_NEAR(chain_log_partition(s), b.log_z, 1e-10 * std::max(1.0, std::abs(b.log_z)));
    const auto e = chain_expectations(s);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(e.z(i), b.z[static_cast<std::size_t>(i)], 1e-12);
    for (int i = 0; i < s.bonds(); ++i) EXPECT_NEAR(e.zz(i), b.zz[static_cast<std::size_t>(i)], 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Boundaries, ChainBruteTest,
                         ::testing::Combine(::testing::Values(Boundary::open, Boundary::periodic),
                                            ::testing::Bool(), ::testing::Values(0.3, 1.0, 4.0)),
                         [](const auto& info) {
                           return std::string(std::get<0>(info.param) == Boundary::open ? "Open" : "Periodic") +
                                  (std::get<1>(info.param) ? "Fields" : "NoFields") + "Beta" +
                                  std::to_string(static_cast<int>(std::get<2>(info.param) * 10));
                         });

TEST(ChainTest, OpenZeroFieldBondCorrelation) {
  ChainSpec s = random_spec(12, Boundary::open, false, 1.7, 5);
  const auto e = chain_expectations(s);
  for (int i = 0; i < s.bonds(); ++i) EXPECT_NEAR(e.zz(i), -std::tanh(1.7 * s.J[static_cast<std::size_t>(i)]), 1e-12);
  EXPECT_LT(e.z.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ChainTest, LongChainStaysFinite) {
  ChainSpec s = random_spec(2000, Boundary::periodic, true, 5.0, 6);
  const double lz = chain_log_partition(s);
  EXPECT_TRUE(std::isfinite(lz));
  const auto e = chain_expectations(s);
  EXPECT_TRUE(e.zz.allFinite());
  EXPECT_LE(e.zz.cwiseAbs().maxCoeff(), 1.0 + 1e-12);
}

TEST(ChainTest, WindowDistributionMatchesMarginal) {
  for (Boundary b : {Boundary::open, Boundary::periodic}) {
    const ChainSpec s = random_spec(7, b, true, 1.1, 9);
    const auto full = brute(s);
    const int start = 2, width = 3;
    std::vector<double> expected(8, 0.0);
    for (std::size_t x = 0; x < full.probs.size(); ++x) {
      const std::size_t w = (x >> (7 - start - width)) & 7U;
      expected[w] += full.probs[x];
    }
    const auto got = chain_window_distribution(s, start, width);
    ASSERT_EQ(got.size(), 8u);
    for (std::size_t w = 0; w < 8; ++w) EXPECT_NEAR(got[w], expected[w], 1e-12);
  }
}

TEST(ChainSampleTest, EmpiricalMomentsAndDeterminism) {
  const ChainSpec s = random_spec(6, Boundary::periodic, true, 1.0, 12);
  const auto e = chain_expectations(s);
  const std::size_t count = 40000;
  const auto a = chain_sample(s, count, 77, 1);
  const auto b = chain_sample(s, count, 77, 3);
  EXPECT_EQ(a, b);
  Vector z = Vector::Zero(6);
  Vector zz = Vector::Zero(6);
  for (const auto& cfg : a) {
    for (int i = 0; i < 6; ++i) {
      z(i) += cfg[static_cast<std::size_t>(i)];
      zz(i) += cfg[static_cast<std::size_t>(i)] * cfg[static_cast<std::size_t>((i + 1) % 6)];
    }
  }
  z /= static_cast<double>(count);
  zz /= static_cast<double>(count);
  const double tol = 5.0 / std::sqrt(static_cast<double>(count));
  EXPECT_LT((z - e.z).cwiseAbs().maxCoeff(), tol);
  EXPECT_LT((zz - e.zz).cwiseAbs().maxCoeff(), tol);
}

TEST(ChainSampleTest, RoundTrip) {
  const ChainSpec s = random_spec(11, Boundary::open, true, 1.0, 13);
  const auto samples = chain_sample(s, 37, 5);
  std::stringstream ss;
  write_samples(ss, samples, 5);
  std::uint64_t seed = 0;
  const auto back = read_samples(ss, &seed);
  EXPECT_EQ(seed, 5u);
  EXPECT_EQ(back, samples);
}

TEST(ChainFamilyTest, AgreesWithDenseModel) {
  for (Boundary b : {Boundary::open, Boundary::periodic}) {
    const ChainFamily fam(4, 0.9, b, true);
    std::vector<LocalOperator> basis;
    for (const auto& p : fam.observables()) basis.push_back(LocalOperator::from_pauli(p));
    const GibbsModel dense(SiteSystem(4), basis, 0.9);
    Rng rng(17);
    Vector mu(fam.num_params());
    for (int i = 0; i < mu.size(); ++i) mu(i) = rng.uniform(-1.0, 1.0);
    EXPECT_NEAR(fam.log_partition(mu), dense.log_partition(mu), 1e-10);
    EXPECT_LT((fam.expectations(mu) - dense.expectations(mu)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(fam.params(fam.spec(mu)), mu);
  }
}

TEST(ChainFamilyTest, ReconstructionRecoversCouplings) {
  const ChainFamily fam(20, 1.0, Boundary::open, false);
  const ChainSpec truth = random_spec(20, Boundary::open, false, 1.0, 19);
  const Vector lambda = fam.params(truth);
  SolverOptions opts;
  opts.delta_mu = 1e-7;
  const auto rec = chain_maxent_reconstruct(fam.pack(chain_expectations(truth)), fam, opts, &lambda);
  EXPECT_EQ(rec.result.halting, Halting::stopping_rule);
  EXPECT_DOUBLE_EQ(rec.result.U, 1.0);
  EXPECT_LE(*rec.result.certificate.exact_d_sym, rec.result.certificate.d_sym_bound);
  EXPECT_LT((rec.result.mu_star - lambda).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(BrickworkTest, HaarGatesAreUnitaryAndSeeded) {
  const auto c = BrickworkCircuit::haar_random(6, 3, 4);
  ASSERT_EQ(c.layers.size(), 3u);
  EXPECT_EQ(c.layers[0].size(), 3u);
  EXPECT_EQ(c.layers[1].size(), 2u);
  for (const auto& layer : c.layers) {
    for (const auto& g : layer) EXPECT_TRUE((g * g.adjoint()).isIdentity(1e-12));
  }
  const auto again = BrickworkCircuit::haar_random(6, 3, 4);
  EXPECT_TRUE(again.layers[1][0].isApprox(c.layers[1][0], 0.0));
}

TEST(BrickworkTest, HaarUnitaryMoments) {
  // E |U_00|^2 = 1/d for Haar measure
  Rng rng(23);
  double acc = 0;
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) acc += std::norm(haar_unitary(4, rng)(0, 0));
  EXPECT_NEAR(acc / trials, 0.25, 0.02);
}

TEST(WindowedObservableTest, MatchesDenseEvolution) {
  const int n = 7;
  for (Boundary b : {Boundary::open, Boundary::periodic}) {
    const ChainSpec s = random_spec(n, b, true, 0.8, 29);
    const auto probs = brute(s).probs;
    const auto circuit = BrickworkCircuit::haar_random(n, 3, 31);
    const Matrix u = dense_circuit(circuit);
    const auto obs = WindowedObservable::zz_average(n, 2);
    const SiteSystem sys(n);
    double expected = 0;
    for (const auto& term : obs.terms) {
      std::vector<PauliFactor> f;
      for (int q : term) f.push_back({q, 'Z'});
      const Matrix o = u * embed_pauli(PauliString(f), sys) * u.adjoint();
      for (std::size_t x = 0; x < probs.size(); ++x) expected += probs[x] * o(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)).real();
    }
    expected *= obs.weight;
    EXPECT_NEAR(windowed_expectation(s, circuit, obs, 1), expected, 1e-10);
    EXPECT_NEAR(windowed_expectation(s, circuit, obs, 2), expected, 1e-10);
  }
}

TEST(WindowedObservableTest, IdentityCircuitAndErrors) {
  const int n = 9;
  const ChainSpec s = random_spec(n, Boundary::open, false, 1.0, 37);
  const auto obs = WindowedObservable::zz_average(n, 2);
  EXPECT_EQ(obs.terms.size(), 7u);
  EXPECT_DOUBLE_EQ(obs.weight, 1.0 / n);
  // with h = 0, <s_i s_{i+2}> = tanh(beta J_i) tanh(beta J_{i+1})
  double expected = 0;
  for (int i = 0; i + 2 < n; ++i) expected += std::tanh(s.J[i]) * std::tanh(s.J[i + 1]);
  expected /= n;
  const auto id = BrickworkCircuit::identity(n, 3);
  EXPECT_NEAR(windowed_expectation(s, id, obs), expected, 1e-12);
  EXPECT_DOUBLE_EQ(windowed_observable_error(s, s, id, obs), 0.0);
  EXPECT_NEAR(windowed_norm_bound(obs), 7.0 / n, 1e-15);
}

}  // namespace
}  // namespace qmaxent
