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

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "qmaxent/shadow_sampler.hpp"

namespace qmaxent {
namespace {

Matrix pure(const Eigen::VectorXcd& v) { return v * v.adjoint(); }

TEST(ShadowPlanTest, SampleAndBatchCounts) {
  const double log_term = std::log(2.0 * 100 / 0.01);
  const auto expected = static_cast<std::size_t>(std::ceil(34.0 * 16.0 * log_term / (0.1 * 0.1)));
  EXPECT_EQ(plan_samples(2, 100, 0.1, 0.01), expected);
  EXPECT_EQ(plan_batches(100, 0.01), 21);
  EXPECT_EQ(plan_batches(1, 0.5), 2 * 2 + 1);
  EXPECT_DOUBLE_EQ(default_failure_probability(10), 0.01);
  EXPECT_THROW(plan_samples(2, 100, 0.0, 0.01), std::invalid_argument);
  EXPECT_THROW(plan_samples(2, 100, 0.1, 1.0), std::invalid_argument);
}

TEST(ShadowSchemeTest, EvenBatchCountRejected) {
  ShadowScheme s;
  s.batches = 4;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(ShadowSamplerTest, EigenstatesGiveDeterministicOutcomes) {
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::VectorXcd plus_x(2), plus_y(2), zero(2);
  plus_x << r, r;
  plus_y << r, Complex(0, r);
  zero << 1, 0;
  // site 0 in |+x>, site 1 in |+i>, site 2 in |0>
  const std::vector<Matrix> factors{pure(plus_x), pure(plus_y), pure(zero)};
  const SiteSystem sys(3);
  const auto state = DensityOperator::product(factors, sys);
  ShadowScheme scheme;
  scheme.seed = 5;
  const auto batch = sample(state, scheme, 3000);
  const char own[] = {'X', 'Y', 'Z'};
  int checked = 0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    for (int q = 0; q < 3; ++q) {
      if (batch.basis(s, q) == own[q]) {
        EXPECT_EQ(batch.outcome(s, q), 1);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 2500);
}

TEST(ShadowSamplerTest, SnapshotEstimatorUnbiasedByEnumeration) {
  // Exact average of the single-snapshot estimator over all bases and
  // outcomes, with Born weights from Pauli eigenprojectors.
  Rng rng(31);
  const int n = 2;
  const SiteSystem sys(n);
  const Matrix rho = oracle::random_density(4, rng, 0.1);
  const char letters[] = {'X', 'Y', 'Z'};
  ShadowBatch all;
  all.sites = n;
  std::vector<double> weight;
  for (int b = 0; b < 9; ++b) {
    for (int o = 0; o < 4; ++o) {
      const char b0 = letters[b / 3], b1 = letters[b % 3];
      const int o0 = (o >> 1) & 1, o1 = o & 1;
      const Matrix p0 = (oracle::pauli2('I') + (o0 ? -1.0 : 1.0) * oracle::pauli2(b0)) / 2.0;
      const Matrix p1 = (oracle::pauli2('I') + (o1 ? -1.0 : 1.0) * oracle::pauli2(b1)) / 2.0;
      weight.push_back((rho * kron(p0, p1)).trace().real() / 9.0);
      all.bases.push_back(b0);
      all.bases.push_back(b1);
      all.minus.push_back(static_cast<std::uint8_t>(o0));
      all.minus.push_back(static_cast<std::uint8_t>(o1));
    }
  }
  for (const char* text : {"X1", "Y2", "Z1*Z2", "X1*Y2", "Y1*Y2", "I"}) {
    const auto p = PauliString::parse(text);
    double mean = 0;
    for (std::size_t s = 0; s < all.size(); ++s) mean += weight[s] * snapshot_value(all, s, p);
    EXPECT_NEAR(mean, (rho * embed_pauli(p, sys)).trace().real(), 1e-12) << text;
  }
}

TEST(ShadowSamplerTest, EstimatesConcentrate) {
  Rng rng(41);
  const SiteSystem sys(3);
  const DensityOperator rho(oracle::random_density(8, rng, 0.2), sys);
  ShadowScheme scheme;
  scheme.seed = 77;
  const std::vector<PauliString> obs{PauliString::parse("Z1*Z2"), PauliString::parse("X2*X3"),
                                     PauliString::parse("Y1"), PauliString::parse("X1*Y2*Z3")};
  const auto batch = sample(rho, scheme, 60000);
  const auto rep = estimate(batch, obs);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double exact = (rho.matrix() * embed_pauli(obs[i], sys)).trace().real();
    const double var_bound = std::pow(3.0, obs[i].weight()) / 60000.0;
    EXPECT_NEAR(rep.estimates(static_cast<Eigen::Index>(i)), exact, 6.0 * std::sqrt(var_bound)) << obs[i].str();
  }
  EXPECT_EQ(rep.samples_used, 60000u);
}

TEST(ShadowSamplerTest, LocalOperatorOverloadNeedsPaulis) {
  Rng rng(43);
  const SiteSystem sys(2);
  const DensityOperator rho(oracle::random_density(4, rng, 0.2), sys);
  ShadowScheme scheme;
  scheme.seed = 3;
  const auto batch = sample(rho, scheme, 4000);
  const auto zz = PauliString::parse("Z1*Z2");
  const auto a = estimate(batch, std::vector<LocalOperator>{LocalOperator::from_pauli(zz)});
  const auto b = estimate(batch, std::vector<PauliString>{zz});
  EXPECT_DOUBLE_EQ(a.estimates(0), b.estimates(0));
  const std::vector<LocalOperator> dense{LocalOperator{{0}, pauli_matrix('Z'), std::nullopt}};
  EXPECT_THROW(estimate(batch, dense), std::invalid_argument);
}

TEST(ShadowSamplerTest, ThreadCountDoesNotChangeBatch) {
  Rng rng(1);
  const SiteSystem sys(3);
  const DensityOperator rho(oracle::random_density(8, rng), sys);
  ShadowScheme scheme;
  scheme.seed = 99;
  const auto a = sample(rho, scheme, 5000, 1);
  const auto b = sample(rho, scheme, 5000, 3);
  EXPECT_EQ(a.bases, b.bases);
  EXPECT_EQ(a.minus, b.minus);
  scheme.seed = 100;
  EXPECT_NE(sample(rho, scheme, 5000, 1).bases, a.bases);
}

TEST(ShadowSamplerTest, PrecomputedAndLazyBornTablesAgree) {
  // 27 snapshots on 3 qubits precompute all 3^3 bases; 26 fill them lazily.
  Rng rng(2);
  const SiteSystem sys(3);
  const DensityOperator rho(oracle::random_density(8, rng), sys);
  ShadowScheme scheme;
  scheme.seed = 5;
  const auto full = sample(rho, scheme, 27);
  const auto lazy = sample(rho, scheme, 26);
  EXPECT_TRUE(std::equal(lazy.bases.begin(), lazy.bases.end(), full.bases.begin()));
  EXPECT_TRUE(std::equal(lazy.minus.begin(), lazy.minus.end(), full.minus.begin()));
}

TEST(ShadowSamplerTest, BatchRoundTrip) {
  Rng rng(2);
  const SiteSystem sys(2);
  const DensityOperator rho(oracle::random_density(4, rng), sys);
  ShadowScheme scheme;
  scheme.seed = 12;
  scheme.batches = 5;
  const auto batch = sample(rho, scheme, 50, 1, "demo");
  std::stringstream ss;
  write_batch(ss, batch);
  const auto back = read_batch(ss);
  EXPECT_EQ(back.sites, 2);
  EXPECT_EQ(back.scheme.batches, 5);
  EXPECT_EQ(back.scheme.seed, 12u);
  EXPECT_EQ(back.state_id, "demo");
  EXPECT_EQ(back.bases, batch.bases);
  EXPECT_EQ(back.minus, batch.minus);
}

TEST(ShadowClassicalTest, EmpiricalMeans) {
  const std::vector<SpinConfig> samples{{1, 1}, {1, -1}, {-1, -1}, {1, 1}};
  const auto rep = estimate_classical(samples, {PauliString::parse("Z1"), PauliString::parse("Z1*Z2")});
  EXPECT_DOUBLE_EQ(rep.estimates(0), 0.5);
  EXPECT_DOUBLE_EQ(rep.estimates(1), 0.5);
  EXPECT_THROW(estimate_classical(samples, {PauliString::parse("X1")}), std::invalid_argument);
  EXPECT_THROW(estimate_classical({{1, 0}}, {PauliString::parse("Z1")}), std::invalid_argument);
}

}  // namespace
}  // namespace qmaxent
