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

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "qmaxent/classical_chain.hpp"
#include "qmaxent/gibbs_engine.hpp"
#include "qmaxent/shadow_sampler.hpp"

namespace qmaxent {
namespace {

GibbsModel heisenberg(int n) {
  std::vector<LocalOperator> basis;
  for (int i = 1; i < n; ++i) {
    for (char c : {'X', 'Y', 'Z'}) {
      const std::string t = std::string(1, c) + std::to_string(i) + "*" + std::string(1, c) + std::to_string(i + 1);
      basis.push_back(LocalOperator::from_pauli(PauliString::parse(t)));
    }
  }
  return GibbsModel(SiteSystem(n), std::move(basis), 1.0);
}

void BM_GibbsSpectrum(benchmark::State& state) {
  const auto model = heisenberg(static_cast<int>(state.range(0)));
  const Vector mu = Vector::Constant(model.num_params(), 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(gibbs_spectrum(model, mu));
}
BENCHMARK(BM_GibbsSpectrum)->DenseRange(4, 10, 2)->Unit(benchmark::kMillisecond);

void BM_DualHessian(benchmark::State& state) {
  const auto model = heisenberg(static_cast<int>(state.range(0)));
  const Vector mu = Vector::Constant(model.num_params(), 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(dual_hessian(model, mu, HessianMethod::spectral));
}
BENCHMARK(BM_DualHessian)->DenseRange(4, 8, 2)->Unit(benchmark::kMillisecond);

void BM_TransferMatrix(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  ChainSpec spec;
  spec.n = n;
  spec.beta = 1.0;
  spec.J.assign(static_cast<std::size_t>(n - 1), 0.7);
  spec.h.assign(static_cast<std::size_t>(n), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(chain_expectations(spec));
  state.SetComplexityN(n);
}
BENCHMARK(BM_TransferMatrix)->RangeMultiplier(4)->Range(16, 4096)->Complexity(benchmark::oN);

void BM_ChainSample(benchmark::State& state) {
  ChainSpec spec;
  spec.n = 200;
  spec.beta = 1.0;
  spec.J.assign(199, 0.7);
  spec.h.assign(200, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(chain_sample(spec, 1000, 7, 1));
}
BENCHMARK(BM_ChainSample)->Unit(benchmark::kMillisecond);

void BM_ShadowSample(benchmark::State& state) {
  const auto model = heisenberg(static_cast<int>(state.range(0)));
  const auto rho = gibbs_state(model, Vector::Constant(model.num_params(), 0.3));
  ShadowScheme scheme;
  scheme.seed = 11;
  for (auto _ : state) benchmark::DoNotOptimize(sample(rho, scheme, 10000, 1));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_ShadowSample)->DenseRange(2, 8, 3)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace qmaxent

BENCHMARK_MAIN();
