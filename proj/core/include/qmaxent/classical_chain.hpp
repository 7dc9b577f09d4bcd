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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qmaxent/gibbs_engine.hpp"
#include "qmaxent/maxent_solver.hpp"
#include "qmaxent/shadow_sampler.hpp"

namespace qmaxent {

enum class Boundary { open, periodic };

/// Classical spin chain with energy H(s) = sum_i J_i s_i s_{i+1} + sum_i h_i s_i
/// and weight exp(-beta H(s)). Open chains have n-1 couplings, periodic
/// chains n (the last one joins site n-1 to site 0, n >= 3).
struct ChainSpec {
  int n = 0;
  std::vector<double> J;
  std::vector<double> h;
  double beta = 1.0;
  Boundary boundary = Boundary::open;

  int bonds() const { return boundary == Boundary::open ? n - 1 : n; }
  void validate() const;
};

struct ChainExpectations {
  Vector zz;  // <s_i s_{i+1}> per bond
  Vector z;   // <s_i> per site
};

double chain_log_partition(const ChainSpec& spec);
ChainExpectations chain_expectations(const ChainSpec& spec);

/// Marginal distribution of sites start .. start+width-1 (no wrap-around),
/// indexed with site `start` as the most significant bit and bit 1 meaning
/// spin -1. width <= 16.
std::vector<double> chain_window_distribution(const ChainSpec& spec, int start, int width);

/// Exact i.i.d. samples by sequential conditionals from backward messages.
/// Deterministic for a given seed regardless of `threads`.
std::vector<SpinConfig> chain_sample(const ChainSpec& spec, std::size_t count, std::uint64_t seed, int threads = 1);

/// Packed bit matrix: JSON header line, then ceil(n/8) bytes per sample,
/// site 0 in the high bit of the first byte, bit set meaning spin -1.
void write_samples(std::ostream& out, const std::vector<SpinConfig>& samples, std::uint64_t seed);
std::vector<SpinConfig> read_samples(std::istream& in, std::uint64_t* seed = nullptr);

/// Gibbs family over the chain basis: couplings Z_i Z_{i+1} first (one per
/// bond), then fields Z_i when `fields` is set.
class ChainFamily final : public GibbsFamily {
 public:
  ChainFamily(int n, double beta, Boundary boundary, bool fields);

  int num_params() const override;
  double beta() const override { return beta_; }
  int num_sites() const override { return n_; }
  int local_dim() const override { return 2; }
  double log_partition(const Vector& mu) const override;
  Vector expectations(const Vector& mu) const override;

  ChainSpec spec(const Vector& mu) const;
  Vector params(const ChainSpec& spec) const;
  Vector pack(const ChainExpectations& e) const;
  /// Pauli strings of the basis in parameter order.
  std::vector<PauliString> observables() const;
  bool fields() const { return fields_; }
  Boundary boundary() const { return boundary_; }

 private:
  int n_;
  double beta_;
  Boundary boundary_;
  bool fields_;
};

struct ChainReconstruction {
  ChainSpec spec;
  SolverResult result;
};

/// Max-entropy reconstruction with exact chain expectations as the gradient
/// oracle. Without fields on an open chain the bond variables are independent
/// and U defaults to beta^2; otherwise to 2 beta^2 m.
ChainReconstruction chain_maxent_reconstruct(const Vector& e_hat, const ChainFamily& family, SolverOptions opts,
                                             const Vector* lambda_true = nullptr);

/// Brickwork circuit of two-qubit gates. layers[l] holds gates on pairs
/// (q, q+1) with q = offset(l), offset(l)+2, ...; offset alternates 0, 1, 0, ...
struct BrickworkCircuit {
  int n = 0;
  std::vector<std::vector<Eigen::Matrix4cd>> layers;

  static int offset(int layer) { return layer % 2; }
  /// Layers of independent Haar-random gates.
  static BrickworkCircuit haar_random(int n, int depth, std::uint64_t seed);
  static BrickworkCircuit identity(int n, int depth);
};

/// Haar-random unitary of the given dimension.
Matrix haar_unitary(int dim, Rng& rng);

struct WindowedObservable {
  /// Pauli-Z sites of each term before the circuit, e.g. {i, i+2}.
  std::vector<std::vector<int>> terms;
  double weight = 1.0;  // common prefactor

  /// n^{-1} sum_i Z_i Z_{i+offset} over the open-chain range.
  static WindowedObservable zz_average(int n, int offset);
};

/// Expectation of weight * sum_t U Z_t U^dagger in the chain state, using the
/// lightcone window of each term (width <= 12).
double windowed_expectation(const ChainSpec& spec, const BrickworkCircuit& circuit, const WindowedObservable& obs,
                            int threads = 1);

/// |<O>_true - <O>_reconstructed| for O = weight * sum_t U Z_t U^dagger.
double windowed_observable_error(const ChainSpec& truth, const ChainSpec& reconstructed,
                                 const BrickworkCircuit& circuit, const WindowedObservable& obs, int threads = 1);

/// ||O||_inf upper bound weight * (number of terms).
double windowed_norm_bound(const WindowedObservable& obs);

}  // namespace qmaxent
