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
#include <limits>
#include <optional>
#include <vector>

#include "qmaxent/gibbs_engine.hpp"

namespace qmaxent {

/// Interaction hypergraph with the shortest-path metric of its vertex graph
/// (two vertices are adjacent when some hyperedge contains both).
class InteractionHypergraph {
 public:
  InteractionHypergraph(int vertices, std::vector<std::vector<int>> hyperedges);

  static InteractionHypergraph path(int n);
  static InteractionHypergraph cycle(int n);
  /// Hyperedges are the supports of the basis operators (duplicates removed).
  static InteractionHypergraph from_model(const GibbsModel& model);

  int vertices() const { return n_; }
  const std::vector<std::vector<int>>& hyperedges() const { return edges_; }
  /// Graph distance; unreachable pairs are at distance vertices().
  int distance(int u, int v) const { return dist_[static_cast<std::size_t>(u * n_ + v)]; }
  /// Minimum pairwise distance between two vertex sets.
  int set_distance(const std::vector<int>& a, const std::vector<int>& b) const;
  /// Smallest r0 with every hyperedge inside some ball B(v, r0).
  int radius() const { return r0_; }
  int diameter() const;

  int ball_size(int v, int r) const;
  int sphere_size(int v, int r) const;

 private:
  int n_;
  std::vector<std::vector<int>> edges_;
  std::vector<int> dist_;
  int r0_ = 0;
};

struct BallSphere {
  int ball;    // B(r) = max_v |B(v, r)|
  int sphere;  // S(r) = max_v |{u : d(u, v) = r}|
};

BallSphere ball_sphere_counts(const InteractionHypergraph& graph, int r);

/// X -> tr_x(sigma)^{-1/2} tr_x(sigma^{1/2} X sigma^{1/2}) tr_x(sigma)^{-1/2},
/// re-embedded with the identity on site x.
class PetzMap {
 public:
  PetzMap(const Matrix& sigma, const SiteSystem& system, int site);

  Matrix apply(const Matrix& x) const;
  /// The map in sigma-weighted coordinates Y = sigma^{1/4} X sigma^{1/4}, as a
  /// D^2 x D^2 matrix acting on column-major vectorizations. Hermitian exactly
  /// when the map is self-adjoint for <.,.>_sigma. Limited to D <= 32.
  Matrix weighted_matrix() const;

  const Matrix& sigma() const { return sigma_; }
  const SiteSystem& system() const { return system_; }
  int site() const { return site_; }

 private:
  Matrix sigma_;
  SiteSystem system_;
  int site_;
  Matrix sqrt_sigma_;
  Matrix quarter_;
  Matrix inv_quarter_;
  Matrix marginal_inv_sqrt_;  // I_x (x) tr_x(sigma)^{-1/2}
};

/// Limit of repeated Petz maps. For D <= 32 it is the exact spectral projection
/// of the weighted Petz matrix onto its eigenvalue-1 eigenspace; otherwise the
/// map is iterated on each input until successive images differ by <= tol in
/// the sigma-weighted norm.
class ConditionalExpectation {
 public:
  ConditionalExpectation(const Matrix& sigma, const SiteSystem& system, int site, double tol = 1e-10,
                         int max_iters = 10000);

  Matrix apply(const Matrix& x) const;
  /// Iterates the Petz map on x; throws NumericalError past max_iters.
  Matrix apply_iterated(const Matrix& x, int* iterations = nullptr) const;
  bool spectral() const { return projector_.has_value(); }

 private:
  PetzMap petz_;
  double tol_;
  int max_iters_;
  std::optional<Matrix> projector_;
};

/// H_x(mu) = sum of mu_i E_i over basis terms whose support contains x.
Matrix local_hamiltonian(const GibbsModel& model, const Vector& mu, int site);

/// ||R_x(H_x) - tr[s H_x] I||_{2,s} / ||H_x - tr[s H_x] I||_{2,s} with s the
/// Gibbs state of H_x(mu) and R_x its Petz map on site x. Requires a commuting
/// basis of operators that are traceless on their support.
double contraction_coefficient(const GibbsModel& model, const Vector& mu, int site);

struct ContractionSearch {
  double value;  // best ratio found, a lower bound on the maximum over the ball
  Vector argmax;
  int evaluations;
};

/// Maximizes the contraction ratio over mu in the unit l_inf ball. Only the
/// coordinates of terms touching `site` matter: a grid with `grid` points per
/// coordinate when there are at most 3 of them, else `multistart` random
/// points plus the corners of a coarse grid.
ContractionSearch contraction_search(const GibbsModel& model, int site, int grid = 5, int multistart = 200,
                                     std::uint64_t seed = 0, int threads = 1);

/// beta^2 exp(-beta (B(2 r0) + 2 B(4 r0))) d^{-B(2 r0)} (1 - c^2).
double hessian_lower_bound(double beta, int d, const InteractionHypergraph& graph, double c_beta);

/// |cov(O_A, O_B)| <= c ||O_A|| ||O_B|| exp(-xi d(A, B)).
struct DecaySpec {
  double c = 0.0;
  double xi = std::numeric_limits<double>::infinity();
  double residual = 0.0;  // rms of the log-linear fit
  int points = 0;         // pairs used in the fit
};

/// beta^2 (1 + c B(r0) B(2 r0) d^{2 B(r0)} sum_{r=1}^{diam} e^{-xi r} S(r)).
double hessian_upper_bound_decay(const DecaySpec& decay, double beta, int d, const InteractionHypergraph& graph);

struct CorrelationPair {
  Matrix a;  // full-space operators
  Matrix b;
  int distance;
};

/// Least-squares fit of log|cov| against distance; |cov| (normalized by the
/// operator norms) below 1e-12 is dropped; if all are dropped the result is
/// c = 0. Otherwise needs at least 3 distinct distances. The returned c is
/// raised to the envelope max |cov| e^{xi d} so the fitted decay bounds every
/// input pair. On small systems the slope can come out non-decaying (xi <= 0);
/// it is returned as is.
DecaySpec correlation_fit(const Matrix& sigma, const std::vector<CorrelationPair>& pairs);

/// True when tr(E_i E_j) = 0 for i != j and every E_i is traceless.
bool orthogonal_traceless_basis(const GibbsModel& model, double tol = 1e-10);

}  // namespace qmaxent
