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

#include "qmaxent/commuting.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <queue>
#include <set>
#include <stdexcept>
#include <thread>

#include "qmaxent/random.hpp"

namespace qmaxent {

InteractionHypergraph::InteractionHypergraph(int vertices, std::vector<std::vector<int>> hyperedges)
    : n_(vertices), edges_(std::move(hyperedges)) {
  if (n_ < 1) throw std::invalid_argument("hypergraph needs at least one vertex");
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_));
  for (auto& e : edges_) {
    if (e.empty()) throw std::invalid_argument("hyperedges must be non-empty");
    std::sort(e.begin(), e.end());
    if (std::adjacent_find(e.begin(), e.end()) != e.end()) throw std::invalid_argument("hyperedge repeats a vertex");
    for (int v : e) {
      if (v < 0 || v >= n_) throw std::out_of_range("hyperedge vertex out of range");
    }
    for (std::size_t i = 0; i < e.size(); ++i) {
      for (std::size_t j = i + 1; j < e.size(); ++j) {
        adj[static_cast<std::size_t>(e[i])].push_back(e[j]);
        adj[static_cast<std::size_t>(e[j])].push_back(e[i]);
      }
    }
  }
  dist_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_), n_);
  for (int s = 0; s < n_; ++s) {
    std::queue<int> q;
    dist_[static_cast<std::size_t>(s * n_ + s)] = 0;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int w : adj[static_cast<std::size_t>(u)]) {
        auto& dw = dist_[static_cast<std::size_t>(s * n_ + w)];
        if (dw == n_ && w != s) {
          dw = dist_[static_cast<std::size_t>(s * n_ + u)] + 1;
          q.push(w);
        }
      }
    }
  }
  for (const auto& e : edges_) {
    int best = n_;
    for (int v = 0; v < n_; ++v) {
      int far = 0;
      for (int a : e) far = std::max(far, distance(v, a));
      best = std::min(best, far);
    }
    r0_ = std::max(r0_, best);
  }
}

InteractionHypergraph InteractionHypergraph::path(int n) {
  std::vector<std::vector<int>> e;
  for (int i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
  return {n, e};
}

InteractionHypergraph InteractionHypergraph::cycle(int n) {
  std::vector<std::vector<int>> e;
  for (int i = 0; i < n; ++i) e.push_back({i, (i + 1) % n});
  return {n, e};
}

InteractionHypergraph InteractionHypergraph::from_model(const GibbsModel& model) {
  std::set<std::vector<int>> seen;
  for (const auto& op : model.basis()) {
    auto s = op.support;
    std::sort(s.begin(), s.end());
    if (!s.empty()) seen.insert(s);
  }
  return {model.num_sites(), std::vector<std::vector<int>>(seen.begin(), seen.end())};
}

int InteractionHypergraph::set_distance(const std::vector<int>& a, const std::vector<int>& b) const {
  int best = n_;
  for (int u : a) {
    for (int v : b) best = std::min(best, distance(u, v));
  }
  return best;
}

int InteractionHypergraph::diameter() const {
  int best = 0;
  for (int d : dist_) {
    if (d < n_) best = std::max(best, d);
  }
  return best;
}

int InteractionHypergraph::ball_size(int v, int r) const {
  int count = 0;
  for (int u = 0; u < n_; ++u) count += distance(v, u) <= r ? 1 : 0;
  return count;
}

int InteractionHypergraph::sphere_size(int v, int r) const {
  int count = 0;
  for (int u = 0; u < n_; ++u) count += distance(v, u) == r ? 1 : 0;
  return count;
}

BallSphere ball_sphere_counts(const InteractionHypergraph& graph, int r) {
  if (r < 0) throw std::invalid_argument("radius must be >= 0");
  BallSphere out{0, 0};
  for (int v = 0; v < graph.vertices(); ++v) {
    out.ball = std::max(out.ball, graph.ball_size(v, r));
    out.sphere = std::max(out.sphere, graph.sphere_size(v, r));
  }
  return out;
}

PetzMap::PetzMap(const Matrix& sigma, const SiteSystem& system, int site) : sigma_(sigma), system_(system), site_(site) {
  if (static_cast<std::size_t>(sigma.rows()) != system.dim() || sigma.rows() != sigma.cols()) {
    throw std::invalid_argument("state dimension does not match the site system");
  }
  if (site < 0 || site >= system.sites()) throw std::out_of_range("site out of range");
  const auto eig = eigh(sigma);
  if (eig.values(0) <= 1e-12) throw NumericalError("Petz map needs a full-rank state");
  sqrt_sigma_ = herm_fn(eig, [](double x) { return std::sqrt(x); });
  quarter_ = herm_fn(eig, [](double x) { return std::pow(x, 0.25); });
  inv_quarter_ = herm_fn(eig, [](double x) { return std::pow(x, -0.25); });
  const std::vector<int> traced{site};
  const Matrix marginal = hermitian_part(partial_trace(sigma, system, traced), 1e-9);
  const Matrix inv_sqrt = herm_fn(marginal, [](double x) { return 1.0 / std::sqrt(x); });
  marginal_inv_sqrt_ = embed_local(LocalOperator{complement_sites(system, traced), inv_sqrt, std::nullopt}, system);
}

Matrix PetzMap::apply(const Matrix& x) const {
  if (x.rows() != sigma_.rows() || x.cols() != sigma_.cols()) throw std::invalid_argument("operator size mismatch");
  const std::vector<int> traced{site_};
  const Matrix inner = partial_trace(sqrt_sigma_ * x * sqrt_sigma_, system_, traced);
  const Matrix lifted = embed_local(LocalOperator{complement_sites(system_, traced), inner, std::nullopt}, system_);
  return marginal_inv_sqrt_ * lifted * marginal_inv_sqrt_;
}

Matrix PetzMap::weighted_matrix() const {
  const Eigen::Index dim = sigma_.rows();
  if (dim > 32) throw std::invalid_argument("weighted Petz matrix limited to dimension 32");
  Matrix out(dim * dim, dim * dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    for (Eigen::Index a = 0; a < dim; ++a) {
      const Matrix x = inv_quarter_.col(a) * inv_quarter_.row(b);
      const Matrix y = quarter_ * apply(x) * quarter_;
      out.col(a + b * dim) = Eigen::Map<const Eigen::VectorXcd>(y.data(), dim * dim);
    }
  }
  return out;
}

ConditionalExpectation::ConditionalExpectation(const Matrix& sigma, const SiteSystem& system, int site, double tol,
                                               int max_iters)
    : petz_(sigma, system, site), tol_(tol), max_iters_(max_iters) {
  if (!(tol > 0.0) || max_iters < 1) throw std::invalid_argument("need tol > 0 and max_iters >= 1");
  if (sigma.rows() <= 32) {
    const Matrix w = petz_.weighted_matrix();
    const Matrix herm = (w + w.adjoint()) * 0.5;
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm);
    const double cut = 1.0 - std::sqrt(tol);
    const auto& vals = es.eigenvalues();
    Matrix p = Matrix::Zero(herm.rows(), herm.cols());
    for (Eigen::Index k = 0; k < vals.size(); ++k) {
      if (vals(k) >= cut) p += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
    }
    projector_ = std::move(p);
  }
}

Matrix ConditionalExpectation::apply(const Matrix& x) const {
  if (!projector_) return apply_iterated(x);
  const Eigen::Index dim = x.rows();
  const auto& sigma = petz_.sigma();
  const auto eig = eigh(sigma);
  const Matrix quarter = herm_fn(eig, [](double v) { return std::pow(v, 0.25); });
  const Matrix inv_quarter = herm_fn(eig, [](double v) { return std::pow(v, -0.25); });
  const Matrix y = quarter * x * quarter;
  const Eigen::VectorXcd v = *projector_ * Eigen::Map<const Eigen::VectorXcd>(y.data(), dim * dim);
  const Matrix py = Eigen::Map<const Matrix>(v.data(), dim, dim);
  return inv_quarter * py * inv_quarter;
}

Matrix ConditionalExpectation::apply_iterated(const Matrix& x, int* iterations) const {
  const WeightedGeometry geo(petz_.sigma());
  const double scale = std::max(1.0, geo.norm(x));
  Matrix cur = x;
  for (int k = 1; k <= max_iters_; ++k) {
    Matrix next = petz_.apply(cur);
    const double diff = geo.norm(next - cur);
    cur = std::move(next);
    if (diff <= tol_ * scale) {
      if (iterations) *iterations = k;
      return cur;
    }
  }
  throw NumericalError("Petz iteration did not converge within the iteration cap");
}

Matrix local_hamiltonian(const GibbsModel& model, const Vector& mu, int site) {
  if (mu.size() != model.num_params()) throw std::invalid_argument("parameter length mismatch");
  const auto dim = static_cast<Eigen::Index>(model.system().dim());
  Matrix h = Matrix::Zero(dim, dim);
  for (int i = 0; i < model.num_params(); ++i) {
    const auto& sup = model.basis()[static_cast<std::size_t>(i)].support;
    if (std::find(sup.begin(), sup.end(), site) != sup.end()) h += mu(i) * model.dense(i);
  }
  return h;
}

double contraction_coefficient(const GibbsModel& model, const Vector& mu, int site) {
  if (!model.commuting()) throw std::invalid_argument("contraction coefficient needs a commuting basis");
  const SiteSystem& sys = model.system();
  if (site < 0 || site >= sys.sites()) throw std::out_of_range("site out of range");
  const std::vector<int> traced{site};
  for (int i = 0; i < model.num_params(); ++i) {
    const auto& sup = model.basis()[static_cast<std::size_t>(i)].support;
    if (std::find(sup.begin(), sup.end(), site) == sup.end()) continue;
    if (partial_trace(model.dense(i), sys, traced).norm() > 1e-10 * static_cast<double>(sys.dim())) {
      throw std::invalid_argument("basis term " + std::to_string(i) + " is not traceless on the site");
    }
  }
  const Matrix hx = local_hamiltonian(model, mu, site);
  const Matrix sx = herm_fn(hx, [&](double e) { return std::exp(-model.beta() * e); });
  const Matrix sigma_x = sx / sx.trace().real();
  const double mean = (sigma_x * hx).trace().real();
  const auto dim = static_cast<Eigen::Index>(sys.dim());
  const Matrix centered = hx - mean * Matrix::Identity(dim, dim);
  const WeightedGeometry geo(sigma_x);
  const double den = geo.norm(centered);
  if (den <= 1e-14) throw std::invalid_argument("local Hamiltonian is proportional to the identity");
  const PetzMap petz(sigma_x, sys, site);
  return geo.norm(petz.apply(hx) - mean * Matrix::Identity(dim, dim)) / den;
}

ContractionSearch contraction_search(const GibbsModel& model, int site, int grid, int multistart, std::uint64_t seed,
                                     int threads) {
  if (grid < 2) throw std::invalid_argument("grid needs at least 2 points per coordinate");
  std::vector<int> coords;
  for (int i = 0; i < model.num_params(); ++i) {
    const auto& sup = model.basis()[static_cast<std::size_t>(i)].support;
    if (std::find(sup.begin(), sup.end(), site) != sup.end()) coords.push_back(i);
  }
  if (coords.empty()) throw std::invalid_argument("no basis term touches the site");
  const auto k = coords.size();

  std::vector<Vector> points;
  auto make = [&](const std::vector<double>& vals) {
    Vector mu = Vector::Zero(model.num_params());
    for (std::size_t j = 0; j < k; ++j) mu(coords[j]) = vals[j];
    points.push_back(std::move(mu));
  };
  if (k <= 3) {
    std::vector<int> idx(k, 0);
    for (;;) {
      std::vector<double> vals(k);
      for (std::size_t j = 0; j < k; ++j) vals[j] = -1.0 + 2.0 * idx[j] / (grid - 1);
      make(vals);
      std::size_t j = 0;
      while (j < k && ++idx[j] == grid) idx[j++] = 0;
      if (j == k) break;
    }
  } else {
    if (k <= 10) {
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
        std::vector<double> vals(k);
        for (std::size_t j = 0; j < k; ++j) vals[j] = (mask >> j) & 1U ? 1.0 : -1.0;
        make(vals);
      }
    }
    Rng rng(derive_seed(seed, "contraction-multistart"));
    for (int s = 0; s < multistart; ++s) {
      std::vector<double> vals(k);
      for (auto& v : vals) v = rng.uniform(-1.0, 1.0);
      make(vals);
    }
  }

  std::vector<double> values(points.size(), -1.0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&]() {
    try {
      for (std::size_t i = next++; i < points.size(); i = next++) {
        if (local_hamiltonian(model, points[i], site).norm() <= 1e-12) continue;
        try {
          values[i] = contraction_coefficient(model, points[i], site);
        } catch (const std::invalid_argument&) {
          // H_x proportional to the identity at this point
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!failure) failure = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < std::max(1, threads); ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  ContractionSearch out{-1.0, Vector(), static_cast<int>(points.size())};
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (values[i] > out.value) {
      out.value = values[i];
      out.argmax = points[i];
    }
  }
  if (out.value < 0.0) throw std::invalid_argument("local Hamiltonian vanishes on every search point");
  return out;
}

double hessian_lower_bound(double beta, int d, const InteractionHypergraph& graph, double c_beta) {
  if (!(beta >= 0.0) || d < 1) throw std::invalid_argument("need beta >= 0 and d >= 1");
  if (!(c_beta >= 0.0 && c_beta < 1.0)) throw std::invalid_argument("contraction coefficient must lie in [0, 1)");
  const int r0 = graph.radius();
  const double b2 = ball_sphere_counts(graph, 2 * r0).ball;
  const double b4 = ball_sphere_counts(graph, 4 * r0).ball;
  return beta * beta * std::exp(-beta * (b2 + 2.0 * b4)) * std::pow(static_cast<double>(d), -b2) *
         (1.0 - c_beta * c_beta);
}

double hessian_upper_bound_decay(const DecaySpec& decay, double beta, int d, const InteractionHypergraph& graph) {
  if (!(beta >= 0.0) || d < 1) throw std::invalid_argument("need beta >= 0 and d >= 1");
  // The series stops at the diameter, so a non-decaying envelope (xi <= 0)
  // still gives a finite, valid bound on a finite graph.
  if (!(decay.c >= 0.0) || std::isnan(decay.xi)) throw std::invalid_argument("decay needs c >= 0 and a numeric xi");
  const int r0 = graph.radius();
  const double b1 = ball_sphere_counts(graph, r0).ball;
  const double b2 = ball_sphere_counts(graph, 2 * r0).ball;
  double series = 0.0;
  if (std::isfinite(decay.xi)) {
    for (int r = 1; r <= graph.diameter(); ++r) series += std::exp(-decay.xi * r) * ball_sphere_counts(graph, r).sphere;
  }
  return beta * beta * (1.0 + decay.c * b1 * b2 * std::pow(static_cast<double>(d), 2.0 * b1) * series);
}

DecaySpec correlation_fit(const Matrix& sigma, const std::vector<CorrelationPair>& pairs) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& p : pairs) {
    if (p.a.rows() != sigma.rows() || p.b.rows() != sigma.rows()) throw std::invalid_argument("operator size mismatch");
    const double cov = ((sigma * p.a * p.b).trace() - (sigma * p.a).trace() * (sigma * p.b).trace()).real();
    const double norm = operator_norm(p.a) * operator_norm(p.b);
    if (norm <= 0.0) continue;
    const double v = std::abs(cov) / norm;
    if (v < 1e-12) continue;
    xs.push_back(p.distance);
    ys.push_back(std::log(v));
  }
  DecaySpec out;
  out.points = static_cast<int>(xs.size());
  // No resolved covariance: c = 0 bounds every pair exactly.
  if (xs.empty()) return out;
  std::set<int> distinct;
  for (const auto& p : pairs) distinct.insert(p.distance);
  if (distinct.size() < 3) throw std::invalid_argument("correlation fit needs at least 3 distinct distances");
  if (std::set<double>(xs.begin(), xs.end()).size() < 2) {
    throw NumericalError("correlations resolved at fewer than 2 distinct distances");
  }
  const auto n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  out.xi = -slope;
  double rss = 0.0;
  double envelope = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    rss += r * r;
    envelope = std::max(envelope, ys[i] + out.xi * xs[i]);
  }
  out.residual = std::sqrt(rss / n);
  out.c = std::exp(std::max(intercept, envelope));
  return out;
}

bool orthogonal_traceless_basis(const GibbsModel& model, double tol) {
  const double scale = static_cast<double>(model.system().dim());
  for (int i = 0; i < model.num_params(); ++i) {
    if (std::abs(model.dense(i).trace()) > tol * scale) return false;
    for (int j = i + 1; j < model.num_params(); ++j) {
      if (std::abs(model.dense(i).cwiseProduct(model.dense(j).transpose()).sum()) > tol * scale) return false;
    }
  }
  return true;
}

}  // namespace qmaxent
