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

#include "qmaxent/wasserstein.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "qmaxent/gibbs_engine.hpp"
#include "qmaxent/linear_program.hpp"

namespace qmaxent {

namespace {

constexpr std::size_t kExactDimCap = 256;

void require_square(const Matrix& o, const SiteSystem& system) {
  if (static_cast<std::size_t>(o.rows()) != system.dim() || o.rows() != o.cols()) {
    throw std::invalid_argument("operator dimension does not match the site system");
  }
}

// I_S / d^{|S|} (x) tr_S(x), embedded back into the full space.
Matrix replace_by_maximally_mixed(const Matrix& x, const SiteSystem& system, const std::vector<int>& traced) {
  if (traced.empty()) return x;
  const Matrix reduced = partial_trace(x, system, traced);
  const double scale = std::pow(static_cast<double>(system.local_dim()), static_cast<double>(traced.size()));
  return embed_local(LocalOperator{complement_sites(system, traced), reduced / scale, std::nullopt}, system);
}

// T log tr(e^{A/T} + e^{-A/T}) and its gradient in A, from the spectrum of A.
struct Smoothed {
  double value;
  double norm;  // exact ||A||_inf
  Matrix grad;
};

Smoothed smooth_norm(const Matrix& a, double temp) {
  const auto eig = eigh(a);
  const Vector& v = eig.values;
  const double top = v.cwiseAbs().maxCoeff();
  Vector plus = ((v.array() - top) / temp).exp();
  Vector minus = ((-v.array() - top) / temp).exp();
  const double s = plus.sum() + minus.sum();
  Smoothed out;
  out.norm = top;
  out.value = top + temp * std::log(s);
  const Vector w = (plus - minus) / s;
  out.grad = eig.vectors * w.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
  return out;
}

}  // namespace

std::string DifferentialStructure::check(double tol) const {
  if (ops.size() != omega.size()) return "operator and frequency lists differ in length";
  const auto dim = static_cast<Eigen::Index>(system.dim());
  for (std::size_t k = 0; k < ops.size(); ++k) {
    if (ops[k].rows() != dim || ops[k].cols() != dim) return "operator " + std::to_string(k) + " has the wrong size";
    if (operator_norm(ops[k]) > 1.0 + tol) return "operator " + std::to_string(k) + " has norm > 1";
    bool closed = false;
    for (std::size_t j = 0; j < ops.size() && !closed; ++j) {
      closed = (ops[j] - ops[k].adjoint()).norm() <= tol * std::max(1.0, ops[k].norm());
    }
    if (!closed) return "adjoint of operator " + std::to_string(k) + " is missing";
  }
  if (reference) {
    const auto eig = eigh(*reference);
    if (eig.values(0) <= 1e-12) return "reference state is not full rank";
    const Matrix inv = herm_fn(eig, [](double x) { return 1.0 / x; });
    for (std::size_t k = 0; k < ops.size(); ++k) {
      const Matrix lhs = *reference * ops[k] * inv;
      if ((lhs - std::exp(-omega[k]) * ops[k]).norm() > tol * std::max(1.0, lhs.norm())) {
        return "operator " + std::to_string(k) + " is not a modular eigenvector with its frequency";
      }
    }
  }
  return {};
}

DifferentialStructure depolarizing_structure(const SiteSystem& system) {
  if (system.local_dim() != 2) throw std::invalid_argument("Pauli structure needs qubits");
  DifferentialStructure ds{system, {}, {}, DensityOperator::maximally_mixed(system).matrix()};
  for (int s = 0; s < system.sites(); ++s) {
    for (char c : {'X', 'Y', 'Z'}) {
      ds.ops.push_back(embed_pauli(PauliString({{s, c}}), system));
      ds.omega.push_back(0.0);
    }
  }
  return ds;
}

DifferentialStructure shallow_circuit_structure(const SiteSystem& system, double p, const std::optional<Matrix>& circuit) {
  if (system.local_dim() != 2) throw std::invalid_argument("shallow-circuit structure needs qubits");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("excitation probability must be in (0, 1)");
  const auto dim = static_cast<Eigen::Index>(system.dim());
  if (circuit && (circuit->rows() != dim || circuit->cols() != dim)) {
    throw std::invalid_argument("circuit dimension does not match the site system");
  }
  Matrix raise = Matrix::Zero(2, 2);
  raise(1, 0) = 1.0;
  const double amp = std::pow(p * (1.0 - p), 0.25);
  const double w = std::log((1.0 - p) / p);
  Matrix tau = Matrix::Zero(2, 2);
  tau(0, 0) = 1.0 - p;
  tau(1, 1) = p;
  std::vector<Matrix> factors(static_cast<std::size_t>(system.sites()), tau);
  Matrix ref = DensityOperator::product(factors, system).matrix();

  DifferentialStructure ds{system, {}, {}, std::nullopt};
  for (int s = 0; s < system.sites(); ++s) {
    const Matrix a = embed_local(LocalOperator{{s}, amp * raise, std::nullopt}, system);
    ds.ops.push_back(a);
    ds.omega.push_back(w);
    ds.ops.push_back(a.adjoint());
    ds.omega.push_back(-w);
  }
  if (circuit) {
    for (auto& op : ds.ops) op = *circuit * op * circuit->adjoint();
    ref = *circuit * ref * circuit->adjoint();
  }
  ds.reference = ref;
  return ds;
}

double lip_diff(const Matrix& o, const DifferentialStructure& ds) {
  require_square(o, ds.system);
  if (ds.ops.size() != ds.omega.size()) throw std::invalid_argument("operator and frequency lists differ in length");
  double total = 0.0;
  for (std::size_t k = 0; k < ds.ops.size(); ++k) {
    const double c = operator_norm(commutator(ds.ops[k], o));
    total += (std::exp(-ds.omega[k] / 2.0) + std::exp(ds.omega[k] / 2.0)) * c * c;
  }
  return std::sqrt(total);
}

double lip_hamming_upper(const std::vector<LocalOperator>& terms, const SiteSystem& system) {
  std::vector<double> load(static_cast<std::size_t>(system.sites()), 0.0);
  for (const auto& t : terms) {
    const double norm = operator_norm(t.matrix);
    for (int s : t.support) {
      if (s < 0 || s >= system.sites()) throw std::out_of_range("term support outside the site system");
      load[static_cast<std::size_t>(s)] += norm;
    }
  }
  return 2.0 * std::sqrt(static_cast<double>(system.sites())) * *std::max_element(load.begin(), load.end());
}

Bracket site_distance(const Matrix& o, const SiteSystem& system, int site, double tol) {
  require_square(o, system);
  if (!is_hermitian(o)) throw std::invalid_argument("Lipschitz constants are defined for Hermitian operators");
  if (system.dim() > kExactDimCap) throw std::invalid_argument("exact Lipschitz computation limited to dimension 256");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  const std::vector<int> traced{site};
  const auto rest = complement_sites(system, traced);
  const double d = system.local_dim();
  auto embed_rest = [&](const Matrix& y) { return embed_local(LocalOperator{rest, y, std::nullopt}, system); };

  Matrix y = partial_trace(o, system, traced) / d;
  Bracket br;
  br.upper = operator_norm(o - embed_rest(y));
  br.lower = 0.0;
  const double scale = std::max(br.upper, 1e-300);
  if (br.upper <= tol) {
    br.certified = true;
    return br;
  }
  const double log2d = std::log(2.0 * static_cast<double>(system.dim()));

  auto witness = [&](const Matrix& g) {
    const Matrix x = g - replace_by_maximally_mixed(g, system, traced);
    const double tn = trace_norm(x);
    if (tn > 1e-300) br.lower = std::max(br.lower, (o * x).trace().real() / tn);
  };

  for (double temp = 0.1 * scale; ; temp *= 0.25) {
    Smoothed cur = smooth_norm(o - embed_rest(y), temp);
    Matrix grad = -partial_trace(cur.grad, system, traced);
    double step = temp;
    Matrix prev_y;
    Matrix prev_grad;
    for (int it = 0; it < 3000; ++it) {
      br.upper = std::min(br.upper, cur.norm);
      if (grad.norm() <= 1e-3 * tol) break;
      if (it > 0) {
        const Matrix sy = y - prev_y;
        const Matrix sg = grad - prev_grad;
        const double denom = (sy.adjoint() * sg).trace().real();
        if (denom > 0.0) step = sy.squaredNorm() / denom;
      }
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Matrix trial = y - step * grad;
        Smoothed next = smooth_norm(o - embed_rest(trial), temp);
        if (next.value <= cur.value - 1e-4 * step * grad.squaredNorm()) {
          prev_y = y;
          prev_grad = grad;
          y = trial;
          cur = std::move(next);
          grad = -partial_trace(cur.grad, system, traced);
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
    }
    br.upper = std::min(br.upper, cur.norm);
    witness(cur.grad);
    if (br.upper - br.lower <= tol) break;
    if (temp * log2d < 1e-3 * tol) break;
  }
  br.certified = br.upper - br.lower <= tol;
  return br;
}

Bracket lip_hamming_exact(const Matrix& o, const SiteSystem& system, double tol) {
  const double factor = 2.0 * std::sqrt(static_cast<double>(system.sites()));
  Bracket out;
  out.certified = true;
  for (int i = 0; i < system.sites(); ++i) {
    const Bracket b = site_distance(o, system, i, tol / factor);
    out.lower = std::max(out.lower, factor * b.lower);
    out.upper = std::max(out.upper, factor * b.upper);
  }
  out.certified = out.upper - out.lower <= tol;
  return out;
}

bool QuasiLocalClass::contains(const std::vector<LocalOperator>& decomposition, const SiteSystem& system) const {
  if (k < 1 || !(g > 0.0)) throw std::invalid_argument("quasi-local class needs k >= 1 and g > 0");
  std::vector<double> load(static_cast<std::size_t>(system.sites()), 0.0);
  for (const auto& x : decomposition) {
    if (static_cast<int>(x.support.size()) > k) return false;
    const double norm = operator_norm(x.matrix);
    for (int s : x.support) load[static_cast<std::size_t>(s)] += norm;
  }
  return std::all_of(load.begin(), load.end(), [&](double v) { return v <= g * (1.0 + 1e-12); });
}

double w1_telescoping(const Matrix& delta, const SiteSystem& system, const std::vector<int>& order) {
  require_square(delta, system);
  if (static_cast<int>(order.size()) != system.sites()) throw std::invalid_argument("ordering must list every site");
  std::vector<int> traced;
  Matrix prev = delta;
  double total = 0.0;
  for (int s : order) {
    traced.push_back(s);
    const Matrix next = replace_by_maximally_mixed(delta, system, traced);
    total += trace_norm(prev - next);
    prev = next;
  }
  return total / (2.0 * std::sqrt(static_cast<double>(system.sites())));
}

namespace {

double hamming_lip_upper_of(const Matrix& o, const SiteSystem& system, double locality_bound) {
  double best = locality_bound;
  if (system.dim() <= 16) best = std::min(best, lip_hamming_exact(o, system, 1e-7).upper);
  return best;
}

double hamming_lower(const Matrix& delta, const SiteSystem& system) {
  const int n = system.sites();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  double best = 0.0;
  // Rounding noise in vanishing eigenvalues must not pick a sign, or a zero
  // marginal yields a witness with a near-zero Lipschitz constant.
  const double zero = 1e-12 * std::max(1.0, trace_norm(delta));
  const auto sign = [zero](double x) { return x > zero ? 1.0 : (x < -zero ? -1.0 : 0.0); };
  auto consider = [&](const Matrix& o, double lip) {
    if (lip <= 1e-12) return;
    best = std::max(best, o.cwiseProduct(delta.transpose()).sum().real() / lip);
  };

  // Helstrom witness of the full difference.
  {
    const auto eig = eigh(delta);
    const Matrix o = herm_fn(eig, sign);
    consider(o, hamming_lip_upper_of(o, system, 2.0 * sqrt_n * operator_norm(o)));
  }
  // Single-site Helstrom witnesses of the marginal differences.
  for (int s = 0; s < n; ++s) {
    const std::vector<int> keep{s};
    const Matrix local = partial_trace(delta, system, complement_sites(system, keep));
    if (trace_norm(local) <= zero) continue;
    const auto eig = eigh(local);
    const Matrix o = herm_fn(eig, sign);
    const auto oe = eigh(o);
    const double lip = sqrt_n * (oe.values.maxCoeff() - oe.values.minCoeff());
    consider(embed_local(LocalOperator{keep, o, std::nullopt}, system), lip);
  }
  // Packing LP over one- and two-local Pauli strings.
  if (system.local_dim() == 2) {
    std::vector<PauliString> paulis;
    const char letters[3] = {'X', 'Y', 'Z'};
    for (int i = 0; i < n; ++i) {
      for (char a : letters) paulis.push_back(PauliString({{i, a}}));
      for (int j = i + 1; j < n; ++j) {
        for (char a : letters) {
          for (char b : letters) paulis.push_back(PauliString({{i, a}, {j, b}}));
        }
      }
    }
    const auto m = static_cast<Eigen::Index>(paulis.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, m);
    Eigen::VectorXd c(m);
    Eigen::VectorXd signed_c(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto& p = paulis[static_cast<std::size_t>(k)];
      signed_c(k) = embed_pauli(p, system).cwiseProduct(delta.transpose()).sum().real();
      c(k) = std::abs(signed_c(k));
      for (int s : p.support()) a(s, k) = 1.0;
    }
    if (c.maxCoeff() > 1e-14) {
      const auto lp = maximize_packing_lp(a, Eigen::VectorXd::Ones(n), c);
      const auto dim = static_cast<Eigen::Index>(system.dim());
      Matrix o = Matrix::Zero(dim, dim);
      for (Eigen::Index k = 0; k < m; ++k) {
        if (lp.x(k) <= 0.0) continue;
        const double sign = signed_c(k) >= 0.0 ? 1.0 : -1.0;
        o += sign * lp.x(k) * embed_pauli(paulis[static_cast<std::size_t>(k)], system);
      }
      consider(o, hamming_lip_upper_of(o, system, 2.0 * sqrt_n));
    }
  }
  return best;
}

double loc_value(const Matrix& delta, const SiteSystem& system, const QuasiLocalClass& cls) {
  if (cls.k < 1 || !(cls.g > 0.0)) throw std::invalid_argument("quasi-local class needs k >= 1 and g > 0");
  const int n = system.sites();
  std::vector<std::vector<int>> subsets;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (!cur.empty()) subsets.push_back(cur);
    if (static_cast<int>(cur.size()) == cls.k) return;
    for (int s = start; s < n; ++s) {
      cur.push_back(s);
      self(self, s + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  const auto m = static_cast<Eigen::Index>(subsets.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, m);
  Eigen::VectorXd c(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& sub = subsets[static_cast<std::size_t>(k)];
    c(k) = trace_norm(partial_trace(delta, system, complement_sites(system, sub)));
    for (int s : sub) a(s, k) = 1.0;
  }
  const auto lp = maximize_packing_lp(a, Eigen::VectorXd::Constant(n, cls.g), c);
  return lp.value / std::sqrt(static_cast<double>(n));
}

}  // namespace

W1Bounds w1_bounds(const DensityOperator& rho, const DensityOperator& sigma, const W1Options& opts) {
  if (!(rho.system() == sigma.system())) throw std::invalid_argument("states live on different systems");
  const SiteSystem& system = rho.system();
  const Matrix delta = rho.matrix() - sigma.matrix();
  W1Bounds out;
  if (delta.norm() <= 1e-14) return out;
  if (opts.mode == W1Mode::loc) {
    out.lower = out.upper = loc_value(delta, system, opts.loc);
  } else {
    out.lower = hamming_lower(delta, system);
    std::vector<int> order(static_cast<std::size_t>(system.sites()));
    std::iota(order.begin(), order.end(), 0);
    out.upper = std::numeric_limits<double>::infinity();
    if (system.sites() <= 5) {
      do {
        out.upper = std::min(out.upper, w1_telescoping(delta, system, order));
      } while (std::next_permutation(order.begin(), order.end()));
    } else {
      out.upper = w1_telescoping(delta, system, order);
      std::reverse(order.begin(), order.end());
      out.upper = std::min(out.upper, w1_telescoping(delta, system, order));
    }
  }
  if (opts.tc_alpha) {
    if (!(*opts.tc_alpha > 0.0)) throw std::invalid_argument("TC constant must be > 0");
    out.upper = std::min(out.upper, std::sqrt(relative_entropy(rho, sigma) / (2.0 * *opts.tc_alpha)));
  }
  out.upper = std::max(out.upper, out.lower);
  return out;
}

TcConstant tc_constant_local(int k, double g, double beta) {
  if (k < 1 || !(g > 0.0)) throw std::invalid_argument("quasi-local class needs k >= 1 and g > 0");
  if (!(beta >= 0.0)) throw std::invalid_argument("inverse temperature must be >= 0");
  const double beta_c = 1.0 / (8.0 * std::exp(3.0) * g * k);
  if (beta >= beta_c) throw std::invalid_argument("inverse temperature must lie below the critical value");
  return {beta_c, std::sqrt(2.0 * g / (beta_c - beta))};
}

TcReport tc_verify(const DensityOperator& sigma, const std::vector<DensityOperator>& ensemble, double rhs_factor,
                   const W1Options& opts, int threads) {
  if (!(rhs_factor > 0.0)) throw std::invalid_argument("TC factor must be > 0");
  if (min_eigenvalue(sigma.matrix()) <= 1e-12) throw NumericalError("reference state must be full rank");
  W1Options inner = opts;
  inner.tc_alpha.reset();
  TcReport report;
  report.records.resize(ensemble.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&]() {
    try {
      for (std::size_t i = next++; i < ensemble.size(); i = next++) {
        const auto b = w1_bounds(ensemble[i], sigma, inner);
        TcRecord r;
        r.w1_lower = b.lower;
        r.w1_upper = b.upper;
        r.divergence = relative_entropy(ensemble[i], sigma);
        r.tc_rhs = rhs_factor * std::sqrt(r.divergence);
        r.violated = r.w1_lower > r.tc_rhs + 1e-10;
        report.records[i] = r;
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
  for (const auto& r : report.records) report.violations += r.violated ? 1 : 0;
  return report;
}

double lr_growth_1d(int k, double v, double mu_decay, double t, int n) {
  if (!(mu_decay > 0.0) || !(t >= 0.0) || k < 1 || k >= n || !(v >= 0.0)) {
    throw std::invalid_argument("Lieb-Robinson growth needs mu > 0, t >= 0, v >= 0 and 1 <= k < n");
  }
  const double q = std::exp(-mu_decay);
  return std::sqrt(static_cast<double>(n - k)) * (k + std::expm1(v * t) * q / (1.0 - q));
}

ShallowSurrogate shallow_surrogate(double eps, int n) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("eps must be in (0, 1]");
  if (n < 1) throw std::invalid_argument("qubit count must be >= 1");
  ShallowSurrogate out;
  out.beta_eps = std::log(1.0 / eps);
  const SiteSystem one(1);
  Matrix zero = Matrix::Zero(2, 2);
  zero(0, 0) = 1.0;
  Matrix reference;
  if (out.beta_eps > 0.0) {
    // exp(-beta * (-1) Z) = exp(beta Z)
    const GibbsModel model(one, {LocalOperator::from_pauli(PauliString::parse("Z1"))}, out.beta_eps);
    reference = gibbs_state(model, Vector::Constant(1, -1.0)).matrix();
  } else {
    reference = DensityOperator::maximally_mixed(one).matrix();
  }
  out.d_exact_per_qubit = relative_entropy(zero, reference);
  out.d_total = n * out.d_exact_per_qubit;
  out.stated_bound = n * eps;
  return out;
}

}  // namespace qmaxent
