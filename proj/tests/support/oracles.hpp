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

// Reference implementations used as independent oracles. They avoid the
// library's eigendecomposition and embedding code paths on purpose.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmaxent/operator_core.hpp"
#include "qmaxent/random.hpp"

namespace qmaxent::oracle {

/// exp(A) by scaling and squaring with a 30-term Taylor series.
inline Matrix expm_taylor(const Matrix& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  double scaled = norm;
  while (scaled > 0.25) {
    scaled /= 2.0;
    ++squarings;
  }
  const Matrix x = a / std::pow(2.0, squarings);
  const auto n = a.rows();
  Matrix term = Matrix::Identity(n, n);
  Matrix sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * x / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

/// Kronecker product of per-site 2x2 matrices written out with explicit index
/// arithmetic, site 0 most significant.
inline Matrix kron_sites(const std::vector<Matrix>& factors) {
  const auto n = factors.size();
  const Eigen::Index dim = Eigen::Index{1} << n;
  Matrix out(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      Complex v = 1.0;
      for (std::size_t s = 0; s < n; ++s) {
        const auto shift = static_cast<int>(n - 1 - s);
        v *= factors[s]((r >> shift) & 1, (c >> shift) & 1);
      }
      out(r, c) = v;
    }
  }
  return out;
}

inline Matrix pauli2(char c) {
  Matrix m(2, 2);
  switch (c) {
    case 'X':
      m << 0, 1, 1, 0;
      break;
    case 'Y':
      m << 0, Complex(0, -1), Complex(0, 1), 0;
      break;
    case 'Z':
      m << 1, 0, 0, -1;
      break;
    default:
      m << 1, 0, 0, 1;
  }
  return m;
}

/// Dense Pauli string from a letter per site ("XIZ").
inline Matrix pauli_dense(const std::string& letters) {
  std::vector<Matrix> f;
  for (char c : letters) f.push_back(pauli2(c));
  return kron_sites(f);
}

/// log Z = log tr exp(-beta H) via the Taylor exponential.
inline double log_partition(const Matrix& h, double beta) {
  return std::log(expm_taylor(-beta * h).trace().real());
}

inline Matrix gibbs(const Matrix& h, double beta) {
  Matrix e = expm_taylor(-beta * h);
  return e / e.trace().real();
}

/// D(sigma(a) || sigma(b)) for Gibbs states of Hamiltonians a, b at the same
/// beta: beta tr[sigma(a)(H_b - H_a)] + log Z_b - log Z_a.
inline double gibbs_relative_entropy(const Matrix& ha, const Matrix& hb, double beta) {
  const Matrix sa = gibbs(ha, beta);
  return beta * (sa * (hb - ha)).trace().real() + log_partition(hb, beta) - log_partition(ha, beta);
}

/// Central differences of a scalar function.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd p = x, m = x;
    p(i) += h;
    m(i) -= h;
    g(i) = (f(p) - f(m)) / (2 * h);
  }
  return g;
}

/// Hessian by second-order central differences of a scalar function.
inline Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                  double h = 1e-3) {
  const auto n = x.size();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      auto at = [&](double di, double dj) {
        Eigen::VectorXd y = x;
        y(i) += di;
        y(j) += dj;
        return f(y);
      };
      out(i, j) = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h);
    }
  }
  return 0.5 * (out + out.transpose());
}

/// Classical chain by exhaustive enumeration. Spin +1 is bit 0.
struct ChainBrute {
  double log_z;
  std::vector<double> z;
  std::vector<double> zz;
  std::vector<double> probs;  // site 0 most significant
};

inline ChainBrute chain_brute(int n, const std::vector<double>& J, const std::vector<double>& h, double beta,
                              bool periodic) {
  const std::size_t count = std::size_t{1} << n;
  const int bonds = periodic ? n : n - 1;
  std::vector<double> energy(count);
  double emin = 1e300;
  for (std::size_t x = 0; x < count; ++x) {
    auto s = [&](int i) { return ((x >> (n - 1 - i)) & 1U) ? -1.0 : 1.0; };
    double e = 0;
    for (int i = 0; i < bonds; ++i) e += J[i] * s(i) * s((i + 1) % n);
    for (int i = 0; i < n; ++i) e += h[i] * s(i);
    energy[x] = e;
    emin = std::min(emin, e);
  }
  ChainBrute out;
  out.z.assign(n, 0.0);
  out.zz.assign(bonds, 0.0);
  out.probs.resize(count);
  double total = 0;
  for (std::size_t x = 0; x < count; ++x) {
    out.probs[x] = std::exp(-beta * (energy[x] - emin));
    total += out.probs[x];
  }
  out.log_z = std::log(total) - beta * emin;
  for (std::size_t x = 0; x < count; ++x) {
    out.probs[x] /= total;
    auto s = [&](int i) { return ((x >> (n - 1 - i)) & 1U) ? -1.0 : 1.0; };
    for (int i = 0; i < n; ++i) out.z[i] += out.probs[x] * s(i);
    for (int i = 0; i < bonds; ++i) out.zz[i] += out.probs[x] * s(i) * s((i + 1) % n);
  }
  return out;
}

/// Random Hermitian matrix with entries of unit scale.
inline Matrix random_hermitian(int dim, Rng& rng) {
  Matrix a(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) a(i, j) = Complex(rng.normal(), rng.normal());
  }
  return (a + a.adjoint()) * 0.5;
}

/// Random full-rank density matrix (Wishart with a maximally mixed admixture).
inline Matrix random_density(int dim, Rng& rng, double mix = 0.05) {
  Matrix g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = Complex(rng.normal(), rng.normal());
  }
  Matrix r = g * g.adjoint();
  r /= r.trace().real();
  return (1 - mix) * r + mix * Matrix::Identity(dim, dim) / static_cast<double>(dim);
}

}  // namespace qmaxent::oracle
