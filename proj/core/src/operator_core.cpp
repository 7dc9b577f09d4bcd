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

#include "qmaxent/operator_core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

namespace qmaxent {

namespace {

// Full-space offsets of every local index over `sites`; sites[0] is the most
// significant digit of the local index.
std::vector<std::size_t> site_offsets(const SiteSystem& system, std::span<const int> sites) {
  std::size_t count = 1;
  for (std::size_t k = 0; k < sites.size(); ++k) count *= static_cast<std::size_t>(system.local_dim());
  std::vector<std::size_t> offsets(count, 0);
  const auto d = static_cast<std::size_t>(system.local_dim());
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::size_t rem = idx;
    std::size_t off = 0;
    for (std::size_t k = sites.size(); k-- > 0;) {
      off += (rem % d) * system.stride(sites[k]);
      rem /= d;
    }
    offsets[idx] = off;
  }
  return offsets;
}

void check_sites(const SiteSystem& system, std::span<const int> sites) {
  std::vector<int> seen(static_cast<std::size_t>(system.sites()), 0);
  for (int s : sites) {
    if (s < 0 || s >= system.sites()) {
      throw std::out_of_range("site " + std::to_string(s + 1) + " outside [1, " +
                              std::to_string(system.sites()) + "]");
    }
    if (seen[static_cast<std::size_t>(s)]++) {
      throw std::invalid_argument("duplicate site " + std::to_string(s + 1));
    }
  }
}

}  // namespace

SiteSystem::SiteSystem(int n, int d, std::size_t dimension_cap) : n_(n), d_(d), dim_(1) {
  if (n < 1) throw std::invalid_argument("site count must be >= 1");
  if (d < 2) throw std::invalid_argument("local dimension must be >= 2");
  strides_.assign(static_cast<std::size_t>(n), 1);
  for (int s = n - 1; s >= 0; --s) {
    strides_[static_cast<std::size_t>(s)] = dim_;
    if (dim_ > dimension_cap / static_cast<std::size_t>(d)) {
      throw std::invalid_argument("total dimension " + std::to_string(d) + "^" + std::to_string(n) +
                                  " exceeds cap " + std::to_string(dimension_cap));
    }
    dim_ *= static_cast<std::size_t>(d);
  }
}

int SiteSystem::digit(std::size_t index, int site) const {
  return static_cast<int>((index / strides_[static_cast<std::size_t>(site)]) %
                          static_cast<std::size_t>(d_));
}

// ---------------------------------------------------------------------------
// Pauli strings

PauliString::PauliString(std::vector<PauliFactor> factors) : factors_(std::move(factors)) {
  std::sort(factors_.begin(), factors_.end(),
            [](const PauliFactor& a, const PauliFactor& b) { return a.site < b.site; });
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    const char c = factors_[k].letter;
    if (c != 'X' && c != 'Y' && c != 'Z') {
      throw std::invalid_argument(std::string("invalid Pauli letter '") + c + "'");
    }
    if (factors_[k].site < 0) throw std::invalid_argument("negative Pauli site");
    if (k > 0 && factors_[k].site == factors_[k - 1].site) {
      throw std::invalid_argument("duplicate site " + std::to_string(factors_[k].site + 1) +
                                  " in Pauli string");
    }
  }
}

PauliString PauliString::parse(std::string_view text) {
  std::vector<PauliFactor> factors;
  std::vector<int> identity_sites;
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  skip_ws();
  if (pos == text.size()) return PauliString{};
  while (true) {
    skip_ws();
    if (pos >= text.size()) throw std::invalid_argument("dangling '*' in Pauli string");
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(text[pos++])));
    if (letter != 'I' && letter != 'X' && letter != 'Y' && letter != 'Z') {
      throw std::invalid_argument("invalid Pauli letter in '" + std::string(text) + "'");
    }
    std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (start == pos) {
      if (letter == 'I') {
        // Bare "I" is the identity string.
        skip_ws();
        if (pos != text.size() || !factors.empty()) {
          throw std::invalid_argument("bare 'I' must be the whole Pauli string");
        }
        return PauliString{};
      }
      throw std::invalid_argument("missing site index in '" + std::string(text) + "'");
    }
    const int site = std::stoi(std::string(text.substr(start, pos - start)));
    if (site < 1) throw std::invalid_argument("Pauli sites are 1-indexed");
    for (const auto& f : factors) {
      if (f.site == site - 1) throw std::invalid_argument("duplicate site in '" + std::string(text) + "'");
    }
    if (std::find(identity_sites.begin(), identity_sites.end(), site - 1) != identity_sites.end()) {
      throw std::invalid_argument("duplicate site in '" + std::string(text) + "'");
    }
    if (letter == 'I') {
      identity_sites.push_back(site - 1);
    } else {
      factors.push_back({site - 1, letter});
    }
    skip_ws();
    if (pos == text.size()) break;
    if (text[pos] != '*') throw std::invalid_argument("expected '*' in '" + std::string(text) + "'");
    ++pos;
  }
  return PauliString(std::move(factors));
}

std::vector<int> PauliString::support() const {
  std::vector<int> s;
  s.reserve(factors_.size());
  for (const auto& f : factors_) s.push_back(f.site);
  return s;
}

bool PauliString::is_diagonal() const {
  return std::all_of(factors_.begin(), factors_.end(), [](const PauliFactor& f) { return f.letter == 'Z'; });
}

char PauliString::letter_at(int site) const {
  for (const auto& f : factors_) {
    if (f.site == site) return f.letter;
  }
  return 'I';
}

std::string PauliString::str() const {
  if (factors_.empty()) return "I";
  std::ostringstream os;
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    if (k) os << '*';
    os << factors_[k].letter << factors_[k].site + 1;
  }
  return os.str();
}

Matrix pauli_matrix(char letter) {
  Matrix m = Matrix::Zero(2, 2);
  switch (std::toupper(static_cast<unsigned char>(letter))) {
    case 'I':
      m(0, 0) = 1.0;
      m(1, 1) = 1.0;
      break;
    case 'X':
      m(0, 1) = 1.0;
      m(1, 0) = 1.0;
      break;
    case 'Y':
      m(0, 1) = Complex(0.0, -1.0);
      m(1, 0) = Complex(0.0, 1.0);
      break;
    case 'Z':
      m(0, 0) = 1.0;
      m(1, 1) = -1.0;
      break;
    default:
      throw std::invalid_argument(std::string("invalid Pauli letter '") + letter + "'");
  }
  return m;
}

LocalOperator LocalOperator::from_pauli(const PauliString& p) {
  LocalOperator op;
  op.support = p.support();
  op.matrix = Matrix::Identity(1, 1);
  for (const auto& f : p.factors()) op.matrix = kron(op.matrix, pauli_matrix(f.letter));
  op.pauli = p;
  return op;
}

bool LocalOperator::is_hermitian(double tol) const { return qmaxent::is_hermitian(matrix, tol); }

// ---------------------------------------------------------------------------
// Density operators

DensityOperator::DensityOperator(Matrix matrix, SiteSystem system) : system_(system) {
  if (static_cast<std::size_t>(matrix.rows()) != system.dim() || matrix.rows() != matrix.cols()) {
    throw std::invalid_argument("density operator dimension does not match the site system");
  }
  matrix_ = hermitian_part(matrix);
  const double tr = matrix_.trace().real();
  if (std::abs(tr - 1.0) > 1e-10) {
    throw std::invalid_argument("density operator trace " + std::to_string(tr) + " != 1");
  }
  if (min_eigenvalue(matrix_) < -1e-10) throw std::invalid_argument("density operator is not positive");
}

DensityOperator DensityOperator::maximally_mixed(const SiteSystem& system) {
  const auto dim = static_cast<Eigen::Index>(system.dim());
  return {Matrix::Identity(dim, dim) / static_cast<double>(dim), system};
}

DensityOperator DensityOperator::product(std::span<const Matrix> factors, const SiteSystem& system) {
  if (factors.size() != static_cast<std::size_t>(system.sites())) {
    throw std::invalid_argument("product state needs one factor per site");
  }
  Matrix m = Matrix::Identity(1, 1);
  for (const auto& f : factors) m = kron(m, f);
  return {m, system};
}

// ---------------------------------------------------------------------------
// Hermitian matrix functions

bool is_hermitian(const Matrix& x, double tol) {
  if (x.rows() != x.cols()) return false;
  const double scale = std::max(1.0, x.norm());
  return (x - x.adjoint()).norm() <= tol * scale;
}

Matrix hermitian_part(const Matrix& x, double tol) {
  if (!is_hermitian(x, tol)) throw std::invalid_argument("matrix is not Hermitian within tolerance");
  return (x + x.adjoint()) * 0.5;
}

HermitianEigen eigh(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(h));
  if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigendecomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Matrix herm_fn(const HermitianEigen& eig, const std::function<double(double)>& f) {
  Vector fv(eig.values.size());
  for (Eigen::Index k = 0; k < fv.size(); ++k) fv(k) = f(eig.values(k));
  Matrix out = eig.vectors * fv.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
  return (out + out.adjoint()) * 0.5;
}

Matrix herm_fn(const Matrix& h, const std::function<double(double)>& f) { return herm_fn(eigh(h), f); }

double min_eigenvalue(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

// ---------------------------------------------------------------------------
// Embedding and partial traces

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

std::vector<int> complement_sites(const SiteSystem& system, std::span<const int> sites) {
  std::vector<int> rest;
  for (int s = 0; s < system.sites(); ++s) {
    if (std::find(sites.begin(), sites.end(), s) == sites.end()) rest.push_back(s);
  }
  return rest;
}

Matrix embed_local(const LocalOperator& op, const SiteSystem& system) {
  check_sites(system, op.support);
  std::size_t local_dim = 1;
  for (std::size_t k = 0; k < op.support.size(); ++k) local_dim *= static_cast<std::size_t>(system.local_dim());
  if (static_cast<std::size_t>(op.matrix.rows()) != local_dim || op.matrix.rows() != op.matrix.cols()) {
    throw std::invalid_argument("local operator dimension does not match its support");
  }
  const auto rest = complement_sites(system, op.support);
  const auto off_s = site_offsets(system, op.support);
  const auto off_r = site_offsets(system, rest);
  const auto dim = static_cast<Eigen::Index>(system.dim());
  Matrix full = Matrix::Zero(dim, dim);
  for (std::size_t q = 0; q < off_r.size(); ++q) {
    for (std::size_t a = 0; a < local_dim; ++a) {
      for (std::size_t b = 0; b < local_dim; ++b) {
        const Complex v = op.matrix(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (v != Complex(0.0)) {
          full(static_cast<Eigen::Index>(off_s[a] + off_r[q]), static_cast<Eigen::Index>(off_s[b] + off_r[q])) = v;
        }
      }
    }
  }
  return full;
}

Matrix embed_pauli(const PauliString& p, const SiteSystem& system) {
  if (system.local_dim() != 2) throw std::invalid_argument("Pauli strings require qubits (d = 2)");
  return embed_local(LocalOperator::from_pauli(p), system);
}

Matrix partial_trace(const Matrix& x, const SiteSystem& system, std::span<const int> traced_sites) {
  check_sites(system, traced_sites);
  if (static_cast<std::size_t>(x.rows()) != system.dim() || x.rows() != x.cols()) {
    throw std::invalid_argument("operator dimension does not match the site system");
  }
  std::vector<int> traced(traced_sites.begin(), traced_sites.end());
  std::sort(traced.begin(), traced.end());
  const auto rest = complement_sites(system, traced);
  const auto off_r = site_offsets(system, rest);
  const auto off_t = site_offsets(system, traced);
  const auto out_dim = static_cast<Eigen::Index>(off_r.size());
  Matrix out = Matrix::Zero(out_dim, out_dim);
  for (std::size_t a = 0; a < off_r.size(); ++a) {
    for (std::size_t b = 0; b < off_r.size(); ++b) {
      Complex acc(0.0);
      for (std::size_t t : off_t) {
        acc += x(static_cast<Eigen::Index>(off_r[a] + t), static_cast<Eigen::Index>(off_r[b] + t));
      }
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Norms

double operator_norm(const Matrix& x) {
  if (is_hermitian(x, 1e-12)) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver((x + x.adjoint()) * 0.5, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Matrix> svd(x);
  return svd.singularValues()(0);
}

double trace_norm(const Matrix& x) {
  if (is_hermitian(x, 1e-12)) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver((x + x.adjoint()) * 0.5, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().cwiseAbs().sum();
  }
  Eigen::JacobiSVD<Matrix> svd(x);
  return svd.singularValues().sum();
}

double frobenius_norm(const Matrix& x) { return x.norm(); }

WeightedGeometry::WeightedGeometry(const Matrix& sigma) : sigma_(hermitian_part(sigma)) {
  const auto eig = eigh(sigma_);
  if (eig.values(0) <= 1e-12) throw NumericalError("weighted norm requires a full-rank reference state");
  quarter_ = herm_fn(eig, [](double v) { return std::pow(v, 0.25); });
  sqrt_sigma_ = herm_fn(eig, [](double v) { return std::sqrt(v); });
}

double WeightedGeometry::norm(const Matrix& y) const { return (quarter_ * y * quarter_).norm(); }

Complex WeightedGeometry::inner(const Matrix& x, const Matrix& y) const {
  return (sqrt_sigma_ * x.adjoint() * sqrt_sigma_ * y).trace();
}

double weighted_two_norm(const Matrix& y, const Matrix& sigma) { return WeightedGeometry(sigma).norm(y); }

Complex weighted_inner(const Matrix& x, const Matrix& y, const Matrix& sigma) {
  return WeightedGeometry(sigma).inner(x, y);
}

Norms norms(const Matrix& x, const Matrix* sigma) {
  Norms out{operator_norm(x), trace_norm(x), frobenius_norm(x), std::nullopt};
  if (sigma != nullptr) out.weighted_two_norm = weighted_two_norm(x, *sigma);
  return out;
}

}  // namespace qmaxent
