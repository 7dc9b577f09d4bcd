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

#include "qmaxent/classical_chain.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>

#include "json.hpp"
#include "qmaxent/random.hpp"

namespace qmaxent {

namespace {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

constexpr double kSpin[2] = {1.0, -1.0};
constexpr std::size_t kSampleChunk = 256;

Vec2 site_factor(const ChainSpec& s, int i) {
  return {std::exp(-s.beta * s.h[static_cast<std::size_t>(i)]), std::exp(s.beta * s.h[static_cast<std::size_t>(i)])};
}

// psi(a, b) = exp(-beta J s_a s_b)
Mat2 bond_factor(const ChainSpec& s, int i) {
  const double j = s.J[static_cast<std::size_t>(i)];
  Mat2 m;
  m << std::exp(-s.beta * j), std::exp(s.beta * j), std::exp(s.beta * j), std::exp(-s.beta * j);
  return m;
}

// M_i(a, b) = phi_i(a) psi_i(a, b)
Mat2 transfer(const ChainSpec& s, int i) { return site_factor(s, i).asDiagonal() * bond_factor(s, i); }

struct OpenMessages {
  std::vector<Vec2> fwd;  // alpha_i, normalized
  std::vector<Vec2> bwd;  // beta_i, normalized
  double log_partition = 0.0;
};

OpenMessages open_messages(const ChainSpec& s) {
  const auto n = static_cast<std::size_t>(s.n);
  OpenMessages m;
  m.fwd.assign(n, Vec2(0.5, 0.5));
  m.bwd.assign(n, Vec2(0.5, 0.5));
  double log_z = 0.0;
  for (int i = 0; i + 1 < s.n; ++i) {
    Vec2 next = transfer(s, i).transpose() * m.fwd[static_cast<std::size_t>(i)];
    const double c = next.sum();
    log_z += std::log(c);
    m.fwd[static_cast<std::size_t>(i) + 1] = next / c;
  }
  // alpha_0 = (1, 1) is stored normalized; account for the factor 2.
  log_z += std::log(2.0);
  log_z += std::log(m.fwd[n - 1].dot(site_factor(s, s.n - 1)));
  m.log_partition = log_z;
  for (int i = s.n - 2; i >= 0; --i) {
    Vec2 prev = bond_factor(s, i) * site_factor(s, i + 1).cwiseProduct(m.bwd[static_cast<std::size_t>(i) + 1]);
    m.bwd[static_cast<std::size_t>(i)] = prev / prev.sum();
  }
  return m;
}

// Normalized product of the given matrices with the log of the dropped scale.
Mat2 scaled_product(const std::vector<Mat2>& factors, double* log_scale) {
  Mat2 p = Mat2::Identity();
  double ls = 0.0;
  for (const auto& f : factors) {
    p = p * f;
    const double c = p.cwiseAbs().maxCoeff();
    p /= c;
    ls += std::log(c);
  }
  if (log_scale) *log_scale = ls;
  return p;
}

// Unnormalized window weights w(s_i..s_k), site i most significant, for a
// window without wrap-around.
std::vector<double> window_weights(const ChainSpec& s, int start, int width) {
  const int end = start + width - 1;
  const std::size_t count = std::size_t{1} << width;
  Vec2 left(1.0, 1.0);
  Vec2 right(1.0, 1.0);
  Mat2 closing = Mat2::Ones();
  bool ring = false;
  if (s.boundary == Boundary::open) {
    const OpenMessages m = open_messages(s);
    left = m.fwd[static_cast<std::size_t>(start)];
    right = m.bwd[static_cast<std::size_t>(end)];
  } else if (width < s.n) {
    ring = true;
    std::vector<Mat2> rest{bond_factor(s, end)};
    for (int j = end + 1; j < s.n; ++j) rest.push_back(transfer(s, j));
    for (int j = 0; j < start; ++j) rest.push_back(transfer(s, j));
    closing = scaled_product(rest, nullptr);
  } else {
    ring = true;
    closing = bond_factor(s, s.n - 1);
  }
  std::vector<double> w(count);
  for (std::size_t x = 0; x < count; ++x) {
    auto spin = [&](int site) { return static_cast<int>((x >> (end - site)) & 1U); };
    double v = ring ? closing(spin(end), spin(start)) : left(spin(start)) * right(spin(end));
    for (int j = start; j <= end; ++j) {
      v *= site_factor(s, j)(spin(j));
      if (j < end) v *= bond_factor(s, j)(spin(j), spin(j + 1));
    }
    w[x] = v;
  }
  return w;
}

void apply_gate(Matrix& a, int width, int q, const Eigen::Matrix4cd& g) {
  const std::size_t s0 = std::size_t{1} << (width - 1 - q);
  const std::size_t s1 = s0 >> 1;
  const std::size_t dim = std::size_t{1} << width;
  const std::array<std::size_t, 4> off{0, s1, s0, s0 + s1};
  for (std::size_t base = 0; base < dim; ++base) {
    if ((base & s0) || (base & s1)) continue;
    Eigen::Matrix<Complex, 4, Eigen::Dynamic> rows(4, a.cols());
    for (int k = 0; k < 4; ++k) rows.row(k) = a.row(static_cast<Eigen::Index>(base + off[static_cast<std::size_t>(k)]));
    rows = g * rows;
    for (int k = 0; k < 4; ++k) a.row(static_cast<Eigen::Index>(base + off[static_cast<std::size_t>(k)])) = rows.row(k);
  }
  const Eigen::Matrix4cd gd = g.adjoint();
  for (std::size_t base = 0; base < dim; ++base) {
    if ((base & s0) || (base & s1)) continue;
    Eigen::Matrix<Complex, Eigen::Dynamic, 4> cols(a.rows(), 4);
    for (int k = 0; k < 4; ++k) cols.col(k) = a.col(static_cast<Eigen::Index>(base + off[static_cast<std::size_t>(k)]));
    cols = cols * gd;
    for (int k = 0; k < 4; ++k) a.col(static_cast<Eigen::Index>(base + off[static_cast<std::size_t>(k)])) = cols.col(k);
  }
}

struct EvolvedTerm {
  int start;
  int width;
  Vector diagonal;  // diagonal of U Z_t U^dagger on the window
};

EvolvedTerm evolve_term(const BrickworkCircuit& c, const std::vector<int>& sites) {
  std::vector<char> in(static_cast<std::size_t>(c.n), 0);
  for (int s : sites) {
    if (s < 0 || s >= c.n) throw std::out_of_range("observable site outside the chain");
    in[static_cast<std::size_t>(s)] = 1;
  }
  std::vector<std::vector<int>> active(c.layers.size());
  for (std::size_t l = 0; l < c.layers.size(); ++l) {
    std::vector<char> next = in;
    for (int q = BrickworkCircuit::offset(static_cast<int>(l)), g = 0; q + 1 < c.n; q += 2, ++g) {
      if (in[static_cast<std::size_t>(q)] || in[static_cast<std::size_t>(q) + 1]) {
        active[l].push_back(g);
        next[static_cast<std::size_t>(q)] = next[static_cast<std::size_t>(q) + 1] = 1;
      }
    }
    in = std::move(next);
  }
  const int lo = static_cast<int>(std::find(in.begin(), in.end(), 1) - in.begin());
  const int hi = c.n - 1 - static_cast<int>(std::find(in.rbegin(), in.rend(), 1) - in.rbegin());
  const int width = hi - lo + 1;
  if (width > 12) throw std::invalid_argument("observable lightcone exceeds 12 sites");
  const auto dim = static_cast<Eigen::Index>(1) << width;
  Matrix a = Matrix::Zero(dim, dim);
  for (Eigen::Index x = 0; x < dim; ++x) {
    double v = 1.0;
    for (int s : sites) v *= ((x >> (hi - s)) & 1) ? -1.0 : 1.0;
    a(x, x) = v;
  }
  for (std::size_t l = 0; l < c.layers.size(); ++l) {
    for (int g : active[l]) {
      const int q = BrickworkCircuit::offset(static_cast<int>(l)) + 2 * g;
      apply_gate(a, width, q - lo, c.layers[l][static_cast<std::size_t>(g)]);
    }
  }
  return {lo, width, a.diagonal().real()};
}

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&]() {
    try {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!failure) failure = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::size_t>(count, 1))));
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

void ChainSpec::validate() const {
  if (n < 2) throw std::invalid_argument("chain needs at least 2 sites");
  if (boundary == Boundary::periodic && n < 3) throw std::invalid_argument("periodic chain needs at least 3 sites");
  if (static_cast<int>(J.size()) != bonds()) throw std::invalid_argument("coupling count does not match the boundary");
  if (static_cast<int>(h.size()) != n) throw std::invalid_argument("field count must equal the site count");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("inverse temperature must be >= 0");
  auto bad = [](double v) { return !std::isfinite(v) || std::abs(v) > 1.0 + 1e-12; };
  if (std::any_of(J.begin(), J.end(), bad) || std::any_of(h.begin(), h.end(), bad)) {
    throw std::invalid_argument("couplings and fields must lie in [-1, 1]");
  }
}

double chain_log_partition(const ChainSpec& spec) {
  spec.validate();
  if (spec.boundary == Boundary::open) return open_messages(spec).log_partition;
  std::vector<Mat2> factors;
  for (int i = 0; i < spec.n; ++i) factors.push_back(transfer(spec, i));
  double ls = 0.0;
  const Mat2 p = scaled_product(factors, &ls);
  return ls + std::log(p.trace());
}

ChainExpectations chain_expectations(const ChainSpec& spec) {
  spec.validate();
  ChainExpectations e;
  e.zz.resize(spec.bonds());
  e.z.resize(spec.n);
  if (spec.boundary == Boundary::open) {
    const OpenMessages m = open_messages(spec);
    for (int i = 0; i < spec.n; ++i) {
      const Vec2 w = m.fwd[static_cast<std::size_t>(i)].cwiseProduct(site_factor(spec, i))
                         .cwiseProduct(m.bwd[static_cast<std::size_t>(i)]);
      e.z(i) = (w(0) - w(1)) / w.sum();
    }
    for (int i = 0; i + 1 < spec.n; ++i) {
      double num = 0.0;
      double den = 0.0;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          const double w = m.fwd[static_cast<std::size_t>(i)](a) * site_factor(spec, i)(a) * bond_factor(spec, i)(a, b) *
                           site_factor(spec, i + 1)(b) * m.bwd[static_cast<std::size_t>(i) + 1](b);
          num += kSpin[a] * kSpin[b] * w;
          den += w;
        }
      }
      e.zz(i) = num / den;
    }
    return e;
  }
  for (int i = 0; i < spec.n; ++i) {
    const auto w = window_weights(spec, i, 1);
    e.z(i) = (w[0] - w[1]) / (w[0] + w[1]);
  }
  for (int i = 0; i < spec.n; ++i) {
    if (i + 1 < spec.n) {
      const auto w = window_weights(spec, i, 2);
      e.zz(i) = (w[0] - w[1] - w[2] + w[3]) / (w[0] + w[1] + w[2] + w[3]);
    } else {
      // bond (n-1, 0): correlation from the ring product with one insertion
      std::vector<Mat2> factors;
      for (int j = 0; j < spec.n; ++j) factors.push_back(transfer(spec, j));
      Mat2 flip = Mat2::Zero();
      flip(0, 0) = 1.0;
      flip(1, 1) = -1.0;
      std::vector<Mat2> with(factors.begin(), factors.end() - 1);
      with.push_back(flip);
      with.push_back(factors.back());
      with.push_back(flip);
      double ls_a = 0.0;
      double ls_b = 0.0;
      const Mat2 a = scaled_product(with, &ls_a);
      const Mat2 b = scaled_product(factors, &ls_b);
      e.zz(i) = a.trace() / b.trace() * std::exp(ls_a - ls_b);
    }
  }
  return e;
}

std::vector<double> chain_window_distribution(const ChainSpec& spec, int start, int width) {
  spec.validate();
  if (width < 1 || width > 16) throw std::invalid_argument("window width must be in [1, 16]");
  if (start < 0 || start + width > spec.n) throw std::out_of_range("window outside the chain");
  auto w = window_weights(spec, start, width);
  double total = 0.0;
  for (double v : w) total += v;
  for (auto& v : w) v /= total;
  return w;
}

std::vector<SpinConfig> chain_sample(const ChainSpec& spec, std::size_t count, std::uint64_t seed, int threads) {
  spec.validate();
  if (count == 0) throw std::invalid_argument("sample count must be >= 1");
  const auto n = static_cast<std::size_t>(spec.n);
  std::vector<Vec2> bwd;
  std::vector<Mat2> ring;
  if (spec.boundary == Boundary::open) {
    bwd = open_messages(spec).bwd;
  } else {
    ring.assign(n, Mat2::Identity());
    ring[n - 1] = bond_factor(spec, spec.n - 1);
    ring[n - 1] /= ring[n - 1].maxCoeff();
    for (int j = spec.n - 2; j >= 0; --j) {
      Mat2 q = bond_factor(spec, j) * site_factor(spec, j + 1).asDiagonal() * ring[static_cast<std::size_t>(j) + 1];
      ring[static_cast<std::size_t>(j)] = q / q.maxCoeff();
    }
  }

  std::vector<SpinConfig> out(count, SpinConfig(n));
  const std::size_t chunks = (count + kSampleChunk - 1) / kSampleChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    Rng rng(derive_seed(seed, "chain-sample-chunk", c));
    const std::size_t end = std::min(count, (c + 1) * kSampleChunk);
    for (std::size_t t = c * kSampleChunk; t < end; ++t) {
      auto& cfg = out[t];
      Vec2 p0 = site_factor(spec, 0);
      if (spec.boundary == Boundary::open) {
        p0 = p0.cwiseProduct(bwd[0]);
      } else {
        p0 = Vec2(p0(0) * ring[0](0, 0), p0(1) * ring[0](1, 1));
      }
      int prev = rng.uniform() * p0.sum() < p0(0) ? 0 : 1;
      const int first = prev;
      cfg[0] = static_cast<std::int8_t>(kSpin[prev]);
      for (int j = 0; j + 1 < spec.n; ++j) {
        Vec2 w = bond_factor(spec, j).row(prev).transpose().cwiseProduct(site_factor(spec, j + 1));
        if (spec.boundary == Boundary::open) {
          w = w.cwiseProduct(bwd[static_cast<std::size_t>(j) + 1]);
        } else {
          w = w.cwiseProduct(ring[static_cast<std::size_t>(j) + 1].col(first));
        }
        prev = rng.uniform() * w.sum() < w(0) ? 0 : 1;
        cfg[static_cast<std::size_t>(j) + 1] = static_cast<std::int8_t>(kSpin[prev]);
      }
    }
  });
  return out;
}

void write_samples(std::ostream& out, const std::vector<SpinConfig>& samples, std::uint64_t seed) {
  const std::size_t n = samples.empty() ? 0 : samples.front().size();
  nlohmann::json header = {{"format", "qmaxent-spin-samples"}, {"version", 1}, {"sites", n},
                           {"count", samples.size()},          {"seed", seed}};
  out << header.dump() << '\n';
  const std::size_t bytes = (n + 7) / 8;
  std::string row(bytes, '\0');
  for (const auto& s : samples) {
    if (s.size() != n) throw std::invalid_argument("spin configurations differ in length");
    std::fill(row.begin(), row.end(), '\0');
    for (std::size_t i = 0; i < n; ++i) {
      if (s[i] == -1) row[i / 8] = static_cast<char>(row[i / 8] | (0x80 >> (i % 8)));
    }
    out.write(row.data(), static_cast<std::streamsize>(bytes));
  }
}

std::vector<SpinConfig> read_samples(std::istream& in, std::uint64_t* seed) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty sample file");
  std::size_t n = 0;
  std::size_t count = 0;
  try {
    const auto header = nlohmann::json::parse(line);
    n = header.at("sites").get<std::size_t>();
    count = header.at("count").get<std::size_t>();
    if (seed) *seed = header.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad sample header: ") + e.what());
  }
  const std::size_t bytes = (n + 7) / 8;
  std::vector<SpinConfig> out(count, SpinConfig(n));
  std::string row(bytes, '\0');
  for (std::size_t t = 0; t < count; ++t) {
    if (!in.read(row.data(), static_cast<std::streamsize>(bytes))) throw std::invalid_argument("truncated sample file");
    for (std::size_t i = 0; i < n; ++i) {
      out[t][i] = (static_cast<unsigned char>(row[i / 8]) & (0x80 >> (i % 8))) ? -1 : 1;
    }
  }
  return out;
}

ChainFamily::ChainFamily(int n, double beta, Boundary boundary, bool fields)
    : n_(n), beta_(beta), boundary_(boundary), fields_(fields) {
  ChainSpec probe{n, std::vector<double>(static_cast<std::size_t>(boundary == Boundary::open ? n - 1 : n), 0.0),
                  std::vector<double>(static_cast<std::size_t>(std::max(n, 0)), 0.0), beta, boundary};
  probe.validate();
  if (!(beta > 0.0)) throw std::invalid_argument("inverse temperature must be > 0");
}

int ChainFamily::num_params() const { return (boundary_ == Boundary::open ? n_ - 1 : n_) + (fields_ ? n_ : 0); }

ChainSpec ChainFamily::spec(const Vector& mu) const {
  if (mu.size() != num_params()) throw std::invalid_argument("parameter length mismatch");
  ChainSpec s;
  s.n = n_;
  s.beta = beta_;
  s.boundary = boundary_;
  const int b = s.bonds();
  s.J.assign(mu.data(), mu.data() + b);
  s.h.assign(static_cast<std::size_t>(n_), 0.0);
  if (fields_) s.h.assign(mu.data() + b, mu.data() + b + n_);
  return s;
}

Vector ChainFamily::params(const ChainSpec& spec) const {
  if (spec.n != n_ || spec.boundary != boundary_) throw std::invalid_argument("chain spec does not fit the family");
  Vector mu(num_params());
  const int b = spec.bonds();
  for (int i = 0; i < b; ++i) mu(i) = spec.J[static_cast<std::size_t>(i)];
  if (fields_) {
    for (int i = 0; i < n_; ++i) mu(b + i) = spec.h[static_cast<std::size_t>(i)];
  }
  return mu;
}

Vector ChainFamily::pack(const ChainExpectations& e) const {
  Vector out(num_params());
  const auto b = e.zz.size();
  out.head(b) = e.zz;
  if (fields_) out.tail(n_) = e.z;
  return out;
}

double ChainFamily::log_partition(const Vector& mu) const { return chain_log_partition(spec(mu)); }

Vector ChainFamily::expectations(const Vector& mu) const { return pack(chain_expectations(spec(mu))); }

std::vector<PauliString> ChainFamily::observables() const {
  std::vector<PauliString> out;
  const int b = boundary_ == Boundary::open ? n_ - 1 : n_;
  for (int i = 0; i < b; ++i) {
    const int j = (i + 1) % n_;
    out.push_back(PauliString({{std::min(i, j), 'Z'}, {std::max(i, j), 'Z'}}));
  }
  if (fields_) {
    for (int i = 0; i < n_; ++i) out.push_back(PauliString({{i, 'Z'}}));
  }
  return out;
}

ChainReconstruction chain_maxent_reconstruct(const Vector& e_hat, const ChainFamily& family, SolverOptions opts,
                                             const Vector* lambda_true) {
  if (!opts.U) {
    const double b2 = family.beta() * family.beta();
    opts.U = (family.boundary() == Boundary::open && !family.fields()) ? b2 : 2.0 * b2 * family.num_params();
  }
  ExactOracle oracle(family);
  ChainReconstruction out{ChainSpec{}, solve(family, e_hat, oracle, opts, lambda_true)};
  out.spec = family.spec(out.result.mu_star);
  return out;
}

Matrix haar_unitary(int dim, Rng& rng) {
  Matrix g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = Complex(rng.normal(), rng.normal()) / std::sqrt(2.0);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (int j = 0; j < dim; ++j) {
    const Complex d = r(j, j);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(j) *= d / mag;
  }
  return q;
}

BrickworkCircuit BrickworkCircuit::haar_random(int n, int depth, std::uint64_t seed) {
  if (n < 2 || depth < 0) throw std::invalid_argument("brickwork circuit needs n >= 2 and depth >= 0");
  BrickworkCircuit c;
  c.n = n;
  Rng rng(derive_seed(seed, "brickwork"));
  for (int l = 0; l < depth; ++l) {
    std::vector<Eigen::Matrix4cd> layer;
    for (int q = offset(l); q + 1 < n; q += 2) layer.push_back(haar_unitary(4, rng));
    c.layers.push_back(std::move(layer));
  }
  return c;
}

BrickworkCircuit BrickworkCircuit::identity(int n, int depth) {
  if (n < 2 || depth < 0) throw std::invalid_argument("brickwork circuit needs n >= 2 and depth >= 0");
  BrickworkCircuit c;
  c.n = n;
  for (int l = 0; l < depth; ++l) {
    std::vector<Eigen::Matrix4cd> layer;
    for (int q = offset(l); q + 1 < n; q += 2) layer.push_back(Eigen::Matrix4cd::Identity());
    c.layers.push_back(std::move(layer));
  }
  return c;
}

WindowedObservable WindowedObservable::zz_average(int n, int offset) {
  if (n < 2 || offset < 1 || offset >= n) throw std::invalid_argument("need 1 <= offset < n");
  WindowedObservable o;
  o.weight = 1.0 / n;
  for (int i = 0; i + offset < n; ++i) o.terms.push_back({i, i + offset});
  return o;
}

namespace {

std::vector<double> term_values(const std::vector<const ChainSpec*>& specs, const BrickworkCircuit& circuit,
                                const WindowedObservable& obs, int threads) {
  for (const auto* s : specs) {
    s->validate();
    if (s->n != circuit.n) throw std::invalid_argument("circuit and chain sizes differ");
  }
  const std::size_t k = specs.size();
  std::vector<double> vals(obs.terms.size() * k);
  parallel_for(obs.terms.size(), threads, [&](std::size_t t) {
    const EvolvedTerm term = evolve_term(circuit, obs.terms[t]);
    for (std::size_t j = 0; j < k; ++j) {
      const auto p = chain_window_distribution(*specs[j], term.start, term.width);
      double v = 0.0;
      for (std::size_t x = 0; x < p.size(); ++x) v += p[x] * term.diagonal(static_cast<Eigen::Index>(x));
      vals[t * k + j] = v;
    }
  });
  return vals;
}

}  // namespace

double windowed_expectation(const ChainSpec& spec, const BrickworkCircuit& circuit, const WindowedObservable& obs,
                            int threads) {
  const auto vals = term_values({&spec}, circuit, obs, threads);
  double total = 0.0;
  for (double v : vals) total += v;
  return obs.weight * total;
}

double windowed_observable_error(const ChainSpec& truth, const ChainSpec& reconstructed,
                                 const BrickworkCircuit& circuit, const WindowedObservable& obs, int threads) {
  const auto vals = term_values({&truth, &reconstructed}, circuit, obs, threads);
  double diff = 0.0;
  for (std::size_t t = 0; t < obs.terms.size(); ++t) diff += vals[2 * t] - vals[2 * t + 1];
  return std::abs(obs.weight * diff);
}

double windowed_norm_bound(const WindowedObservable& obs) {
  return std::abs(obs.weight) * static_cast<double>(obs.terms.size());
}

}  // namespace qmaxent
