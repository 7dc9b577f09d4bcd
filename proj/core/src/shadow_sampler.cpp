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

#include "qmaxent/shadow_sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "qmaxent/random.hpp"

namespace qmaxent {

namespace {

constexpr std::size_t kChunk = 1024;
constexpr std::size_t kCacheDoubles = std::size_t{1} << 24;
constexpr char kLetters[3] = {'X', 'Y', 'Z'};

// Unitary mapping the +1/-1 eigenvectors of the Pauli letter to |0>, |1>.
Eigen::Matrix2cd basis_rotation(char letter) {
  const double s = 1.0 / std::sqrt(2.0);
  Eigen::Matrix2cd u;
  switch (letter) {
    case 'X':
      u << s, s, s, -s;
      break;
    case 'Y':
      u << s, Complex(0, -s), s, Complex(0, s);
      break;
    default:
      u = Eigen::Matrix2cd::Identity();
  }
  return u;
}

// rho <- (I (x) u (x) I) rho (I (x) u^dagger (x) I) on one site.
// Diagonal of U rho U^dagger for U a product of single-site rotations (site 0
// most significant). Sites are contracted in order; once a site is rotated
// only its diagonal block survives, because later rotations act elsewhere.
// Tensor layout T[p][r][c]: p = processed bits shared by row and column, r and
// c = the remaining row and column bits, `rest` = 2^(remaining sites).
std::vector<Complex> contract_site(const std::vector<Complex>& t, std::size_t rest, char letter) {
  const std::size_t half = rest / 2;
  const std::size_t prefixes = t.size() / (rest * rest);
  const Eigen::Matrix2cd u = basis_rotation(letter);
  std::vector<Complex> next(prefixes * 2 * half * half);
  for (std::size_t p = 0; p < prefixes; ++p) {
    const Complex* block = t.data() + p * rest * rest;
    for (std::size_t x = 0; x < 2; ++x) {
      Complex* out = next.data() + (p * 2 + x) * half * half;
      const auto xi = static_cast<Eigen::Index>(x);
      for (std::size_t r = 0; r < half; ++r) {
        for (std::size_t c = 0; c < half; ++c) {
          Complex v;
          if (letter == 'Z') {
            v = block[(x * half + r) * rest + x * half + c];
          } else {
            for (std::size_t a = 0; a < 2; ++a) {
              Complex row;
              for (std::size_t b = 0; b < 2; ++b) {
                row += block[(a * half + r) * rest + b * half + c] * std::conj(u(xi, static_cast<Eigen::Index>(b)));
              }
              v += u(xi, static_cast<Eigen::Index>(a)) * row;
            }
          }
          out[r * half + c] = v;
        }
      }
    }
  }
  return next;
}

std::vector<Complex> row_major(const Matrix& rho) {
  const auto dim = static_cast<std::size_t>(rho.rows());
  std::vector<Complex> t(dim * dim);
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < dim; ++c) t[r * dim + c] = rho(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  return t;
}

std::vector<double> cumulative(const std::vector<Complex>& diag) {
  std::vector<double> c(diag.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    acc += std::max(0.0, diag[i].real());
    c[i] = acc;
  }
  for (auto& v : c) v /= acc;
  return c;
}

class BornTable {
 public:
  explicit BornTable(const DensityOperator& state) : state_(state) {}

  /// True when every basis fits in the cache.
  bool fits_all() const {
    const auto n = static_cast<double>(state_.system().sites());
    return std::pow(3.0, n) * static_cast<double>(state_.system().dim()) <= static_cast<double>(kCacheDoubles);
  }

  /// Fills every basis by a depth-first walk that shares contracted prefixes.
  void fill_all() {
    const int n = state_.system().sites();
    walk(row_major(state_.matrix()), state_.system().dim(), 0, 0, n);
  }

  // Cumulative outcome distribution for a basis code (base 3, site 0 most significant).
  std::vector<double> cdf(std::uint64_t code, const std::vector<char>& letters) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(code);
      if (it != cache_.end()) return it->second;
    }
    const SiteSystem& sys = state_.system();
    std::vector<Complex> t = row_major(state_.matrix());
    std::size_t rest = sys.dim();
    for (int s = 0; s < sys.sites(); ++s, rest /= 2) t = contract_site(t, rest, letters[static_cast<std::size_t>(s)]);
    std::vector<double> c = cumulative(t);
    std::lock_guard<std::mutex> lock(mu_);
    if ((cache_.size() + 1) * sys.dim() <= kCacheDoubles) cache_.emplace(code, c);
    return c;
  }

 private:
  void walk(const std::vector<Complex>& t, std::size_t rest, int site, std::uint64_t code, int n) {
    if (site == n) {
      cache_.emplace(code, cumulative(t));
      return;
    }
    for (std::uint64_t b = 0; b < 3; ++b) walk(contract_site(t, rest, kLetters[b]), rest / 2, site + 1, code * 3 + b, n);
  }

  const DensityOperator& state_;
  std::mutex mu_;
  std::map<std::uint64_t, std::vector<double>> cache_;
};

struct CompiledPauli {
  std::vector<int> sites;
  std::vector<char> letters;
  double scale;
};

CompiledPauli compile(const PauliString& p, int sites) {
  CompiledPauli c;
  c.scale = 1.0;
  for (const auto& f : p.factors()) {
    if (f.site >= sites) throw std::invalid_argument("observable " + p.str() + " acts outside the measured sites");
    c.sites.push_back(f.site);
    c.letters.push_back(f.letter);
    c.scale *= 3.0;
  }
  return c;
}

double value(const ShadowBatch& batch, std::size_t t, const CompiledPauli& p) {
  double v = p.scale;
  for (std::size_t j = 0; j < p.sites.size(); ++j) {
    if (batch.basis(t, p.sites[j]) != p.letters[j]) return 0.0;
    v *= batch.outcome(t, p.sites[j]);
  }
  return v;
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

template <typename ValueFn>
EstimateReport median_of_means(std::size_t n, int batches, int m, ValueFn&& fn) {
  if (n == 0) throw std::invalid_argument("no snapshots to estimate from");
  const auto k = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(batches), n));
  EstimateReport r;
  r.estimates.resize(m);
  r.std_errors.resize(m);
  r.samples_used = n;
  std::vector<double> means(k);
  for (int i = 0; i < m; ++i) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t g = 0; g < k; ++g) {
      const std::size_t lo = g * n / k;
      const std::size_t hi = (g + 1) * n / k;
      double s = 0.0;
      for (std::size_t t = lo; t < hi; ++t) {
        const double v = fn(t, i);
        s += v;
        sum_sq += v * v;
      }
      sum += s;
      means[g] = s / static_cast<double>(hi - lo);
    }
    r.estimates(i) = k == 1 ? means[0] : median(means);
    const double mean = sum / static_cast<double>(n);
    const double var = n > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / static_cast<double>(n - 1)) : 0.0;
    r.std_errors(i) = std::sqrt(var / static_cast<double>(n));
  }
  return r;
}

}  // namespace

void ShadowScheme::validate() const {
  if (batches < 1 || batches % 2 == 0) throw std::invalid_argument("median-of-means batch count must be odd and >= 1");
}

std::size_t plan_samples(int k, int observables, double eps, double delta, double constant) {
  if (k < 1) throw std::invalid_argument("locality must be >= 1");
  if (observables < 1) throw std::invalid_argument("observable count must be >= 1");
  if (!(eps > 0.0)) throw std::invalid_argument("accuracy must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("failure probability must be in (0, 1)");
  if (!(constant > 0.0)) throw std::invalid_argument("sample constant must be > 0");
  const double n = constant * std::pow(4.0, k) * std::log(2.0 * observables / delta) / (eps * eps);
  return static_cast<std::size_t>(std::ceil(n));
}

int plan_batches(int observables, double delta) {
  if (observables < 1) throw std::invalid_argument("observable count must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("failure probability must be in (0, 1)");
  return 2 * static_cast<int>(std::ceil(std::log(2.0 * observables / delta))) + 1;
}

double default_failure_probability(int sites) {
  if (sites < 1) throw std::invalid_argument("site count must be >= 1");
  return sites == 1 ? 0.5 : 1.0 / (static_cast<double>(sites) * sites);
}

ShadowBatch sample(const DensityOperator& state, const ShadowScheme& scheme, std::size_t n_snapshots, int threads,
                   std::string state_id) {
  scheme.validate();
  if (n_snapshots == 0) throw std::invalid_argument("snapshot count must be >= 1");
  const SiteSystem& sys = state.system();
  if (sys.local_dim() != 2) throw std::invalid_argument("Pauli measurements need qubit sites");
  const int n = sys.sites();

  ShadowBatch batch;
  batch.sites = n;
  batch.scheme = scheme;
  batch.state_id = std::move(state_id);
  batch.bases.resize(n_snapshots * static_cast<std::size_t>(n));
  batch.minus.resize(n_snapshots * static_cast<std::size_t>(n));

  BornTable table(state);
  // Most bases get drawn once snapshots outnumber them; build them together.
  if (table.fits_all() && static_cast<double>(n_snapshots) >= std::pow(3.0, n)) table.fill_all();
  const std::size_t chunks = (n_snapshots + kChunk - 1) / kChunk;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&]() {
    try {
      std::vector<char> letters(static_cast<std::size_t>(n));
      for (std::size_t c = next++; c < chunks; c = next++) {
        Rng rng(derive_seed(scheme.seed, "shadow-chunk", c));
        const std::size_t end = std::min(n_snapshots, (c + 1) * kChunk);
        for (std::size_t t = c * kChunk; t < end; ++t) {
          std::uint64_t code = 0;
          for (int s = 0; s < n; ++s) {
            const auto b = rng.below(3);
            letters[static_cast<std::size_t>(s)] = kLetters[b];
            code = code * 3 + b;
          }
          const std::vector<double> cdf = table.cdf(code, letters);
          const double u = rng.uniform();
          auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
          if (it == cdf.end()) --it;
          const auto idx = static_cast<std::size_t>(it - cdf.begin());
          for (int s = 0; s < n; ++s) {
            const std::size_t pos = t * static_cast<std::size_t>(n) + static_cast<std::size_t>(s);
            batch.bases[pos] = letters[static_cast<std::size_t>(s)];
            batch.minus[pos] = static_cast<std::uint8_t>(sys.digit(idx, s));
          }
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  };

  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(chunks)));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return batch;
}

double snapshot_value(const ShadowBatch& batch, std::size_t snapshot, const PauliString& p) {
  return value(batch, snapshot, compile(p, batch.sites));
}

EstimateReport estimate(const ShadowBatch& batch, const std::vector<PauliString>& observables) {
  batch.scheme.validate();
  std::vector<CompiledPauli> compiled;
  compiled.reserve(observables.size());
  for (const auto& p : observables) compiled.push_back(compile(p, batch.sites));
  return median_of_means(batch.size(), batch.scheme.batches, static_cast<int>(observables.size()),
                         [&](std::size_t t, int i) { return value(batch, t, compiled[static_cast<std::size_t>(i)]); });
}

EstimateReport estimate(const ShadowBatch& batch, const std::vector<LocalOperator>& observables) {
  std::vector<PauliString> paulis;
  paulis.reserve(observables.size());
  for (const auto& op : observables) {
    if (!op.pauli) throw std::invalid_argument("shadow estimation needs Pauli-string observables");
    paulis.push_back(*op.pauli);
  }
  return estimate(batch, paulis);
}

EstimateReport estimate_classical(const std::vector<SpinConfig>& samples, const std::vector<PauliString>& observables) {
  if (samples.empty()) throw std::invalid_argument("no samples to estimate from");
  const std::size_t n = samples.front().size();
  for (const auto& s : samples) {
    if (s.size() != n) throw std::invalid_argument("spin configurations differ in length");
    for (auto v : s) {
      if (v != 1 && v != -1) throw std::invalid_argument("spin values must be +1 or -1");
    }
  }
  std::vector<std::vector<int>> supports;
  for (const auto& p : observables) {
    if (!p.is_diagonal()) throw std::invalid_argument("classical estimation needs diagonal observables, got " + p.str());
    auto sup = p.support();
    for (int s : sup) {
      if (static_cast<std::size_t>(s) >= n) throw std::invalid_argument("observable " + p.str() + " out of range");
    }
    supports.push_back(std::move(sup));
  }
  return median_of_means(samples.size(), 1, static_cast<int>(observables.size()), [&](std::size_t t, int i) {
    double v = 1.0;
    for (int s : supports[static_cast<std::size_t>(i)]) v *= samples[t][static_cast<std::size_t>(s)];
    return v;
  });
}

void write_batch(std::ostream& out, const ShadowBatch& batch) {
  nlohmann::json header = {{"format", "qmaxent-shadow-batch"},
                           {"version", 1},
                           {"scheme", "random_pauli_basis"},
                           {"batches", batch.scheme.batches},
                           {"seed", batch.scheme.seed},
                           {"sites", batch.sites},
                           {"snapshots", batch.size()},
                           {"state_id", batch.state_id}};
  out << header.dump() << '\n';
  const auto n = static_cast<std::size_t>(batch.sites);
  std::string bases(n, ' ');
  std::string outcomes(n, ' ');
  for (std::size_t t = 0; t < batch.size(); ++t) {
    for (std::size_t s = 0; s < n; ++s) {
      bases[s] = batch.bases[t * n + s];
      outcomes[s] = batch.minus[t * n + s] ? '-' : '+';
    }
    out << bases << '\t' << outcomes << '\n';
  }
}

ShadowBatch read_batch(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty shadow batch file");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad shadow batch header: ") + e.what());
  }
  ShadowBatch batch;
  try {
    batch.sites = header.at("sites").get<int>();
    batch.scheme.batches = header.at("batches").get<int>();
    batch.scheme.seed = header.at("seed").get<std::uint64_t>();
    batch.state_id = header.value("state_id", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad shadow batch header: ") + e.what());
  }
  batch.scheme.validate();
  if (batch.sites < 1) throw std::invalid_argument("shadow batch must have at least one site");
  const auto n = static_cast<std::size_t>(batch.sites);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab != n || line.size() != 2 * n + 1) {
      throw std::invalid_argument("shadow batch line " + std::to_string(lineno) + ": expected " + std::to_string(n) +
                                  " bases and outcomes");
    }
    for (std::size_t s = 0; s < n; ++s) {
      const char b = static_cast<char>(std::toupper(static_cast<unsigned char>(line[s])));
      const char o = line[n + 1 + s];
      if (b != 'X' && b != 'Y' && b != 'Z') {
        throw std::invalid_argument("shadow batch line " + std::to_string(lineno) + ": bad basis letter");
      }
      if (o != '+' && o != '-') throw std::invalid_argument("shadow batch line " + std::to_string(lineno) + ": bad outcome");
      batch.bases.push_back(b);
      batch.minus.push_back(o == '-' ? 1 : 0);
    }
  }
  return batch;
}

void write_report_csv(std::ostream& out, const EstimateReport& report, const std::vector<PauliString>& observables) {
  if (static_cast<std::size_t>(report.estimates.size()) != observables.size()) {
    throw std::invalid_argument("report and observable list differ in length");
  }
  out << "observable,estimate,std_error\n";
  out.precision(17);
  for (std::size_t i = 0; i < observables.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    const std::string name = observables[i].is_identity() ? "I" : observables[i].str();
    out << name << ',' << report.estimates(idx) << ',' << report.std_errors(idx) << '\n';
  }
}

}  // namespace qmaxent
