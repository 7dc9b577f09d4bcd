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

#include "qmaxent/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "qmaxent/commuting.hpp"
#include "qmaxent/random.hpp"
#include "qmaxent/shadow_sampler.hpp"

namespace qmaxent {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Small helpers

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
  const auto extra = static_cast<std::size_t>(std::max(1, threads)) - 1;
  for (std::size_t w = 0; w < std::min(extra, count); ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

/// JSON cannot hold inf or nan; they are written as null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

const char* halting_name(Halting h) { return h == Halting::stopping_rule ? "stopping_rule" : "max_iters"; }

// ---------------------------------------------------------------------------
// Config access with path-tagged errors

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

template <typename T>
T get_req(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing " + where + "." + key);
  return get_or<T>(obj, key, T{}, where);
}

const json& object_or_empty(const json& obj, const char* key) {
  static const json empty = json::object();
  return obj.contains(key) ? obj.at(key) : empty;
}

Boundary parse_boundary(const std::string& s) {
  if (s == "open") return Boundary::open;
  if (s == "periodic") return Boundary::periodic;
  throw ConfigError("boundary must be 'open' or 'periodic', got '" + s + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Matrix parse_matrix(const json& re, const json* im, const std::string& where) {
  if (!re.is_array() || re.empty()) throw ConfigError(where + ".re must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(re.size());
  Matrix m(rows, rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = re.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != rows) throw ConfigError(where + " must be square");
    for (Eigen::Index j = 0; j < rows; ++j) {
      double imag = 0.0;
      if (im) imag = im->at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j)).get<double>();
      m(i, j) = Complex(row.at(static_cast<std::size_t>(j)).get<double>(), imag);
    }
  }
  return m;
}

ModelSpec model_from_json(const json& j) {
  try {
    check_keys(j, {"beta", "sites", "basis", "lambda"}, "model");
    const auto& sites = j.at("sites");
    check_keys(sites, {"n", "d"}, "model.sites");
    const SiteSystem system(get_req<int>(sites, "n", "model.sites"), get_or<int>(sites, "d", 2, "model.sites"));
    const auto& basis_json = j.at("basis");
    if (!basis_json.is_array() || basis_json.empty()) throw ConfigError("model.basis must be a non-empty array");
    std::vector<LocalOperator> basis;
    for (std::size_t i = 0; i < basis_json.size(); ++i) {
      const auto& b = basis_json[i];
      const std::string where = "model.basis[" + std::to_string(i) + "]";
      if (b.is_string()) {
        basis.push_back(LocalOperator::from_pauli(PauliString::parse(b.get<std::string>())));
        continue;
      }
      check_keys(b, {"support", "re", "im"}, where);
      LocalOperator op;
      for (int s : b.at("support").get<std::vector<int>>()) op.support.push_back(s - 1);
      const json* im = b.contains("im") ? &b.at("im") : nullptr;
      op.matrix = parse_matrix(b.at("re"), im, where);
      basis.push_back(std::move(op));
    }
    ModelSpec spec{GibbsModel(system, std::move(basis), get_req<double>(j, "beta", "model")), std::nullopt};
    if (j.contains("lambda")) {
      const auto v = j.at("lambda").get<std::vector<double>>();
      if (static_cast<int>(v.size()) != spec.model.num_params()) throw ConfigError("model.lambda length != basis size");
      spec.lambda = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
      if (spec.lambda->cwiseAbs().maxCoeff() > 1.0) throw ConfigError("model.lambda must lie in the unit l_inf ball");
    }
    return spec;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid model: ") + e.what());
  }
}

ChainSpec chain_from_json(const json& j) {
  try {
    check_keys(j, {"n", "beta", "boundary", "J", "h"}, "chain");
    ChainSpec s;
    s.n = get_req<int>(j, "n", "chain");
    s.beta = get_or<double>(j, "beta", 1.0, "chain");
    s.boundary = parse_boundary(get_or<std::string>(j, "boundary", "open", "chain"));
    s.J = get_req<std::vector<double>>(j, "J", "chain");
    s.h = get_or<std::vector<double>>(j, "h", std::vector<double>(static_cast<std::size_t>(std::max(0, s.n)), 0.0),
                                      "chain");
    s.validate();
    return s;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid chain: ") + e.what());
  }
}

json chain_to_json(const ChainSpec& s) {
  return {{"n", s.n},
          {"beta", s.beta},
          {"boundary", s.boundary == Boundary::open ? "open" : "periodic"},
          {"J", s.J},
          {"h", s.h}};
}

SolverOptions solver_from_json(const json& j) {
  check_keys(j, {"c", "U", "L", "delta_mu", "max_iters", "trace_every", "data_eps", "audit"}, "solver");
  SolverOptions o;
  o.c = get_or<double>(j, "c", o.c, "solver");
  if (j.contains("U")) o.U = get_req<double>(j, "U", "solver");
  if (j.contains("L")) o.L = get_req<double>(j, "L", "solver");
  o.delta_mu = get_or<double>(j, "delta_mu", o.delta_mu, "solver");
  o.max_iters = get_or<int>(j, "max_iters", o.max_iters, "solver");
  o.trace_every = get_or<int>(j, "trace_every", o.trace_every, "solver");
  o.data_eps = get_or<double>(j, "data_eps", o.data_eps, "solver");
  o.audit = get_or<bool>(j, "audit", o.audit, "solver");
  try {
    o.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }
  return o;
}

/// Runs `fn`, turning anything it throws into a StageError for `stage`.
template <typename Fn>
auto in_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::vector<int> lightcone_counts(int n, const WindowedObservable& obs, int depth) {
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  for (const auto& term : obs.terms) {
    const int lo = std::max(0, *std::min_element(term.begin(), term.end()) - depth);
    const int hi = std::min(n - 1, *std::max_element(term.begin(), term.end()) + depth);
    for (int s = lo; s <= hi; ++s) ++counts[static_cast<std::size_t>(s)];
  }
  return counts;
}

}  // namespace

// ---------------------------------------------------------------------------
// File formats

ModelSpec parse_model(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

ModelSpec read_model(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("model file not found: " + path.string());
  return parse_model(read_text(path));
}

void write_model(std::ostream& out, const GibbsModel& model, const std::optional<Vector>& lambda) {
  json basis = json::array();
  for (const auto& op : model.basis()) {
    if (op.pauli) {
      basis.push_back(op.pauli->str());
      continue;
    }
    json sup = json::array();
    for (int s : op.support) sup.push_back(s + 1);
    json re = json::array();
    json im = json::array();
    for (Eigen::Index i = 0; i < op.matrix.rows(); ++i) {
      json rr = json::array();
      json ri = json::array();
      for (Eigen::Index k = 0; k < op.matrix.cols(); ++k) {
        rr.push_back(op.matrix(i, k).real());
        ri.push_back(op.matrix(i, k).imag());
      }
      re.push_back(rr);
      im.push_back(ri);
    }
    basis.push_back({{"support", sup}, {"re", re}, {"im", im}});
  }
  json j = {{"beta", model.beta()},
            {"sites", {{"n", model.system().sites()}, {"d", model.system().local_dim()}}},
            {"basis", basis}};
  if (lambda) j["lambda"] = vector_json(*lambda);
  out << j.dump(2) << '\n';
}

ChainSpec parse_chain(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("chain is not valid JSON: ") + e.what());
  }
  return chain_from_json(j);
}

void write_chain(std::ostream& out, const ChainSpec& spec) { out << chain_to_json(spec).dump(2) << '\n'; }

// ---------------------------------------------------------------------------
// Windowed-observable experiment

ChainSpec random_chain(int n, double beta, Boundary boundary, double j_scale, double h_scale, std::uint64_t seed) {
  ChainSpec s;
  s.n = n;
  s.beta = beta;
  s.boundary = boundary;
  Rng rng(seed);
  s.J.resize(static_cast<std::size_t>(s.bonds()));
  for (auto& j : s.J) j = rng.uniform(-j_scale, j_scale);
  s.h.assign(static_cast<std::size_t>(n), 0.0);
  if (h_scale > 0.0) {
    for (auto& h : s.h) h = rng.uniform(-h_scale, h_scale);
  }
  s.validate();
  return s;
}

FigRow fig_pinsker_row(int n, std::uint64_t row_seed, const FigSettings& st, int threads) {
  FigRow row;
  row.n = n;
  row.seed = row_seed;
  row.samples = st.samples;
  const bool fields = st.h_scale > 0.0;
  const ChainSpec truth =
      random_chain(n, st.beta, st.boundary, st.j_scale, st.h_scale, derive_seed(row_seed, "couplings"));
  const ChainFamily family(n, st.beta, st.boundary, fields);
  const auto samples = chain_sample(truth, st.samples, derive_seed(row_seed, "samples"), threads);
  const auto e_hat = estimate_classical(samples, family.observables()).estimates;
  const int m = family.num_params();
  row.data_eps = std::sqrt(2.0 * std::log(2.0 * m / st.delta) / static_cast<double>(st.samples));

  SolverOptions opts = st.solver;
  opts.data_eps = row.data_eps;
  const Vector lambda = family.params(truth);
  const auto rec = chain_maxent_reconstruct(e_hat, family, opts, &lambda);
  row.halting = rec.result.halting;
  row.iterations = rec.result.iterations;
  row.d_sym_bound = rec.result.certificate.d_sym_bound;
  row.d_sym_exact = rec.result.certificate.exact_d_sym.value_or(std::numeric_limits<double>::quiet_NaN());

  const auto circuit = BrickworkCircuit::haar_random(n, st.depth, derive_seed(row_seed, "circuit"));
  const auto obs = WindowedObservable::zz_average(n, st.offset);
  row.observable_error = windowed_observable_error(truth, rec.spec, circuit, obs, threads);
  const double norm = windowed_norm_bound(obs);
  row.pinsker_bound = norm * std::sqrt(2.0 * row.d_sym_bound);
  row.pinsker_exact = norm * std::sqrt(2.0 * std::max(0.0, row.d_sym_exact));
  row.tc_predicted = std::numeric_limits<double>::quiet_NaN();
  if (st.tc_alpha) {
    // Hamming Lipschitz bound 2 sqrt(n) max_j sum_{t ni j} ||O_t|| with each
    // term supported on its (conservative) lightcone.
    const auto counts = lightcone_counts(n, obs, st.depth);
    const double lip = 2.0 * std::sqrt(static_cast<double>(n)) * std::abs(obs.weight) *
                       static_cast<double>(*std::max_element(counts.begin(), counts.end()));
    row.tc_predicted = lip * std::sqrt(std::max(0.0, row.d_sym_exact) / (2.0 * *st.tc_alpha));
  }
  return row;
}

std::vector<FigRow> fig_pinsker_sweep(const std::vector<int>& ns, int seeds, std::uint64_t master,
                                      const FigSettings& settings, int threads) {
  std::vector<std::pair<int, int>> jobs;
  for (int n : ns) {
    for (int s = 0; s < seeds; ++s) jobs.emplace_back(n, s);
  }
  std::vector<FigRow> rows(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    const auto [n, s] = jobs[i];
    const std::uint64_t seed =
        derive_seed(master, "fig-pinsker", (static_cast<std::uint64_t>(n) << 20) + static_cast<std::uint64_t>(s));
    try {
      rows[i] = fig_pinsker_row(n, seed, settings, 1);
    } catch (const std::exception& e) {
      FigRow failed;
      failed.n = n;
      failed.seed = seed;
      failed.samples = settings.samples;
      failed.status = std::string("error: ") + e.what();
      rows[i] = failed;
    }
  });
  return rows;
}

void write_fig_csv(std::ostream& out, const std::vector<FigRow>& rows) {
  out << "n,seed,samples,d_sym_bound,observable_error,pinsker_bound,d_sym_exact,pinsker_exact,tc_predicted,"
         "data_eps,halting,iterations,status\n";
  for (const auto& r : rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << r.n << ',' << r.seed << ',' << r.samples << ',' << format_double(r.d_sym_bound) << ','
        << format_double(r.observable_error) << ',' << format_double(r.pinsker_bound) << ','
        << format_double(r.d_sym_exact) << ',' << format_double(r.pinsker_exact) << ','
        << format_double(r.tc_predicted) << ',' << format_double(r.data_eps) << ',' << halting_name(r.halting)
        << ',' << r.iterations << ',' << status << '\n';
  }
}

// ---------------------------------------------------------------------------
// Identity audit

std::vector<VerifyItem> verify_model(const GibbsModel& model, const Vector& lambda, const VerifyOptions& opts) {
  const int m = model.num_params();
  const double beta = model.beta();
  if (lambda.size() != m) throw std::invalid_argument("lambda length != basis size");
  Rng rng(opts.seed);
  std::vector<Vector> points;
  for (int p = 0; p < std::max(1, opts.pairs); ++p) {
    Vector mu(m);
    for (int i = 0; i < m; ++i) mu(i) = rng.uniform(-1.0, 1.0);
    points.push_back(std::move(mu));
  }
  const Vector e_lambda = model.expectations(lambda);
  std::vector<VerifyItem> items;

  VerifyItem identity{"entropy_identity", true, 0.0, 1e-8};
  VerifyItem gradient{"gradient_fd", true, 0.0, 1e-6};
  VerifyItem hessian{"hessian_fd", true, 0.0, 1e-5};
  VerifyItem commuting{"hessian_commuting", true, 0.0, 1e-8};
  VerifyItem sandwich{"hessian_sandwich", true, 0.0, 1e-9};
  VerifyItem pinsker{"pinsker", true, 0.0, 1e-12};
  const double u_default = 2.0 * beta * beta * m;
  for (const auto& mu : points) {
    const auto sd = symmetric_divergence(model, lambda, mu);
    identity.value = std::max(identity.value, sd.residual / std::max(1.0, sd.direct));

    const double h = 1e-5;
    Vector fd(m);
    for (int i = 0; i < m; ++i) {
      Vector p = mu, q = mu;
      p(i) += h;
      q(i) -= h;
      fd(i) = (dual_objective(model, p, e_lambda) - dual_objective(model, q, e_lambda)) / (2 * h);
    }
    gradient.value = std::max(gradient.value, (dual_gradient(model, mu, e_lambda) - fd).cwiseAbs().maxCoeff());

    Eigen::MatrixXd spectral = dual_hessian(model, mu, HessianMethod::spectral);
    if (opts.corrupt_hessian) spectral += 1.5 * u_default * Eigen::MatrixXd::Identity(m, m);
    const Eigen::MatrixXd finite = dual_hessian(model, mu, HessianMethod::finite_diff);
    hessian.value = std::max(hessian.value, (spectral - finite).cwiseAbs().maxCoeff());
    if (model.commuting()) {
      const Eigen::MatrixXd closed = dual_hessian(model, mu, HessianMethod::commuting);
      commuting.value = std::max(commuting.value, (spectral - closed).cwiseAbs().maxCoeff());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spectral);
    const double over = std::max(es.eigenvalues().maxCoeff() - u_default, -es.eigenvalues().minCoeff());
    sandwich.value = std::max(sandwich.value, over);

    const Matrix a = gibbs_state(model, lambda).matrix();
    const Matrix b = gibbs_state(model, mu).matrix();
    const double half_trace = 0.5 * trace_norm(a - b);
    pinsker.value = std::max(pinsker.value, half_trace - std::sqrt(0.5 * relative_entropy(a, b)));
  }
  identity.pass = identity.value <= identity.tolerance;
  gradient.pass = gradient.value <= gradient.tolerance;
  hessian.pass = hessian.value <= hessian.tolerance;
  commuting.pass = commuting.value <= commuting.tolerance;
  sandwich.pass = sandwich.value <= sandwich.tolerance;
  pinsker.pass = pinsker.value <= pinsker.tolerance;
  items = {identity, gradient, hessian};
  if (model.commuting()) items.push_back(commuting);
  items.push_back(sandwich);
  items.push_back(pinsker);
  return items;
}

// ---------------------------------------------------------------------------
// Commuting Hessian bounds

BoundsReport commuting_bounds(const GibbsModel& model, const std::vector<double>& betas, int grid, int random_points,
                              std::uint64_t seed, int threads) {
  if (!model.commuting()) throw std::invalid_argument("Hessian bounds need a commuting basis");
  if (!orthogonal_traceless_basis(model)) throw std::invalid_argument("Hessian bounds need an orthogonal traceless basis");
  if (betas.empty()) throw std::invalid_argument("need at least one inverse temperature");
  const int m = model.num_params();
  const int d = model.system().local_dim();
  const auto graph = InteractionHypergraph::from_model(model);

  std::vector<Vector> points;
  if (m <= 3) {
    if (grid < 2) throw std::invalid_argument("grid needs at least 2 points per coordinate");
    std::size_t total = 1;
    for (int i = 0; i < m; ++i) total *= static_cast<std::size_t>(grid);
    for (std::size_t idx = 0; idx < total; ++idx) {
      Vector mu(m);
      std::size_t r = idx;
      for (int i = 0; i < m; ++i) {
        mu(i) = -1.0 + 2.0 * static_cast<double>(r % static_cast<std::size_t>(grid)) / (grid - 1);
        r /= static_cast<std::size_t>(grid);
      }
      points.push_back(std::move(mu));
    }
  } else {
    points.push_back(Vector::Zero(m));
    Rng rng(derive_seed(seed, "bounds-grid"));
    for (int p = 0; p < random_points; ++p) {
      Vector mu(m);
      for (int i = 0; i < m; ++i) mu(i) = rng.uniform(-1.0, 1.0);
      points.push_back(std::move(mu));
    }
  }

  // Basis pairs for the covariance decay fit.
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> pair_distance;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      pairs.emplace_back(i, j);
      pair_distance.push_back(
          graph.set_distance(model.basis()[static_cast<std::size_t>(i)].support, model.basis()[static_cast<std::size_t>(j)].support));
    }
  }

  BoundsReport report;
  std::vector<double> max_condition;
  for (std::size_t bi = 0; bi < betas.size(); ++bi) {
    const double beta = betas[bi];
    const GibbsModel mb = model.with_beta(beta);
    double c_max = 0.0;
    for (int site = 0; site < model.num_sites(); ++site) {
      bool touched = false;
      for (const auto& op : model.basis()) touched = touched || std::count(op.support.begin(), op.support.end(), site) > 0;
      if (!touched) continue;
      c_max = std::max(c_max, contraction_search(mb, site, 5, 200, derive_seed(seed, "contraction", static_cast<std::uint64_t>(site)), threads).value);
    }
    report.contraction.push_back(c_max);
    double lower = 0.0;
    if (c_max < 1.0) lower = hessian_lower_bound(beta, d, graph, c_max);

    std::vector<BoundsRow> rows(points.size());
    parallel_for(points.size(), threads, [&](std::size_t p) {
      const Vector& mu = points[p];
      BoundsRow row;
      row.beta = beta;
      row.point = static_cast<int>(p);
      const Eigen::MatrixXd hess = dual_hessian(mb, mu, HessianMethod::commuting);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
      row.lambda_min = es.eigenvalues().minCoeff();
      row.lambda_max = es.eigenvalues().maxCoeff();
      row.condition = row.lambda_min > 0.0 ? row.lambda_max / row.lambda_min : std::numeric_limits<double>::infinity();
      row.lower_bound = lower;
      row.upper_bound = 2.0 * beta * beta * m;
      if (!pairs.empty()) {
        try {
          const Matrix sigma = gibbs_state(mb, mu).matrix();
          std::vector<CorrelationPair> cps;
          for (std::size_t k = 0; k < pairs.size(); ++k) {
            cps.push_back({mb.dense(pairs[k].first), mb.dense(pairs[k].second), pair_distance[k]});
          }
          const auto decay = correlation_fit(sigma, cps);
          row.upper_bound = hessian_upper_bound_decay(decay, beta, d, graph);
          row.decay_fitted = true;
        } catch (const std::exception&) {
          // too few resolved correlations: keep the generic bound
        }
      }
      row.sandwich_ok = row.lambda_min >= row.lower_bound - 1e-12 && row.lambda_max <= row.upper_bound + 1e-9;
      rows[p] = row;
    });
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, r.condition);
    max_condition.push_back(worst);
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  if (betas.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(betas.size());
    for (std::size_t i = 0; i < betas.size(); ++i) {
      const double y = std::log(max_condition[i]);
      sx += betas[i];
      sy += y;
      sxx += betas[i] * betas[i];
      sxy += betas[i] * y;
    }
    const double den = k * sxx - sx * sx;
    if (den > 0.0) report.condition_exponent = (k * sxy - sx * sy) / den;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Perturbed ensembles

namespace {

Matrix random_full_rank_density(int dim, Rng& rng) {
  Matrix g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = Complex(rng.normal(), rng.normal());
  }
  Matrix r = g * g.adjoint();
  r /= r.trace().real();
  return 0.9 * r + 0.1 * Matrix::Identity(dim, dim) / static_cast<double>(dim);
}

}  // namespace

std::vector<DensityOperator> perturbed_product_states(const Matrix& site_state, int n, int count, double strength,
                                                      std::uint64_t seed) {
  const auto d = static_cast<int>(site_state.rows());
  const SiteSystem system(n, d);
  std::vector<DensityOperator> out;
  for (int c = 0; c < count; ++c) {
    Rng rng(derive_seed(seed, "product-perturbation", static_cast<std::uint64_t>(c)));
    std::vector<Matrix> factors;
    for (int s = 0; s < n; ++s) {
      const double t = strength * rng.uniform();
      factors.push_back((1.0 - t) * site_state + t * random_full_rank_density(d, rng));
    }
    out.push_back(DensityOperator::product(factors, system));
  }
  return out;
}

std::vector<DensityOperator> perturbed_states(const DensityOperator& sigma, int count, double strength,
                                              std::uint64_t seed) {
  const auto dim = static_cast<int>(sigma.system().dim());
  std::vector<DensityOperator> out;
  for (int c = 0; c < count; ++c) {
    Rng rng(derive_seed(seed, "state-perturbation", static_cast<std::uint64_t>(c)));
    const double t = strength * rng.uniform();
    Matrix rho = (1.0 - t) * sigma.matrix() + t * random_full_rank_density(dim, rng);
    out.emplace_back(hermitian_part(rho), sigma.system());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shadow calibration

CalibrationResult shadow_calibration(const GibbsModel& model, const Vector& lambda, int k, double eps, double delta,
                                     int trials, std::uint64_t seed, int threads) {
  std::vector<PauliString> observables;
  for (const auto& op : model.basis()) {
    if (!op.pauli) throw std::invalid_argument("calibration needs a Pauli-string basis");
    observables.push_back(*op.pauli);
  }
  const int m = static_cast<int>(observables.size());
  CalibrationResult res;
  res.samples = plan_samples(k, m, eps, delta);
  res.batches = plan_batches(m, delta);
  res.trials = trials;
  const auto state = gibbs_state(model, lambda);
  const Vector exact = model.expectations(lambda);
  for (int t = 0; t < trials; ++t) {
    ShadowScheme scheme;
    scheme.batches = res.batches;
    scheme.seed = derive_seed(seed, "calibration", static_cast<std::uint64_t>(t));
    const auto batch = sample(state, scheme, res.samples, threads);
    const auto rep = estimate(batch, observables);
    const double err = (rep.estimates - exact).cwiseAbs().maxCoeff();
    res.max_error = std::max(res.max_error, err);
    if (err > eps) ++res.failures;
  }
  res.failure_rate = trials > 0 ? static_cast<double>(res.failures) / trials : 0.0;
  return res;
}

// ---------------------------------------------------------------------------
// Command runner

namespace {

struct Context {
  std::string subcommand;
  json config;
  fs::path config_dir;
  fs::path out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  std::optional<double> tc_alpha;
  std::optional<std::string> w1_mode;
  json stage_seeds = json::object();
  std::vector<std::string> outputs;
  std::ostream* log = nullptr;

  std::uint64_t stage_seed(const std::string& label) {
    const std::uint64_t s = derive_seed(seed, label);
    stage_seeds[label] = s;
    return s;
  }
  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : config_dir / path;
  }
  std::ofstream open(const std::string& name) {
    std::ofstream out(out_dir / name, std::ios::binary);
    if (!out) throw StageError("output", "cannot write " + (out_dir / name).string());
    outputs.push_back(name);
    return out;
  }
  void note(const std::string& msg) const {
    if (log) *log << msg << '\n';
  }
};

ModelSpec load_model_ref(const Context& ctx, const json& ref) {
  if (ref.is_string()) return read_model(ctx.resolve(ref.get<std::string>()));
  if (ref.is_object()) return model_from_json(ref);
  throw ConfigError("model must be a file path or an inline object");
}

ChainSpec load_chain_ref(Context& ctx, const json& ref) {
  if (ref.is_string()) {
    const fs::path p = ctx.resolve(ref.get<std::string>());
    if (!fs::exists(p)) throw ConfigError("chain file not found: " + p.string());
    return parse_chain(read_text(p));
  }
  if (ref.is_object() && ref.contains("random")) {
    check_keys(ref, {"random"}, "chain");
    const auto& r = ref.at("random");
    check_keys(r, {"n", "beta", "boundary", "j_scale", "h_scale"}, "chain.random");
    const int n = get_req<int>(r, "n", "chain.random");
    const double beta = get_or<double>(r, "beta", 1.0, "chain.random");
    const Boundary b = parse_boundary(get_or<std::string>(r, "boundary", "open", "chain.random"));
    const double js = get_or<double>(r, "j_scale", 1.0, "chain.random");
    const double hs = get_or<double>(r, "h_scale", 0.0, "chain.random");
    try {
      return random_chain(n, beta, b, js, hs, ctx.stage_seed("chain-truth"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("chain.random: ") + e.what());
    }
  }
  if (ref.is_object()) return chain_from_json(ref);
  throw ConfigError("chain must be a file path or an object");
}

void write_trajectory(std::ostream& out, const SolverResult& res) {
  out << "iter,f,grad_norm,d_sym_exact\n";
  for (const auto& r : res.iterates) {
    out << r.iter << ',' << format_double(r.f) << ',' << format_double(r.grad_norm) << ','
        << (r.d_sym_exact ? format_double(*r.d_sym_exact) : std::string()) << '\n';
  }
}

json result_json(const SolverResult& res) {
  json cert = {{"d_sym_bound", res.certificate.d_sym_bound},
               {"trace_dist_bound", res.certificate.trace_dist_bound},
               {"a_posteriori_bound", res.certificate.a_posteriori_bound}};
  if (res.certificate.exact_d_sym) cert["exact_d_sym"] = *res.certificate.exact_d_sym;
  return {{"mu_star", vector_json(res.mu_star)}, {"halting", halting_name(res.halting)},
          {"iterations", res.iterations},         {"residual", res.residual},
          {"U", res.U},                           {"certificate", cert}};
}

void run_reconstruct_chain(Context& ctx) {
  const json& cfg = ctx.config;
  check_keys(cfg, {"seed", "chain", "samples", "fields", "delta", "solver"}, "config");
  ChainSpec truth = load_chain_ref(ctx, cfg.at("chain"));
  const auto n_samples = get_or<std::size_t>(cfg, "samples", 1000, "config");
  const double delta = get_or<double>(cfg, "delta", 0.05, "config");
  if (n_samples == 0) throw ConfigError("samples must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  const bool has_fields = std::any_of(truth.h.begin(), truth.h.end(), [](double h) { return h != 0.0; });
  const bool fields = get_or<bool>(cfg, "fields", has_fields, "config");
  if (has_fields && !fields) throw ConfigError("chain has fields but the family excludes them");
  SolverOptions opts = solver_from_json(object_or_empty(cfg, "solver"));
  const std::uint64_t sample_seed = ctx.stage_seed("sampling");

  const ChainFamily family(truth.n, truth.beta, truth.boundary, fields);
  const auto e_hat = in_stage("estimation", [&] {
    const auto samples = chain_sample(truth, n_samples, sample_seed, ctx.threads);
    return estimate_classical(samples, family.observables()).estimates;
  });
  const int m = family.num_params();
  opts.data_eps = std::max(opts.data_eps, std::sqrt(2.0 * std::log(2.0 * m / delta) / static_cast<double>(n_samples)));
  const Vector lambda = family.params(truth);
  ctx.note("reconstructing chain with n = " + std::to_string(truth.n) + ", m = " + std::to_string(m));
  const auto rec = in_stage("solver", [&] { return chain_maxent_reconstruct(e_hat, family, opts, &lambda); });

  in_stage("output", [&] {
    auto truth_out = ctx.open("truth_chain.json");
    write_chain(truth_out, truth);
    auto rec_out = ctx.open("reconstructed_chain.json");
    write_chain(rec_out, rec.spec);
    auto traj = ctx.open("trajectory.csv");
    write_trajectory(traj, rec.result);
    json r = result_json(rec.result);
    r["data_eps"] = opts.data_eps;
    r["samples"] = n_samples;
    auto res_out = ctx.open("result.json");
    res_out << r.dump(2) << '\n';
    return 0;
  });
}

void run_reconstruct_model(Context& ctx) {
  const json& cfg = ctx.config;
  check_keys(cfg, {"seed", "model", "estimation", "oracle", "solver"}, "config");
  ModelSpec spec = load_model_ref(ctx, cfg.at("model"));
  SolverOptions opts = solver_from_json(object_or_empty(cfg, "solver"));
  const json& est = object_or_empty(cfg, "estimation");
  check_keys(est, {"source", "eps", "delta", "samples", "batches", "path"}, "estimation");
  const std::string source = get_or<std::string>(est, "source", "exact", "estimation");
  if (source != "exact" && source != "shadows" && source != "file") {
    throw ConfigError("estimation.source must be exact, shadows or file");
  }
  if (source != "file" && !spec.lambda) throw ConfigError("estimation from the state needs model.lambda");
  const json& orc = object_or_empty(cfg, "oracle");
  check_keys(orc, {"kind", "accuracy", "samples", "batches"}, "oracle");
  const std::string kind = get_or<std::string>(orc, "kind", "exact", "oracle");
  if (kind != "exact" && kind != "noisy" && kind != "shadows") throw ConfigError("oracle.kind must be exact, noisy or shadows");
  const double accuracy = get_or<double>(orc, "accuracy", opts.delta_mu, "oracle");
  if (accuracy > opts.delta_mu) throw ConfigError("oracle.accuracy exceeds solver.delta_mu");
  const GibbsModel& model = spec.model;
  const int m = model.num_params();
  std::vector<PauliString> paulis;
  for (const auto& op : model.basis()) {
    if (op.pauli) paulis.push_back(*op.pauli);
  }
  const bool all_pauli = static_cast<int>(paulis.size()) == m;
  if ((source == "shadows" || kind == "shadows") && !all_pauli) throw ConfigError("shadow estimation needs a Pauli basis");

  Vector e_hat;
  if (source == "exact") {
    e_hat = in_stage("estimation", [&] { return model.expectations(*spec.lambda); });
  } else if (source == "shadows") {
    int k = 1;
    for (const auto& p : paulis) k = std::max(k, p.weight());
    const double eps = get_or<double>(est, "eps", 0.1, "estimation");
    const double delta = get_or<double>(est, "delta", default_failure_probability(model.num_sites()), "estimation");
    ShadowScheme scheme;
    scheme.seed = ctx.stage_seed("shadows");
    std::size_t n_snap = 0;
    try {
      n_snap = get_or<std::size_t>(est, "samples", plan_samples(k, m, eps, delta), "estimation");
      scheme.batches = get_or<int>(est, "batches", plan_batches(m, delta), "estimation");
      scheme.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("estimation: ") + e.what());
    }
    const auto report = in_stage("estimation", [&] {
      const auto batch = sample(gibbs_state(model, *spec.lambda), scheme, n_snap, ctx.threads, "model");
      auto r = estimate(batch, paulis);
      r.eps = eps;
      r.delta = delta;
      return r;
    });
    e_hat = report.estimates;
    opts.data_eps = std::max(opts.data_eps, eps);
    in_stage("output", [&] {
      auto out = ctx.open("estimates.csv");
      write_report_csv(out, report, paulis);
      return 0;
    });
  } else {
    const fs::path p = ctx.resolve(get_req<std::string>(est, "path", "estimation"));
    if (!fs::exists(p)) throw ConfigError("estimate file not found: " + p.string());
    std::map<std::string, double> values;
    std::istringstream in(read_text(p));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto c1 = line.find(',');
      const auto c2 = line.find(',', c1 + 1);
      if (c1 == std::string::npos) throw ConfigError("bad estimate line: " + line);
      try {
        values[PauliString::parse(line.substr(0, c1)).str()] = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
      } catch (const std::exception& e) {
        throw ConfigError("bad estimate line '" + line + "': " + e.what());
      }
    }
    if (!all_pauli) throw ConfigError("estimate files address Pauli-string bases only");
    e_hat.resize(m);
    for (int i = 0; i < m; ++i) {
      const auto it = values.find(paulis[static_cast<std::size_t>(i)].str());
      if (it == values.end()) throw ConfigError("estimate file lacks " + paulis[static_cast<std::size_t>(i)].str());
      e_hat(i) = it->second;
    }
    opts.data_eps = std::max(opts.data_eps, get_or<double>(est, "eps", 0.0, "estimation"));
  }

  std::unique_ptr<ExpectationOracle> oracle;
  if (kind == "exact") {
    oracle = std::make_unique<ExactOracle>(model);
  } else if (kind == "noisy") {
    oracle = std::make_unique<NoisyOracle>(model, accuracy, ctx.stage_seed("oracle"));
  } else {
    ShadowScheme scheme;
    scheme.seed = ctx.stage_seed("oracle");
    scheme.batches = get_or<int>(orc, "batches", 9, "oracle");
    const auto n_snap = get_req<std::size_t>(orc, "samples", "oracle");
    oracle = std::make_unique<ShadowOracle>(model, scheme, n_snap, accuracy, ctx.threads);
  }
  const Vector* lambda_ptr = spec.lambda ? &*spec.lambda : nullptr;
  const auto res = in_stage("solver", [&] { return solve(model, e_hat, *oracle, opts, lambda_ptr); });
  in_stage("output", [&] {
    auto traj = ctx.open("trajectory.csv");
    write_trajectory(traj, res);
    json r = result_json(res);
    r["e_hat"] = vector_json(e_hat);
    r["data_eps"] = opts.data_eps;
    auto out = ctx.open("result.json");
    out << r.dump(2) << '\n';
    return 0;
  });
}

void run_reconstruct(Context& ctx) {
  if (ctx.config.contains("chain")) {
    run_reconstruct_chain(ctx);
  } else if (ctx.config.contains("model")) {
    run_reconstruct_model(ctx);
  } else {
    throw ConfigError("reconstruct needs a 'model' or a 'chain'");
  }
}

void run_verify(Context& ctx) {
  const json& cfg = ctx.config;
  check_keys(cfg, {"seed", "model", "verify"}, "config");
  if (!cfg.contains("model")) throw ConfigError("verify needs a 'model'");
  ModelSpec spec = load_model_ref(ctx, cfg.at("model"));
  if (!spec.lambda) throw ConfigError("verify needs model.lambda");
  const json& v = object_or_empty(cfg, "verify");
  check_keys(v, {"pairs", "corrupt_hessian"}, "verify");
  VerifyOptions opts;
  opts.pairs = get_or<int>(v, "pairs", opts.pairs, "verify");
  opts.corrupt_hessian = get_or<bool>(v, "corrupt_hessian", false, "verify");
  if (opts.pairs < 1) throw ConfigError("verify.pairs must be >= 1");
  opts.seed = ctx.stage_seed("verify");
  const auto items = in_stage("verify", [&] { return verify_model(spec.model, *spec.lambda, opts); });
  json report = json::array();
  bool all = true;
  for (const auto& it : items) {
    report.push_back({{"name", it.name}, {"pass", it.pass}, {"value", it.value}, {"tolerance", it.tolerance}});
    all = all && it.pass;
    ctx.note(std::string(it.pass ? "PASS " : "FAIL ") + it.name + " (" + format_double(it.value) + ")");
  }
  in_stage("output", [&] {
    auto out = ctx.open("verify.json");
    out << json{{"all_pass", all}, {"items", report}}.dump(2) << '\n';
    return 0;
  });
}

void run_fig_pinsker(Context& ctx) {
  const json& cfg = ctx.config;
  check_keys(cfg, {"seed", "sweep", "solver"}, "config");
  const json& sw = object_or_empty(cfg, "sweep");
  check_keys(sw, {"n", "seeds", "samples", "beta", "depth", "offset", "delta", "boundary", "j_scale", "h_scale"},
             "sweep");
  const auto ns = get_or<std::vector<int>>(sw, "n", {10, 20, 50, 100, 200}, "sweep");
  const int seeds = get_or<int>(sw, "seeds", 20, "sweep");
  FigSettings st;
  st.samples = get_or<std::size_t>(sw, "samples", st.samples, "sweep");
  st.beta = get_or<double>(sw, "beta", st.beta, "sweep");
  st.depth = get_or<int>(sw, "depth", st.depth, "sweep");
  st.offset = get_or<int>(sw, "offset", st.offset, "sweep");
  st.delta = get_or<double>(sw, "delta", st.delta, "sweep");
  st.boundary = parse_boundary(get_or<std::string>(sw, "boundary", "open", "sweep"));
  st.j_scale = get_or<double>(sw, "j_scale", st.j_scale, "sweep");
  st.h_scale = get_or<double>(sw, "h_scale", st.h_scale, "sweep");
  st.solver = solver_from_json(object_or_empty(cfg, "solver"));
  st.tc_alpha = ctx.tc_alpha;
  if (ns.empty() || seeds < 1 || st.samples == 0) throw ConfigError("sweep needs n values, seeds >= 1 and samples >= 1");
  for (int n : ns) {
    if (n < st.offset + 1 || n < 3) throw ConfigError("sweep n values must exceed the observable offset");
  }
  if (st.depth < 0 || st.offset < 1) throw ConfigError("sweep depth must be >= 0 and offset >= 1");
  if (!(st.delta > 0.0 && st.delta < 1.0)) throw ConfigError("sweep.delta must lie in (0, 1)");
  if (!(st.beta > 0.0) || st.j_scale < 0.0 || st.j_scale > 1.0 || st.h_scale < 0.0 || st.h_scale > 1.0) {
    throw ConfigError("sweep needs beta > 0 and coupling scales in [0, 1]");
  }
  const std::uint64_t master = ctx.stage_seed("fig-pinsker");
  ctx.note("sweeping " + std::to_string(ns.size() * static_cast<std::size_t>(seeds)) + " rows");
  const auto rows = in_stage("fig-pinsker", [&] { return fig_pinsker_sweep(ns, seeds, master, st, ctx.threads); });
  int failed = 0;
  for (const auto& r : rows) failed += r.status == "ok" ? 0 : 1;
  if (failed > 0) ctx.note(std::to_string(failed) + " rows failed; see the status column");
  in_stage("output", [&] {
    auto out = ctx.open("fig_pinsker.csv");
    write_fig_csv(out, rows);
    return 0;
  });
}

void run_bounds(Context& ctx) {
  const json& cfg = ctx.config;
  check_keys(cfg, {"seed", "model", "bounds"}, "config");
  if (!cfg.contains("model")) throw ConfigError("bounds needs a 'model'");
  ModelSpec spec = load_model_ref(ctx, cfg.at("model"));
  const json& b = object_or_empty(cfg, "bounds");
  check_keys(b, {"betas", "grid", "random_points"}, "bounds");
  const auto betas = get_or<std::vector<double>>(b, "betas", {spec.model.beta()}, "bounds");
  const int grid = get_or<int>(b, "grid", 5, "bounds");
  const int random_points = get_or<int>(b, "random_points", 200, "bounds");
  if (!spec.model.commuting()) throw ConfigError("bounds: the lower bound needs a commuting basis");
  if (!orthogonal_traceless_basis(spec.model)) throw ConfigError("bounds: the basis must be orthogonal and traceless");
  if (betas.empty() || std::any_of(betas.begin(), betas.end(), [](double x) { return !(x > 0.0); })) {
    throw ConfigError("bounds.betas must be positive");
  }
  if (grid < 2 || random_points < 0) throw ConfigError("bounds.grid must be >= 2 and random_points >= 0");
  const std::uint64_t seed = ctx.stage_seed("bounds");
  const auto report =
      in_stage("bounds", [&] { return commuting_bounds(spec.model, betas, grid, random_points, seed, ctx.threads); });
  int violations = 0;
  for (const auto& r : report.rows) violations += r.sandwich_ok ? 0 : 1;
  in_stage("output", [&] {
    auto csv = ctx.open("bounds.csv");
    csv << "beta,point,lambda_min,lambda_max,lower_bound,upper_bound,condition,decay_fitted,sandwich_ok\n";
    for (const auto& r : report.rows) {
      csv << format_double(r.beta) << ',' << r.point << ',' << format_double(r.lambda_min) << ','
          << format_double(r.lambda_max) << ',' << format_double(r.lower_bound) << ','
          << format_double(r.upper_bound) << ',' << format_double(r.condition) << ',' << (r.decay_fitted ? 1 : 0)
          << ',' << (r.sandwich_ok ? 1 : 0) << '\n';
    }
    json summary = {{"betas", betas},
                    {"contraction", report.contraction},
                    {"rows", report.rows.size()},
                    {"sandwich_violations", violations}};
    summary["condition_exponent"] =
        report.condition_exponent ? json(*report.condition_exponent) : json(nullptr);
    auto out = ctx.open("bounds.json");
    out << summary.dump(2) << '\n';
    return 0;
  });
  ctx.note("sandwich violations: " + std::to_string(violations));
}

void run_tc_check(Context& ctx) {
  const json& cfg = ctx.config;
  check_keys(cfg, {"seed", "tc"}, "config");
  const json& tc = object_or_empty(cfg, "tc");
  check_keys(tc, {"reference", "ensemble", "alpha", "mode", "loc", "beta_fraction"}, "tc");
  const json& ref = object_or_empty(tc, "reference");
  const json& ens = object_or_empty(tc, "ensemble");
  check_keys(ens, {"count", "strength"}, "tc.ensemble");
  const int count = get_or<int>(ens, "count", 100, "tc.ensemble");
  const double strength = get_or<double>(ens, "strength", 0.2, "tc.ensemble");
  if (count < 1 || !(strength > 0.0 && strength <= 1.0)) throw ConfigError("tc.ensemble needs count >= 1, strength in (0, 1]");
  const std::string mode = ctx.w1_mode.value_or(get_or<std::string>(tc, "mode", "hamming", "tc"));
  W1Options w1;
  if (mode == "hamming") {
    w1.mode = W1Mode::hamming;
  } else if (mode == "loc") {
    w1.mode = W1Mode::loc;
  } else {
    throw ConfigError("w1 mode must be 'hamming' or 'loc'");
  }
  const json& loc = object_or_empty(tc, "loc");
  check_keys(loc, {"k", "g"}, "tc.loc");
  w1.loc.k = get_or<int>(loc, "k", 1, "tc.loc");
  w1.loc.g = get_or<double>(loc, "g", 1.0, "tc.loc");
  if (w1.loc.k < 1 || !(w1.loc.g > 0.0)) throw ConfigError("tc.loc needs k >= 1 and g > 0");

  std::optional<DensityOperator> sigma;
  std::vector<DensityOperator> states;
  double rhs = 0.0;
  json ref_info;
  const std::uint64_t seed = ctx.stage_seed("tc-ensemble");
  if (ref.contains("product")) {
    check_keys(ref, {"product"}, "tc.reference");
    const json& p = ref.at("product");
    check_keys(p, {"n", "p"}, "tc.reference.product");
    const int n = get_req<int>(p, "n", "tc.reference.product");
    const double prob = get_req<double>(p, "p", "tc.reference.product");
    if (n < 1 || n > 10 || !(prob > 0.0 && prob < 1.0)) throw ConfigError("product reference needs 1 <= n <= 10, p in (0, 1)");
    const std::optional<double> alpha = ctx.tc_alpha ? ctx.tc_alpha : tc.contains("alpha")
                                                                          ? std::optional<double>(get_req<double>(tc, "alpha", "tc"))
                                                                          : std::nullopt;
    if (!alpha || !(*alpha > 0.0)) throw ConfigError("product reference needs a TC constant alpha > 0 (tc.alpha or --tc-alpha)");
    Matrix tau = Matrix::Zero(2, 2);
    tau(0, 0) = 1.0 - prob;
    tau(1, 1) = prob;
    const std::vector<Matrix> factors(static_cast<std::size_t>(n), tau);
    sigma = DensityOperator::product(factors, SiteSystem(n));
    states = in_stage("ensemble", [&] { return perturbed_product_states(tau, n, count, strength, seed); });
    rhs = 1.0 / std::sqrt(2.0 * *alpha);
    ref_info = {{"kind", "product"}, {"n", n}, {"p", prob}, {"alpha", *alpha}};
  } else if (ref.contains("model")) {
    check_keys(ref, {"model"}, "tc.reference");
    ModelSpec spec = load_model_ref(ctx, ref.at("model"));
    if (!spec.lambda) throw ConfigError("tc reference model needs lambda");
    std::vector<LocalOperator> decomposition;
    for (int i = 0; i < spec.model.num_params(); ++i) {
      LocalOperator op = spec.model.basis()[static_cast<std::size_t>(i)];
      op.matrix *= (*spec.lambda)(i);
      decomposition.push_back(std::move(op));
    }
    if (!w1.loc.contains(decomposition, spec.model.system())) {
      throw ConfigError("reference Hamiltonian is not in the (k, g) class of tc.loc");
    }
    double beta = spec.model.beta();
    TcConstant constant{};
    try {
      if (tc.contains("beta_fraction")) {
        beta = get_req<double>(tc, "beta_fraction", "tc") * tc_constant_local(w1.loc.k, w1.loc.g, 0.0).beta_c;
      }
      constant = tc_constant_local(w1.loc.k, w1.loc.g, beta);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("tc: ") + e.what());
    }
    const GibbsModel model = spec.model.with_beta(beta);
    sigma = gibbs_state(model, *spec.lambda);
    states = in_stage("ensemble", [&] { return perturbed_states(*sigma, count, strength, seed); });
    rhs = constant.tc_factor;
    ref_info = {{"kind", "model"}, {"beta", beta}, {"beta_c", constant.beta_c}, {"tc_factor", constant.tc_factor}};
  } else {
    throw ConfigError("tc.reference needs 'product' or 'model'");
  }
  const auto report = in_stage("tc-check", [&] { return tc_verify(*sigma, states, rhs, w1, ctx.threads); });
  in_stage("output", [&] {
    json recs = json::array();
    for (const auto& r : report.records) {
      recs.push_back({{"w1_lower", r.w1_lower},
                      {"w1_upper", number_or_null(r.w1_upper)},
                      {"D", r.divergence},
                      {"tc_rhs", r.tc_rhs},
                      {"violated", r.violated}});
    }
    json out_json = {{"reference", ref_info}, {"mode", mode}, {"rhs_factor", rhs},
                     {"violations", report.violations}, {"records", recs}};
    auto out = ctx.open("tc_report.json");
    out << out_json.dump(2) << '\n';
    return 0;
  });
  ctx.note("certified violations: " + std::to_string(report.violations) + " of " + std::to_string(count));
}

void run_shadows(Context& ctx) {
  const json& cfg = ctx.config;
  check_keys(cfg, {"seed", "model", "shadows"}, "config");
  if (!cfg.contains("model")) throw ConfigError("shadows needs a 'model'");
  ModelSpec spec = load_model_ref(ctx, cfg.at("model"));
  if (!spec.lambda) throw ConfigError("shadows needs model.lambda");
  const json& sh = object_or_empty(cfg, "shadows");
  check_keys(sh, {"k", "eps", "delta", "samples", "batches", "observables", "calibration_trials"}, "shadows");
  std::vector<PauliString> observables;
  try {
    if (sh.contains("observables")) {
      for (const auto& t : sh.at("observables").get<std::vector<std::string>>()) observables.push_back(PauliString::parse(t));
    } else {
      for (const auto& op : spec.model.basis()) {
        if (!op.pauli) throw ConfigError("shadows needs a Pauli basis or an explicit observable list");
        observables.push_back(*op.pauli);
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("shadows.observables: ") + e.what());
  }
  if (observables.empty()) throw ConfigError("shadows.observables is empty");
  int k_obs = 1;
  for (const auto& p : observables) {
    k_obs = std::max(k_obs, p.weight());
    for (int s : p.support()) {
      if (s >= spec.model.num_sites()) throw ConfigError("observable " + p.str() + " acts outside the model");
    }
  }
  const int k = get_or<int>(sh, "k", k_obs, "shadows");
  const int m = static_cast<int>(observables.size());
  const double eps = get_or<double>(sh, "eps", 0.1, "shadows");
  const double delta = get_or<double>(sh, "delta", default_failure_probability(spec.model.num_sites()), "shadows");
  const int trials = get_or<int>(sh, "calibration_trials", 0, "shadows");
  ShadowScheme scheme;
  std::size_t n_snap = 0;
  try {
    n_snap = get_or<std::size_t>(sh, "samples", plan_samples(k, m, eps, delta), "shadows");
    scheme.batches = get_or<int>(sh, "batches", plan_batches(m, delta), "shadows");
    scheme.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("shadows: ") + e.what());
  }
  if (n_snap == 0 || trials < 0) throw ConfigError("shadows needs samples >= 1 and calibration_trials >= 0");
  scheme.seed = ctx.stage_seed("shadows");
  const auto state = gibbs_state(spec.model, *spec.lambda);
  const auto batch = in_stage("sampling", [&] { return sample(state, scheme, n_snap, ctx.threads, "model"); });
  const auto report = in_stage("estimation", [&] { return estimate(batch, observables); });
  json summary = {{"k", k}, {"observables", m}, {"eps", eps}, {"delta", delta},
                  {"samples", n_snap}, {"batches", scheme.batches}};
  json errs = json::array();
  double worst = 0.0;
  for (int i = 0; i < m; ++i) {
    const double exact = (state.matrix() * embed_pauli(observables[static_cast<std::size_t>(i)], spec.model.system()))
                             .trace()
                             .real();
    worst = std::max(worst, std::abs(report.estimates(i) - exact));
  }
  summary["linf_error"] = worst;
  if (trials > 0) {
    if (sh.contains("observables")) throw ConfigError("calibration uses the model basis; drop shadows.observables");
    const std::uint64_t cal_seed = ctx.stage_seed("calibration");
    const auto cal = in_stage("calibration", [&] {
      return shadow_calibration(spec.model, *spec.lambda, k, eps, delta, trials, cal_seed, ctx.threads);
    });
    summary["calibration"] = {{"trials", cal.trials},
                              {"failures", cal.failures},
                              {"failure_rate", cal.failure_rate},
                              {"max_error", cal.max_error}};
  }
  in_stage("output", [&] {
    auto b = ctx.open("shadows.txt");
    write_batch(b, batch);
    auto e = ctx.open("estimates.csv");
    write_report_csv(e, report, observables);
    auto s = ctx.open("shadows.json");
    s << summary.dump(2) << '\n';
    return 0;
  });
}

}  // namespace

int run_experiment(const RunRequest& request, std::ostream& log, std::ostream& err) {
  Context ctx;
  ctx.log = &log;
  ctx.threads = std::max(1, request.threads);
  const std::string started = utc_now();
  static const std::set<std::string> known = {"reconstruct", "verify", "fig-pinsker", "bounds", "tc-check", "shadows"};
  try {
    if (!known.count(request.subcommand)) throw ConfigError("unknown subcommand '" + request.subcommand + "'");
    if (request.config.empty()) throw ConfigError("--config is required");
    if (!fs::exists(request.config)) throw ConfigError("config file not found: " + request.config.string());
    json raw;
    try {
      raw = json::parse(read_text(request.config));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ctx.subcommand = request.subcommand;
    ctx.config_dir = fs::absolute(request.config).parent_path();
    std::optional<std::uint64_t> seed = request.seed;
    ctx.tc_alpha = request.tc_alpha;
    ctx.w1_mode = request.w1_mode;
    if (raw.is_object() && raw.value("format", "") == "qmaxent-manifest") {
      // Replay: reuse the recorded config, directory, seed and flags.
      if (raw.at("subcommand") != request.subcommand) {
        throw ConfigError("manifest was recorded for '" + raw.at("subcommand").get<std::string>() + "'");
      }
      ctx.config = raw.at("config");
      ctx.config_dir = raw.at("config_dir").get<std::string>();
      if (!seed) seed = raw.at("master_seed").get<std::uint64_t>();
      const auto& flags = raw.at("flags");
      if (!ctx.tc_alpha && !flags.at("tc_alpha").is_null()) ctx.tc_alpha = flags.at("tc_alpha").get<double>();
      if (!ctx.w1_mode && !flags.at("w1_mode").is_null()) ctx.w1_mode = flags.at("w1_mode").get<std::string>();
    } else {
      ctx.config = raw;
    }
    if (!ctx.config.is_object()) throw ConfigError("config must be a JSON object");
    if (!seed) {
      if (!ctx.config.contains("seed")) throw ConfigError("a master seed is required (config 'seed' or --seed)");
      seed = get_req<std::uint64_t>(ctx.config, "seed", "config");
    }
    ctx.seed = *seed;
    if (ctx.tc_alpha && !(*ctx.tc_alpha > 0.0)) throw ConfigError("--tc-alpha must be > 0");
    if (ctx.w1_mode && *ctx.w1_mode != "hamming" && *ctx.w1_mode != "loc") {
      throw ConfigError("--w1-mode must be hamming or loc");
    }
    if (request.out_dir.empty()) throw ConfigError("--out is required");
    ctx.out_dir = request.out_dir;
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + ctx.out_dir.string() + ": " + ec.message());

    if (ctx.subcommand == "reconstruct") {
      run_reconstruct(ctx);
    } else if (ctx.subcommand == "verify") {
      run_verify(ctx);
    } else if (ctx.subcommand == "fig-pinsker") {
      run_fig_pinsker(ctx);
    } else if (ctx.subcommand == "bounds") {
      run_bounds(ctx);
    } else if (ctx.subcommand == "tc-check") {
      run_tc_check(ctx);
    } else {
      run_shadows(ctx);
    }

    json manifest = {
        {"format", "qmaxent-manifest"},
        {"tool", "qmaxent"},
        {"version", kVersion},
        {"subcommand", ctx.subcommand},
        {"config_hash", hex64(fnv1a(ctx.config.dump()))},
        {"config", ctx.config},
        {"config_dir", ctx.config_dir.string()},
        {"master_seed", ctx.seed},
        {"threads", ctx.threads},
        {"flags",
         {{"tc_alpha", ctx.tc_alpha ? json(*ctx.tc_alpha) : json(nullptr)},
          {"w1_mode", ctx.w1_mode ? json(*ctx.w1_mode) : json(nullptr)}}},
        {"stage_seeds", ctx.stage_seeds},
        {"started_at", started},
        {"finished_at", utc_now()},
    };
    ctx.outputs.push_back("manifest.json");
    manifest["outputs"] = ctx.outputs;
    std::ofstream mout(ctx.out_dir / "manifest.json", std::ios::binary);
    if (!mout) throw StageError("output", "cannot write manifest.json");
    mout << manifest.dump(2) << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "[config] " << e.what() << '\n';
    return kExitConfig;
  } catch (const StageError& e) {
    err << e.what() << '\n';
    return kExitStage;
  } catch (const std::exception& e) {
    err << "[internal] " << e.what() << '\n';
    return kExitStage;
  }
}

}  // namespace qmaxent
