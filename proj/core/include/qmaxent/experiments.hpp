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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qmaxent/classical_chain.hpp"
#include "qmaxent/gibbs_engine.hpp"
#include "qmaxent/maxent_solver.hpp"
#include "qmaxent/wasserstein.hpp"

namespace qmaxent {

inline constexpr const char* kVersion = "0.1.0";

/// Malformed or inconsistent configuration. Raised before any computation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure inside a pipeline stage, tagged with the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitStage = 3 };

// ---------------------------------------------------------------------------
// File formats

/// Model file:
///   {"beta": 1.0, "sites": {"n": 3, "d": 2},
///    "basis": ["Z1*Z2", {"support": [1, 2], "re": [[...]], "im": [[...]]}],
///    "lambda": [...]}
/// Dense supports are 1-indexed like Pauli text. "lambda" is optional.
struct ModelSpec {
  GibbsModel model;
  std::optional<Vector> lambda;
};
ModelSpec parse_model(std::string_view json_text);
ModelSpec read_model(const std::filesystem::path& path);
void write_model(std::ostream& out, const GibbsModel& model, const std::optional<Vector>& lambda);

/// Chain file: {"n": 5, "beta": 1.0, "boundary": "open", "J": [...], "h": [...]}.
ChainSpec parse_chain(std::string_view json_text);
void write_chain(std::ostream& out, const ChainSpec& spec);

// ---------------------------------------------------------------------------
// Pipeline pieces, exposed for the CLI and the acceptance suite.

/// Random nearest-neighbour chain with J_i ~ U[-j_scale, j_scale] and
/// h_i ~ U[-h_scale, h_scale].
ChainSpec random_chain(int n, double beta, Boundary boundary, double j_scale, double h_scale, std::uint64_t seed);

/// One row of the windowed-observable experiment: sample a random chain,
/// reconstruct it from empirical bond and field means, and compare
/// n^{-1} sum_i U Z_i Z_{i+offset} U^dagger between truth and reconstruction.
struct FigSettings {
  double beta = 1.0;
  std::size_t samples = 1000;
  int depth = 3;
  int offset = 2;
  double delta = 0.05;  // failure probability of the Hoeffding data bound
  Boundary boundary = Boundary::open;
  double j_scale = 1.0;
  double h_scale = 0.0;
  SolverOptions solver;
  std::optional<double> tc_alpha;
};

struct FigRow {
  int n = 0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  double d_sym_bound = 0.0;
  double observable_error = 0.0;
  /// ||O||_inf sqrt(2 d_sym_bound).
  double pinsker_bound = 0.0;
  double d_sym_exact = 0.0;
  double pinsker_exact = 0.0;
  /// Lip upper bound of O times sqrt(d_sym_exact / (2 alpha)); NaN without alpha.
  double tc_predicted = 0.0;
  double data_eps = 0.0;
  Halting halting = Halting::max_iters;
  int iterations = 0;
  std::string status = "ok";
};

FigRow fig_pinsker_row(int n, std::uint64_t row_seed, const FigSettings& settings, int threads = 1);
/// Rows in (n, seed index) order; row seeds are derive_seed(master, "fig-pinsker", n * 2^20 + s).
std::vector<FigRow> fig_pinsker_sweep(const std::vector<int>& ns, int seeds, std::uint64_t master,
                                      const FigSettings& settings, int threads = 1);
void write_fig_csv(std::ostream& out, const std::vector<FigRow>& rows);

struct VerifyItem {
  std::string name;
  bool pass = false;
  double value = 0.0;      // worst observed deviation
  double tolerance = 0.0;
};
struct VerifyOptions {
  int pairs = 8;
  std::uint64_t seed = 0;
  /// Test hook: scales the spectral Hessian so the sandwich check must fail.
  bool corrupt_hessian = false;
};
/// Entropy identity, gradient and Hessian finite differences, Hessian
/// sandwich and Pinsker checks around lambda.
std::vector<VerifyItem> verify_model(const GibbsModel& model, const Vector& lambda, const VerifyOptions& opts);

struct BoundsRow {
  double beta = 0.0;
  int point = 0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double condition = 0.0;
  bool decay_fitted = false;
  bool sandwich_ok = false;
};
struct BoundsReport {
  std::vector<BoundsRow> rows;
  std::vector<double> contraction;  // max_x c(x, beta) per beta
  /// Slope of log(max condition number) against beta; set with >= 2 betas.
  std::optional<double> condition_exponent;
};
/// Hessian spectrum against the commuting lower bound and the decay upper
/// bound over a parameter grid. Requires a commuting, orthogonal, traceless
/// basis. The grid has `grid` points per coordinate when m <= 3, otherwise
/// `random_points` uniform draws plus 0.
BoundsReport commuting_bounds(const GibbsModel& model, const std::vector<double>& betas, int grid, int random_points,
                              std::uint64_t seed, int threads = 1);

/// Perturbed states rho = (1 - t) sigma + t R with t ~ U[0, strength] and R a
/// random full-rank density; for product references each qubit is perturbed
/// separately and the result is a product state.
std::vector<DensityOperator> perturbed_product_states(const Matrix& site_state, int n, int count, double strength,
                                                      std::uint64_t seed);
std::vector<DensityOperator> perturbed_states(const DensityOperator& sigma, int count, double strength,
                                              std::uint64_t seed);

struct CalibrationResult {
  std::size_t samples = 0;
  int batches = 0;
  int trials = 0;
  int failures = 0;
  double failure_rate = 0.0;
  double max_error = 0.0;  // worst l_inf error over trials
};
/// Repeats plan, sample and estimate `trials` times and counts l_inf errors
/// above eps. The Pauli basis of `model` is the observable list.
CalibrationResult shadow_calibration(const GibbsModel& model, const Vector& lambda, int k, double eps, double delta,
                                     int trials, std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// Command entry point

struct RunRequest {
  std::string subcommand;  // reconstruct | verify | fig-pinsker | bounds | tc-check | shadows
  std::filesystem::path config;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::optional<double> tc_alpha;
  std::optional<std::string> w1_mode;
};

/// Runs one subcommand and writes its outputs plus manifest.json into
/// out_dir. A manifest may be passed as the config to replay a run. Returns
/// an ExitCode; diagnostics go to `err`, progress to `log`.
int run_experiment(const RunRequest& request, std::ostream& log, std::ostream& err);

}  // namespace qmaxent
