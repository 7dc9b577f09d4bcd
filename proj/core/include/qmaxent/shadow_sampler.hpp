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

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qmaxent/operator_core.hpp"

namespace qmaxent {

/// Randomized single-qubit Pauli measurements with median-of-means
/// post-processing. K must be odd.
struct ShadowScheme {
  int batches = 9;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Measurement record. Basis letters are 'X', 'Y', 'Z'; outcome true means -1.
struct ShadowBatch {
  int sites = 0;
  ShadowScheme scheme;
  std::string state_id;
  std::vector<char> bases;          // size() * sites, row-major
  std::vector<std::uint8_t> minus;  // same layout, 1 for -1

  std::size_t size() const { return sites == 0 ? 0 : bases.size() / static_cast<std::size_t>(sites); }
  char basis(std::size_t snapshot, int site) const {
    return bases[snapshot * static_cast<std::size_t>(sites) + static_cast<std::size_t>(site)];
  }
  int outcome(std::size_t snapshot, int site) const {
    return minus[snapshot * static_cast<std::size_t>(sites) + static_cast<std::size_t>(site)] ? -1 : 1;
  }
};

struct EstimateReport {
  Vector estimates;
  Vector std_errors;
  std::size_t samples_used = 0;
  double eps = 0.0;    // planned accuracy, 0 if unplanned
  double delta = 0.0;  // planned failure probability, 0 if unplanned
};

inline constexpr double kShadowConstant = 34.0;

/// N = ceil(C 4^k log(2M/delta) / eps^2).
std::size_t plan_samples(int k, int observables, double eps, double delta, double constant = kShadowConstant);
/// K = 2 ceil(log(2M/delta)) + 1.
int plan_batches(int observables, double delta);
/// Failure probability used when none is given: 1/n^2 (1/2 for n = 1).
double default_failure_probability(int sites);

/// Draws N snapshots of a qubit state. Snapshots are generated in fixed-size
/// chunks with independent derived seeds, so the batch does not depend on
/// `threads`.
ShadowBatch sample(const DensityOperator& state, const ShadowScheme& scheme, std::size_t n_snapshots,
                   int threads = 1, std::string state_id = {});

/// Median of K batch means of the Pauli snapshot estimator.
EstimateReport estimate(const ShadowBatch& batch, const std::vector<PauliString>& observables);
EstimateReport estimate(const ShadowBatch& batch, const std::vector<LocalOperator>& observables);

/// Single-snapshot estimator value for one Pauli string.
double snapshot_value(const ShadowBatch& batch, std::size_t snapshot, const PauliString& p);

using SpinConfig = std::vector<std::int8_t>;

/// Empirical means of diagonal Pauli strings over +-1 configurations.
EstimateReport estimate_classical(const std::vector<SpinConfig>& samples, const std::vector<PauliString>& observables);

/// Text format: one JSON header line, then "bases<TAB>outcomes" per snapshot
/// with outcomes written as '+'/'-'.
void write_batch(std::ostream& out, const ShadowBatch& batch);
ShadowBatch read_batch(std::istream& in);
/// CSV with columns observable,estimate,std_error.
void write_report_csv(std::ostream& out, const EstimateReport& report, const std::vector<PauliString>& observables);

}  // namespace qmaxent
