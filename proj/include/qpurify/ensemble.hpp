// Copyright 2026 The qpurify Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qpurify/analytics.hpp"
#include "qpurify/protocols.hpp"
#include "qpurify/quantum_core.hpp"
#include "qpurify/sme.hpp"

namespace qpurify {

/// Environment variable read by default_worker_count().
inline constexpr const char* kWorkersEnv = "QPURIFY_WORKERS";

struct SimConfig {
  int dimension = 2;
  std::optional<int> register_qubits;  // set for register runs (dimension = 2^n)
  double strength = 1.0;               // gamma, or kappa for register runs
  double dt = 1e-4;
  double t_final = 1.0;
  std::uint64_t seed = 0;
  int n_traj = 1;
  std::vector<double> sample_times{0.0, 1.0};
  std::optional<DensityMatrix> initial_state;  // I/D when unset
  int workers = 0;                             // 0 means default_worker_count()
  bool retain_records = false;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
  std::size_t steps() const;
  /// Step index at which each sample time is recorded.
  std::vector<std::size_t> sample_steps() const;
};

struct TrajectoryResult {
  std::vector<double> sample_times;
  std::vector<double> impurity_values;
  std::size_t clip_count = 0;
  std::size_t steps = 0;
  DensityMatrix final_state = DensityMatrix::maximally_mixed(2);
  std::optional<MeasurementRecord> record;
};

struct EnsembleSummary {
  std::vector<double> sample_times;
  std::vector<double> mean_impurity;
  std::vector<double> stderr_impurity;
  int n_traj = 0;
  SimConfig config;
  StrategyKind strategy = StrategyKind::kBare;
  double clip_fraction = 0.0;  // clipped steps / total steps
};

/// QPURIFY_WORKERS if set (integer >= 1), otherwise the hardware thread
/// count. A malformed value throws InvalidArgument.
int default_worker_count();

/// One trajectory with noise streams keyed by (seed, index, channel).
/// NumericalFailure is rethrown carrying `index` and the failing step.
TrajectoryResult run_trajectory(const SimConfig& config, const FeedbackStrategy& strategy,
                                std::size_t index);

/// All trajectories, spread over worker threads, reduced in trajectory order
/// with compensated sums so the result does not depend on the worker count.
EnsembleSummary run_ensemble(const SimConfig& config, const FeedbackStrategy& strategy);

/// Mean curve as an interpolation-only ImpurityCurve.
ImpurityCurve to_curve(const EnsembleSummary& summary);

double measured_speedup(const ImpurityCurve& feedback, const ImpurityCurve& bare, double target);
double measured_speedup(const EnsembleSummary& feedback, const EnsembleSummary& bare,
                        double target);
double measured_speedup(const EnsembleSummary& feedback, const ImpurityCurve& bare,
                        double target);
double measured_speedup(const ImpurityCurve& feedback, const EnsembleSummary& bare,
                        double target);

}  // namespace qpurify
