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

#include <cstddef>
#include <span>
#include <vector>

#include "qpurify/noise.hpp"
#include "qpurify/quantum_core.hpp"

namespace qpurify {

/// Per-channel record increments dR and their running integral R(t).
class MeasurementRecord {
 public:
  MeasurementRecord(int channels, double dt);

  void append(std::span<const double> increments);

  int channels() const { return static_cast<int>(increments_.size()); }
  std::size_t length() const { return increments_.empty() ? 0 : increments_[0].size(); }
  double dt() const { return dt_; }
  const std::vector<double>& increments(int channel) const { return increments_.at(channel); }
  const std::vector<double>& running_integral(int channel) const {
    return integral_.at(channel);
  }
  /// R at the end of the record (0 for an empty record).
  double integral(int channel) const;

 private:
  double dt_;
  std::vector<std::vector<double>> increments_;
  std::vector<std::vector<double>> integral_;
};

struct StepOutput {
  DensityMatrix state;
  std::vector<double> record;  // dR per channel, from the pre-step state
  bool clipped = false;        // an eigenvalue below -1e-12 was repaired
};

/// One step of the diffusive SME driven by `wiener` (one increment per
/// channel, variance dt). The update is written in measurement-operator form
///
///   rho' = M rho M / tr(M rho M),  M = exp(sum_r -2g X_r^2 dt + sqrt(2g) X_r dR_r),
///   dR_r = sqrt(8g) tr(X_r rho) dt + dW_r,
///
/// which agrees with  d rho = sum_r 2g D[X_r] rho dt + sqrt(2g) dW_r H[X_r] rho
/// to first order and keeps rho positive. The result is Hermitized,
/// renormalised and has any negative eigenvalue clipped.
StepOutput sme_step(const DensityMatrix& rho, std::span<const Observable> observables,
                    double strength, double dt, std::span<const double> wiener,
                    std::size_t step_index = 0);

/// Same step, drawing dW_r from noise[r].
StepOutput sme_step(const DensityMatrix& rho, std::span<const Observable> observables,
                    double strength, double dt, std::span<NoiseSource> noise,
                    std::size_t step_index = 0);

/// Sets negative eigenvalues to zero and restores unit trace. Returns true
/// when the most negative eigenvalue was below -1e-12 (round-off excluded).
bool enforce_positivity(CMatrix& rho);

struct LinearSolution {
  DensityMatrix unnormalized;  // rho~(R, t)
  double norm;                 // N = tr rho~
  DensityMatrix normalized;    // rho~ / N
};

/// Closed-form linear trajectory from I/D for diagonal X:
/// rho~ = exp(-4 g X^2 t) exp(2 sqrt(2g) X R) / D.
LinearSolution linear_solution(double record, double t, double strength,
                               const Observable& x);

/// P(R, t) = N exp(-R^2 / 2t) / sqrt(2 pi t): an equal-weight mixture of
/// Gaussians with means 2 sqrt(2g) x_i t and variance t.
double record_probability_density(double record, double t, double strength,
                                  const Observable& x);

/// Impurity of diag(p) with p_i proportional to exp(log_weights_i), computed
/// as sum_i p_i (1 - p_i) without cancellation near pure states.
double impurity_of_log_weights(std::span<const double> log_weights);

struct RecordSample {
  double record;  // R(t)
  DensityMatrix state;
  double impurity;
};

/// Draws R(t) exactly from P(R, t) for a bare measurement of diagonal X
/// started in I/D, and returns the conditional state.
RecordSample exact_record_sampler(double strength, double t, const Observable& x,
                                  NoiseSource& noise);

/// Impurity only; the hot path for large sample counts.
double exact_record_impurity(double strength, double t, const Observable& x,
                             NoiseSource& noise);

/// n independent qubits each measured with sigma_z at rate kappa, started in
/// I/2^n: 1 - prod_r (1 - L_r) with each L_r drawn exactly. One draw pair per
/// qubit from `noise`.
double exact_register_impurity(int qubits, double strength_kappa, double t,
                               NoiseSource& noise);

}  // namespace qpurify
