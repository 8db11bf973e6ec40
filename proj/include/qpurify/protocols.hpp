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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qpurify/noise.hpp"
#include "qpurify/quantum_core.hpp"

namespace qpurify {

enum class StrategyKind {
  kBare,
  kQubitUbb,
  kQuditUbb,
  kPermutationAveragedUbb,
  kRegisterBare,
  kRegisterUbb,
};

enum class PermutationPolicy { kFixed, kResampleEachStep };

std::string_view to_string(StrategyKind kind);
std::string_view to_string(PermutationPolicy policy);
std::optional<StrategyKind> parse_strategy_kind(std::string_view name);
std::optional<PermutationPolicy> parse_permutation_policy(std::string_view name);

/// How the measured observables are chosen at each step. Immutable; the
/// permutation stream is supplied per trajectory by the caller.
///
/// Feedback is applied in the Heisenberg picture: instead of rotating the
/// state, the measured observable is re-aligned before every step so that
/// its eigenbasis is unbiased with respect to the current eigenbasis of rho.
struct FeedbackStrategy {
  StrategyKind kind = StrategyKind::kBare;
  std::vector<Observable> base_observables;
  UnitaryTransform transform = UnitaryTransform::identity(2);
  PermutationPolicy permutation_policy = PermutationPolicy::kFixed;
  std::vector<int> fixed_permutation;  // empty means identity
  int register_qubits = 0;             // nonzero for register kinds

  int dimension() const { return transform.dim(); }
  int channels() const { return static_cast<int>(base_observables.size()); }
  bool uses_feedback() const;
  bool samples_permutations() const;

  static FeedbackStrategy bare(int dim);
  static FeedbackStrategy qubit_ubb();
  static FeedbackStrategy qudit_ubb(const UnitaryTransform& transform);
  static FeedbackStrategy permutation_averaged_ubb(const UnitaryTransform& transform,
                                                   PermutationPolicy policy,
                                                   std::vector<int> fixed_permutation = {});
  static FeedbackStrategy register_bare(int qubits);
  static FeedbackStrategy register_ubb(int qubits, const UnitaryTransform& transform,
                                       PermutationPolicy policy,
                                       std::vector<int> fixed_permutation = {});
};

/// Uniformly random permutation of 0..dim-1 drawn from `noise`.
std::vector<int> random_permutation(int dim, NoiseSource& noise);

/// Observables for the next step. `permutation_noise` is required when the
/// strategy resamples permutations.
std::vector<Observable> choose_observables(const FeedbackStrategy& strategy,
                                           const DensityMatrix& rho,
                                           NoiseSource* permutation_noise = nullptr);

/// Variant reusing an eigensystem already computed for rho.
std::vector<Observable> choose_observables(const FeedbackStrategy& strategy,
                                           const EigenDecomposition& eig,
                                           NoiseSource* permutation_noise = nullptr);

/// -8 g dt tr(Xc rho Xc rho) = -8 g dt sum_ij |Xc_ij|^2 l_i l_j in rho's
/// eigenbasis. Xc must be traceless with zero diagonal in that basis
/// (unbiased), otherwise the stochastic part of dL does not vanish and a
/// ContractViolation is thrown.
double step_dL(const DensityMatrix& rho, const Observable& xcheck, double strength,
               double dt);

/// Sum of step_dL over several simultaneously measured channels.
double step_dL(const DensityMatrix& rho, std::span<const Observable> xchecks,
               double strength, double dt);

/// -(2/3)(D+1) g dt L[flat_state(D, delta)].
double flat_state_dL(int dim, double delta, double strength, double dt);

/// dL of the binary state with its two eigenvalues placed at the index pair
/// maximising |Xc_mn|^2: -8 g dt max|Xc_mn|^2 L[rho_2].
double binary_state_dL(int dim, double delta, const Observable& xcheck,
                       double strength, double dt);

/// Upper bound on max_mn |Xc_mn|^2 over unbiased transforms of J_z:
/// D^2/16 (even D), D^2/16 - 1/8 + 1/(16 D^2) (odd D).
double max_element_bound(int dim);

/// Per-channel bound on max_mn |Xc_mn| for +-1 valued register observables.
double register_max_element_bound();

/// Brute-force max over sign patterns s of |sum_k s_k x_k|^2 / D^2 for the
/// given diagonal; the phase-aligned maximum of the bound. D <= 20.
double phase_aligned_maximum(std::span<const double> diagonal);

/// max_mn |Xc_mn|^2.
double max_element_squared(const Observable& xcheck);

/// Exact average over all D! permutations P_m of the per-step dL, summed over
/// the strategy's channels, with Xc_m = V P_m T X T^+ P_m^+ V^+. D <= 8.
double permutation_average_dL(const FeedbackStrategy& strategy, const DensityMatrix& rho,
                              double strength, double dt);

/// Most negative dL = -8 g dt sum_ij |Xc_ij|^2 l_p(i) l_p(j) over all
/// placements p of the given eigenvalues on the basis of Xc. D <= 8.
double max_permuted_dL(std::span<const double> eigenvalues, const Observable& xcheck,
                       double strength, double dt);

}  // namespace qpurify
