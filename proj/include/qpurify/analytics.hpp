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

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace qpurify {

/// Bloch vector of a qubit start state.
struct QubitInitialState {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  QubitInitialState() = default;
  QubitInitialState(double x, double y, double z);
  /// 1 - tr(rho0^2) = (1 - |r|^2) / 2.
  double impurity() const;
};

// No-feedback averages over all records from I/D, by adaptive quadrature.

/// (e^{-g t} / sqrt(8 pi t)) int e^{-R^2/2t} / cosh(sqrt(2g) R) dR.
double bare_qubit_quadrature(double strength, double t);

/// int P(R, t) L[rho(R, t)] dR for J_z on a D-level system.
double bare_qudit_quadrature(int dim, double strength, double t);

/// Independent qubits each measured with sigma_z at rate kappa:
/// 1 - (1 - L_1)^n with L_1 the qubit value at g = 4 kappa.
double bare_register_quadrature(int qubits, double strength_kappa, double t);

/// (e^{-g t} L0 / sqrt(2 pi t)) int e^{-R^2/2t} / (cosh s + z0 sinh s) dR,
/// s = sqrt(2g) R. Requires |z0| < 1.
double jordan_korotkov_quadrature(const QubitInitialState& initial, double strength, double t);

// Long-time forms. All refuse g t < 1 (register: 4 kappa t < 1).

/// pi e^{-g t} / sqrt(16 pi g t).
double bare_qubit_asymptote(double strength, double t);
/// 2 (D - 1) / D times the qubit form.
double bare_qudit_asymptote(int dim, double strength, double t);
/// Qubit form times 2 L0 / sqrt(1 - z0^2).
double jordan_korotkov_asymptote(const QubitInitialState& initial, double strength, double t);
/// n pi e^{-4 kappa t} / (8 sqrt(pi kappa t)); warns when 4 kappa t < 2.
double bare_register_asymptote(int qubits, double strength_kappa, double t);

// Deterministic feedback decay.

/// L0 e^{-2 g t}.
double feedback_curve_qubit(double l0, double strength, double t);
/// L0 e^{-(2/3)(D+1) g t}.
double feedback_curve_qudit_lower(int dim, double l0, double strength, double t);
/// L0 e^{-8 kappa n t / (2^n - 1)}.
double feedback_curve_register_lower(int qubits, double l0, double strength_kappa, double t);

struct SpeedupBounds {
  double qudit_lower;  // (2/3)(D+1)
  double qudit_upper;  // D^2 / 2
  std::optional<double> register_lower;  // 2n / (D-1)
  std::optional<double> register_upper;  // 2n
};

SpeedupBounds speedup_bounds(int dim, std::optional<int> qubits = std::nullopt);

/// Finite-time qubit speed-up from
///   1/S = 1/2 + ln sqrt(16 pi g t_b) / (2 g t_b) - ln(2 pi) / (2 g t_b).
/// Warns when g t_b <= 1.
double speedup_ratio_qubit(double t_bare, double strength);

enum class CurveKind { kQuadrature, kAsymptotic, kDeterministicFeedback, kBound, kSimulated };

std::string_view to_string(CurveKind kind);

/// Sampled <L(t)>. When `evaluator` is set, time_to_impurity refines the
/// interpolated crossing on it.
struct ImpurityCurve {
  std::vector<double> times;
  std::vector<double> values;
  CurveKind kind = CurveKind::kQuadrature;
  std::function<double(double)> evaluator;

  static ImpurityCurve sample(CurveKind kind, std::function<double(double)> f,
                              std::vector<double> times, bool keep_evaluator = true);
};

/// Uniform grid of `count` points on [t0, t1].
std::vector<double> linear_grid(double t0, double t1, int count);

/// First time the curve falls to `target`, interpolating log L linearly in t
/// on the bracketing segment, then bisecting on the evaluator (if any) to a
/// relative time tolerance of 1e-6. Throws NoCrossingError when no segment
/// brackets the target.
double time_to_impurity(const ImpurityCurve& curve, double target);

/// t_bare / t_fb at `target`.
double curve_speedup(const ImpurityCurve& feedback, const ImpurityCurve& bare, double target);

}  // namespace qpurify
