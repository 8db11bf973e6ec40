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

#include "qpurify/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "qpurify/errors.hpp"

namespace qpurify {
namespace {

constexpr double kUnbiasedDiagonalTol = 1e-8;

std::vector<int> checked_permutation(std::vector<int> perm, int dim) {
  if (perm.empty()) {
    perm.resize(dim);
    std::iota(perm.begin(), perm.end(), 0);
  }
  if (static_cast<int>(perm.size()) != dim) {
    throw InvalidArgument("fixed permutation length differs from dimension");
  }
  permutation_operator(perm);  // validates bijectivity
  return perm;
}

void require_unbiased_transform(const UnitaryTransform& t) {
  if (!verify_unbiased(t, 1e-10)) {
    throw InvalidArgument("feedback transform is not unbiased");
  }
}

double impurity_unchecked(const DensityMatrix& rho) { return 1.0 - rho.purity(); }

}  // namespace

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kBare: return "bare";
    case StrategyKind::kQubitUbb: return "qubit-ubb";
    case StrategyKind::kQuditUbb: return "qudit-ubb";
    case StrategyKind::kPermutationAveragedUbb: return "permutation-averaged-ubb";
    case StrategyKind::kRegisterBare: return "register-bare";
    case StrategyKind::kRegisterUbb: return "register-ubb";
  }
  return "unknown";
}

std::string_view to_string(PermutationPolicy policy) {
  return policy == PermutationPolicy::kFixed ? "fixed" : "resample-each-step";
}

std::optional<StrategyKind> parse_strategy_kind(std::string_view name) {
  for (auto k : {StrategyKind::kBare, StrategyKind::kQubitUbb, StrategyKind::kQuditUbb,
                 StrategyKind::kPermutationAveragedUbb, StrategyKind::kRegisterBare,
                 StrategyKind::kRegisterUbb}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::optional<PermutationPolicy> parse_permutation_policy(std::string_view name) {
  if (name == "fixed") return PermutationPolicy::kFixed;
  if (name == "resample-each-step") return PermutationPolicy::kResampleEachStep;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Strategy construction

bool FeedbackStrategy::uses_feedback() const {
  return kind != StrategyKind::kBare && kind != StrategyKind::kRegisterBare;
}

bool FeedbackStrategy::samples_permutations() const {
  return (kind == StrategyKind::kPermutationAveragedUbb ||
          kind == StrategyKind::kRegisterUbb) &&
         permutation_policy == PermutationPolicy::kResampleEachStep;
}

FeedbackStrategy FeedbackStrategy::bare(int dim) {
  FeedbackStrategy s;
  s.kind = StrategyKind::kBare;
  s.base_observables = {jz_operator(dim)};
  s.transform = UnitaryTransform::identity(dim);
  return s;
}

FeedbackStrategy FeedbackStrategy::qubit_ubb() {
  FeedbackStrategy s;
  s.kind = StrategyKind::kQubitUbb;
  s.base_observables = {jz_operator(2)};
  s.transform = qubit_rotation_transform();
  return s;
}

FeedbackStrategy FeedbackStrategy::qudit_ubb(const UnitaryTransform& transform) {
  require_unbiased_transform(transform);
  FeedbackStrategy s;
  s.kind = StrategyKind::kQuditUbb;
  s.base_observables = {jz_operator(transform.dim())};
  s.transform = transform;
  return s;
}

FeedbackStrategy FeedbackStrategy::permutation_averaged_ubb(
    const UnitaryTransform& transform, PermutationPolicy policy,
    std::vector<int> fixed_permutation) {
  require_unbiased_transform(transform);
  FeedbackStrategy s;
  s.kind = StrategyKind::kPermutationAveragedUbb;
  s.base_observables = {jz_operator(transform.dim())};
  s.transform = transform;
  s.permutation_policy = policy;
  s.fixed_permutation = checked_permutation(std::move(fixed_permutation), transform.dim());
  return s;
}

FeedbackStrategy FeedbackStrategy::register_bare(int qubits) {
  FeedbackStrategy s;
  s.kind = StrategyKind::kRegisterBare;
  for (int r = 1; r <= qubits; ++r) s.base_observables.push_back(register_observable(qubits, r));
  s.transform = UnitaryTransform::identity(1 << qubits);
  s.register_qubits = qubits;
  return s;
}

FeedbackStrategy FeedbackStrategy::register_ubb(int qubits, const UnitaryTransform& transform,
                                                PermutationPolicy policy,
                                                std::vector<int> fixed_permutation) {
  if (transform.dim() != (1 << qubits)) {
    throw InvalidArgument("register transform must act on 2^n dimensions");
  }
  require_unbiased_transform(transform);
  FeedbackStrategy s = register_bare(qubits);
  s.kind = StrategyKind::kRegisterUbb;
  s.transform = transform;
  s.permutation_policy = policy;
  s.fixed_permutation = checked_permutation(std::move(fixed_permutation), transform.dim());
  return s;
}

std::vector<int> random_permutation(int dim, NoiseSource& noise) {
  std::vector<int> perm(dim);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = dim - 1; i > 0; --i) {
    const auto j = static_cast<int>(noise.index(static_cast<std::size_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

// ---------------------------------------------------------------------------
// Observable choice

std::vector<Observable> choose_observables(const FeedbackStrategy& strategy,
                                           const EigenDecomposition& eig,
                                           NoiseSource* permutation_noise) {
  if (!strategy.uses_feedback()) return strategy.base_observables;
  const int d = strategy.dimension();
  if (eig.basis.dim() != d) throw InvalidArgument("choose_observables: dimension mismatch");

  // Composite alignment W = V P T; every channel is W X W^dagger.
  CMatrix w = eig.basis.matrix();
  if (strategy.kind == StrategyKind::kPermutationAveragedUbb ||
      strategy.kind == StrategyKind::kRegisterUbb) {
    std::vector<int> perm;
    if (strategy.samples_permutations()) {
      if (!permutation_noise) {
        throw InvalidArgument("choose_observables: permutation stream required");
      }
      perm = random_permutation(d, *permutation_noise);
    } else {
      perm = strategy.fixed_permutation;
    }
    if (!perm.empty()) w = w * permutation_operator(perm).matrix();
  }
  w = w * strategy.transform.matrix();
  const UnitaryTransform align(assume_valid, std::move(w));

  std::vector<Observable> out;
  out.reserve(strategy.base_observables.size());
  for (const auto& x : strategy.base_observables) out.push_back(conjugate_observable(x, align));
  // conjugate_observable builds a fresh basis per call; share one so the
  // step recognises the channels as commuting.
  for (std::size_t c = 1; c < out.size(); ++c) {
    out[c] = Observable(assume_valid, out[c].matrix(),
                        Spectrum{out[c].spectrum()->values, out[0].spectrum()->basis});
  }
  return out;
}

std::vector<Observable> choose_observables(const FeedbackStrategy& strategy,
                                           const DensityMatrix& rho,
                                           NoiseSource* permutation_noise) {
  if (rho.dim() != strategy.dimension()) {
    throw InvalidArgument("choose_observables: state dimension mismatch");
  }
  if (!strategy.uses_feedback()) return strategy.base_observables;
  return choose_observables(strategy, eigensystem(rho), permutation_noise);
}

// ---------------------------------------------------------------------------
// Deterministic impurity increments

double step_dL(const DensityMatrix& rho, const Observable& xcheck, double strength,
               double dt) {
  if (rho.dim() != xcheck.dim()) throw InvalidArgument("step_dL: dimension mismatch");
  const CMatrix& x = xcheck.matrix();
  if (std::abs(x.trace()) > kUnbiasedDiagonalTol) {
    throw ContractViolation("step_dL: observable is not traceless");
  }
  const auto eig = eigensystem(rho);
  const CMatrix& v = eig.basis.matrix();
  const CMatrix local = v.adjoint() * x * v;
  if (max_abs_diagonal(local) > kUnbiasedDiagonalTol) {
    throw ContractViolation(
        "step_dL: observable is not unbiased with respect to the eigenbasis of rho");
  }
  double sum = 0.0;
  const int d = rho.dim();
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      sum += std::norm(local(i, j)) * eig.eigenvalues[i] * eig.eigenvalues[j];
    }
  }
  return -8.0 * strength * dt * sum;
}

double step_dL(const DensityMatrix& rho, std::span<const Observable> xchecks,
               double strength, double dt) {
  double total = 0.0;
  for (const auto& x : xchecks) total += step_dL(rho, x, strength, dt);
  return total;
}

double flat_state_dL(int dim, double delta, double strength, double dt) {
  const DensityMatrix rho = flat_state(dim, delta);
  return -(2.0 / 3.0) * (dim + 1) * strength * dt * impurity_unchecked(rho);
}

double max_element_squared(const Observable& xcheck) {
  return xcheck.matrix().cwiseAbs2().maxCoeff();
}

double binary_state_dL(int dim, double delta, const Observable& xcheck, double strength,
                       double dt) {
  if (xcheck.dim() != dim) throw InvalidArgument("binary_state_dL: dimension mismatch");
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw InvalidArgument("binary_state_dL: delta outside [0, 1]");
  }
  double best = 0.0;
  for (int m = 0; m < dim; ++m) {
    for (int n = 0; n < dim; ++n) {
      if (m != n) best = std::max(best, std::norm(xcheck(m, n)));
    }
  }
  const double l2 = 2.0 * (1.0 - delta) * delta;
  return -8.0 * strength * dt * best * l2;
}

double permutation_average_dL(const FeedbackStrategy& strategy, const DensityMatrix& rho,
                              double strength, double dt) {
  const int d = strategy.dimension();
  if (rho.dim() != d) throw InvalidArgument("permutation_average_dL: dimension mismatch");
  if (d > 8) throw InvalidArgument("permutation_average_dL: D > 8 refused (D! terms)");
  const auto eig = eigensystem(rho);
  std::vector<CMatrix> base;
  for (const auto& x : strategy.base_observables) {
    base.push_back(strategy.transform.matrix() * x.matrix() *
                   strategy.transform.matrix().adjoint());
  }
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  double total = 0.0;
  long count = 0;
  do {
    // (P M P^+)_ij = M_{q(i) q(j)} with q the inverse permutation.
    std::vector<int> inv(d);
    for (int i = 0; i < d; ++i) inv[perm[i]] = i;
    double sum = 0.0;
    for (const auto& m : base) {
      for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) {
          sum += std::norm(m(inv[i], inv[j])) * eig.eigenvalues[i] * eig.eigenvalues[j];
        }
      }
    }
    total += sum;
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return -8.0 * strength * dt * total / static_cast<double>(count);
}

double max_permuted_dL(std::span<const double> eigenvalues, const Observable& xcheck,
                       double strength, double dt) {
  const int d = xcheck.dim();
  if (static_cast<int>(eigenvalues.size()) != d) {
    throw InvalidArgument("max_permuted_dL: dimension mismatch");
  }
  if (d > 8) throw InvalidArgument("max_permuted_dL: D > 8 refused (D! terms)");
  if (max_abs_diagonal(xcheck.matrix()) > kUnbiasedDiagonalTol) {
    throw ContractViolation("max_permuted_dL: observable must have zero diagonal");
  }
  std::vector<double> w(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) w[i * d + j] = std::norm(xcheck(i, j));
  }
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double sum = 0.0;
    for (int i = 0; i < d; ++i) {
      const double li = eigenvalues[perm[i]];
      if (li == 0.0) continue;
      for (int j = 0; j < d; ++j) sum += w[i * d + j] * li * eigenvalues[perm[j]];
    }
    best = std::max(best, sum);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return -8.0 * strength * dt * best;
}

double max_element_bound(int dim) {
  if (dim < 2) throw InvalidArgument("max_element_bound: dimension must be >= 2");
  const double d = dim;
  if (dim % 2 == 0) return d * d / 16.0;
  return d * d / 16.0 - 1.0 / 8.0 + 1.0 / (16.0 * d * d);
}

double register_max_element_bound() { return 1.0; }

double phase_aligned_maximum(std::span<const double> diagonal) {
  const std::size_t d = diagonal.size();
  if (d < 1 || d > 20) throw InvalidArgument("phase_aligned_maximum: need 1 <= D <= 20");
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += ((mask >> k) & 1u) ? -diagonal[k] : diagonal[k];
    best = std::max(best, s * s);
  }
  return best / (static_cast<double>(d) * d);
}

}  // namespace qpurify
