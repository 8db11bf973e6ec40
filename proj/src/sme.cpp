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

#include "qpurify/sme.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qpurify/diagnostics.hpp"
#include "qpurify/errors.hpp"

namespace qpurify {
namespace {

constexpr double kClipCountThreshold = -1e-12;

// Channels whose observables share one known eigenbasis (or are all
// diagonal) give a step operator diagonal in that basis.
const CMatrix* shared_basis(std::span<const Observable> obs, bool& all_diagonal) {
  all_diagonal = true;
  const Spectrum* first = nullptr;
  for (const auto& o : obs) {
    if (!o.spectrum()) {
      all_diagonal = false;
      return nullptr;
    }
    if (!first) first = &*o.spectrum();
    if (o.spectrum()->basis != first->basis) {
      all_diagonal = false;
      return nullptr;
    }
  }
  all_diagonal = first->basis == nullptr;
  return first->basis.get();
}

}  // namespace

// ---------------------------------------------------------------------------
// MeasurementRecord

MeasurementRecord::MeasurementRecord(int channels, double dt)
    : dt_(dt), increments_(channels), integral_(channels) {
  if (channels < 1) throw InvalidArgument("MeasurementRecord: need at least one channel");
  if (!(dt > 0.0)) throw InvalidArgument("MeasurementRecord: dt must be positive");
}

void MeasurementRecord::append(std::span<const double> increments) {
  if (static_cast<int>(increments.size()) != channels()) {
    throw InvalidArgument("MeasurementRecord: increment count differs from channel count");
  }
  for (std::size_t c = 0; c < increments.size(); ++c) {
    increments_[c].push_back(increments[c]);
    const double prev = integral_[c].empty() ? 0.0 : integral_[c].back();
    integral_[c].push_back(prev + increments[c]);
  }
}

double MeasurementRecord::integral(int channel) const {
  const auto& r = integral_.at(channel);
  return r.empty() ? 0.0 : r.back();
}

// ---------------------------------------------------------------------------
// Positivity

bool enforce_positivity(CMatrix& rho) {
  Eigen::LLT<CMatrix> llt(rho);
  if (llt.info() == Eigen::Success) return false;

  Eigen::SelfAdjointEigenSolver<CMatrix> solver(rho);
  RVector vals = solver.eigenvalues();
  const double lowest = vals.minCoeff();
  if (lowest >= 0.0) return false;
  vals = vals.cwiseMax(0.0);
  vals /= vals.sum();
  const CMatrix& v = solver.eigenvectors();
  rho = hermitian_part(v * vals.cast<Complex>().asDiagonal() * v.adjoint());
  return lowest < kClipCountThreshold;
}

// ---------------------------------------------------------------------------
// SME step

StepOutput sme_step(const DensityMatrix& rho, std::span<const Observable> observables,
                    double strength, double dt, std::span<const double> wiener,
                    std::size_t step_index) {
  const int d = rho.dim();
  if (observables.empty()) throw InvalidArgument("sme_step: no measurement channels");
  if (wiener.size() != observables.size()) {
    throw InvalidArgument("sme_step: one Wiener increment per channel required");
  }
  for (const auto& o : observables) {
    if (o.dim() != d) throw InvalidArgument("sme_step: observable dimension mismatch");
  }
  if (!rho.normalized()) throw ContractViolation("sme_step: state must be normalized");
  if (!(dt > 0.0) || !(strength >= 0.0)) {
    throw InvalidArgument("sme_step: need dt > 0 and strength >= 0");
  }
  if (dt * strength > 0.01) {
    warn_once("sme_step.dt", "sme_step: strength*dt > 0.01; first-order step is coarse");
  }

  const CMatrix& r = rho.matrix();
  const double root2g = std::sqrt(2.0 * strength);
  const double root8g = std::sqrt(8.0 * strength);

  std::vector<double> record(observables.size());
  for (std::size_t c = 0; c < observables.size(); ++c) {
    const double mean = (observables[c].matrix() * r).trace().real();
    record[c] = root8g * mean * dt + wiener[c];
  }

  CMatrix next;
  bool all_diagonal = false;
  const CMatrix* basis = shared_basis(observables, all_diagonal);
  if (all_diagonal || basis) {
    RVector expo = RVector::Zero(d);
    for (std::size_t c = 0; c < observables.size(); ++c) {
      const RVector& x = observables[c].spectrum()->values;
      expo += (-2.0 * strength * dt) * x.cwiseAbs2() + (root2g * record[c]) * x;
    }
    expo.array() -= expo.maxCoeff();
    const RVector m = expo.array().exp().matrix();
    CMatrix local = basis ? CMatrix(basis->adjoint() * r * *basis) : r;
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i < d; ++i) local(i, j) *= m(i) * m(j);
    }
    next = basis ? CMatrix(*basis * local * basis->adjoint()) : local;
  } else {
    CMatrix gen = CMatrix::Zero(d, d);
    for (std::size_t c = 0; c < observables.size(); ++c) {
      const CMatrix& x = observables[c].matrix();
      gen += (-2.0 * strength * dt) * (x * x) + (root2g * record[c]) * x;
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(gen));
    RVector expo = solver.eigenvalues();
    expo.array() -= expo.maxCoeff();
    const CMatrix& v = solver.eigenvectors();
    const CMatrix m = v * expo.array().exp().matrix().cast<Complex>().asDiagonal() * v.adjoint();
    next = m * r * m.adjoint();
  }

  next = hermitian_part(next);
  const double tr = next.trace().real();
  if (!next.allFinite() || !std::isfinite(tr) || !(tr > 0.0)) {
    throw NumericalFailure("sme_step: non-finite state at step " + std::to_string(step_index),
                           step_index);
  }
  next /= tr;
  const bool clipped = enforce_positivity(next);
  return {DensityMatrix(assume_valid, std::move(next)), std::move(record), clipped};
}

StepOutput sme_step(const DensityMatrix& rho, std::span<const Observable> observables,
                    double strength, double dt, std::span<NoiseSource> noise,
                    std::size_t step_index) {
  if (noise.size() != observables.size()) {
    throw InvalidArgument("sme_step: one noise source per channel required");
  }
  std::vector<double> w(noise.size());
  for (std::size_t c = 0; c < noise.size(); ++c) w[c] = noise[c].wiener(dt);
  return sme_step(rho, observables, strength, dt, w, step_index);
}

// ---------------------------------------------------------------------------
// Linear trajectories and exact record sampling

namespace {

std::vector<double> diagonal_values(const Observable& x, const char* what) {
  if (!x.is_diagonal()) {
    throw ContractViolation(std::string(what) +
                            ": only diagonal (commuting) observables are supported");
  }
  return real_diagonal(x.matrix());
}

void require_positive_time(double t, const char* what) {
  if (!(t > 0.0)) throw DomainError(std::string(what) + ": t must be positive");
}

}  // namespace

LinearSolution linear_solution(double record, double t, double strength,
                               const Observable& x) {
  require_positive_time(t, "linear_solution");
  const auto xs = diagonal_values(x, "linear_solution");
  const int d = x.dim();
  const double c = 2.0 * std::sqrt(2.0 * strength);
  std::vector<double> log_w(d);
  for (int i = 0; i < d; ++i) {
    log_w[i] = -4.0 * strength * xs[i] * xs[i] * t + c * xs[i] * record;
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());

  CMatrix raw = CMatrix::Zero(d, d);
  CMatrix norm_m = CMatrix::Zero(d, d);
  double scaled_sum = 0.0;
  for (int i = 0; i < d; ++i) scaled_sum += std::exp(log_w[i] - top);
  for (int i = 0; i < d; ++i) {
    raw(i, i) = std::exp(log_w[i]) / d;
    norm_m(i, i) = std::exp(log_w[i] - top) / scaled_sum;
  }
  const double n = std::exp(top) * scaled_sum / d;
  return {DensityMatrix(assume_valid, std::move(raw), false), n,
          DensityMatrix(assume_valid, std::move(norm_m), true)};
}

double record_probability_density(double record, double t, double strength,
                                  const Observable& x) {
  require_positive_time(t, "record_probability_density");
  const auto xs = diagonal_values(x, "record_probability_density");
  const double c = 2.0 * std::sqrt(2.0 * strength) * t;
  double sum = 0.0;
  for (double xi : xs) {
    const double z = record - c * xi;
    sum += std::exp(-z * z / (2.0 * t));
  }
  return sum / (xs.size() * std::sqrt(2.0 * std::numbers::pi * t));
}

double impurity_of_log_weights(std::span<const double> log_weights) {
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<double> p(log_weights.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(log_weights[i] - top);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  double l = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double rest = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (j != i) rest += p[j];
    }
    l += p[i] * rest;
  }
  return l;
}

namespace {

double draw_record(double strength, double t, const std::vector<double>& xs,
                   NoiseSource& noise) {
  const std::size_t branch = noise.index(xs.size());
  const double mean = 2.0 * std::sqrt(2.0 * strength) * xs[branch] * t;
  return mean + std::sqrt(t) * noise.gaussian();
}

}  // namespace

RecordSample exact_record_sampler(double strength, double t, const Observable& x,
                                  NoiseSource& noise) {
  require_positive_time(t, "exact_record_sampler");
  const auto xs = diagonal_values(x, "exact_record_sampler");
  const double r = draw_record(strength, t, xs, noise);
  auto sol = linear_solution(r, t, strength, x);
  const double c = 2.0 * std::sqrt(2.0 * strength);
  std::vector<double> log_w(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    log_w[i] = -4.0 * strength * xs[i] * xs[i] * t + c * xs[i] * r;
  }
  return {r, std::move(sol.normalized), impurity_of_log_weights(log_w)};
}

double exact_record_impurity(double strength, double t, const Observable& x,
                             NoiseSource& noise) {
  require_positive_time(t, "exact_record_impurity");
  const auto xs = diagonal_values(x, "exact_record_impurity");
  const double r = draw_record(strength, t, xs, noise);
  const double c = 2.0 * std::sqrt(2.0 * strength);
  double log_w[kMaxDimension];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    log_w[i] = -4.0 * strength * xs[i] * xs[i] * t + c * xs[i] * r;
  }
  return impurity_of_log_weights(std::span<const double>(log_w, xs.size()));
}

double exact_register_impurity(int qubits, double strength_kappa, double t,
                               NoiseSource& noise) {
  require_positive_time(t, "exact_register_impurity");
  if (qubits < 1 || (1 << qubits) > kMaxDimension) {
    throw InvalidArgument("exact_register_impurity: unsupported register size");
  }
  static const Observable kSigmaZ = register_observable(1, 1);
  double log_purity = 0.0;
  for (int r = 0; r < qubits; ++r) {
    log_purity += std::log1p(-exact_record_impurity(strength_kappa, t, kSigmaZ, noise));
  }
  return -std::expm1(log_purity);
}

}  // namespace qpurify
