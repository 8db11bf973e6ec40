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

#include "qpurify/quantum_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "qpurify/errors.hpp"

namespace qpurify {
namespace {

double hermitian_residual(const CMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

void require_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw InvalidArgument(std::string(what) + ": matrix is not square");
  }
  check_dimension(static_cast<int>(m.rows()));
}

double unitarity_residual(const CMatrix& u) {
  const CMatrix id = CMatrix::Identity(u.rows(), u.cols());
  return (u * u.adjoint() - id).cwiseAbs().maxCoeff();
}

void require_unbiased(const UnitaryTransform& u, const char* what) {
  if (!verify_unbiased(u, 1e-10)) {
    throw ContractViolation(std::string(what) + ": transform is not unbiased");
  }
}

}  // namespace

void check_dimension(int dim) {
  if (dim < 1 || dim > kMaxDimension) {
    throw InvalidArgument("dimension " + std::to_string(dim) +
                          " outside [1, " + std::to_string(kMaxDimension) + "]");
  }
}

CMatrix hermitian_part(const CMatrix& m) {
  return CMatrix(0.5 * (m + m.adjoint()));
}

double max_abs_diagonal(const CMatrix& m) {
  return m.diagonal().cwiseAbs().maxCoeff();
}

bool is_diagonal_matrix(const CMatrix& m, double tol) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (i != j && std::abs(m(i, j)) > tol) return false;
    }
  }
  return true;
}

std::vector<double> real_diagonal(const CMatrix& m) {
  std::vector<double> d(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) d[i] = m(i, i).real();
  return d;
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(CMatrix entries, bool normalized)
    : m_(std::move(entries)), normalized_(normalized) {
  require_square(m_, "DensityMatrix");
  if (!m_.allFinite()) throw InvalidArgument("DensityMatrix: non-finite entry");
  if (hermitian_residual(m_) > kHermitianTol) {
    throw InvalidArgument("DensityMatrix: not Hermitian");
  }
  if (normalized_ && std::abs(m_.trace().real() - 1.0) > kTraceTol) {
    throw InvalidArgument("DensityMatrix: trace differs from 1");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m_, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -kPositivityTol) {
    throw InvalidArgument("DensityMatrix: not positive semidefinite");
  }
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  check_dimension(dim);
  return DensityMatrix(assume_valid,
                       CMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::diagonal(std::span<const double> eigenvalues) {
  const int d = static_cast<int>(eigenvalues.size());
  check_dimension(d);
  CMatrix m = CMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) m(i, i) = eigenvalues[i];
  return DensityMatrix(std::move(m));
}

// ---------------------------------------------------------------------------
// Observable

Observable::Observable(CMatrix entries) : m_(std::move(entries)) {
  require_square(m_, "Observable");
  if (!m_.allFinite()) throw InvalidArgument("Observable: non-finite entry");
  if (hermitian_residual(m_) > kHermitianTol) {
    throw InvalidArgument("Observable: not Hermitian");
  }
}

Observable Observable::diagonal(std::span<const double> values) {
  const int d = static_cast<int>(values.size());
  check_dimension(d);
  CMatrix m = CMatrix::Zero(d, d);
  RVector v(d);
  for (int i = 0; i < d; ++i) {
    m(i, i) = values[i];
    v(i) = values[i];
  }
  return Observable(assume_valid, std::move(m), Spectrum{std::move(v), nullptr});
}

bool Observable::is_diagonal() const {
  if (spectrum_) return spectrum_->basis == nullptr;
  return is_diagonal_matrix(m_);
}

// ---------------------------------------------------------------------------
// UnitaryTransform

UnitaryTransform::UnitaryTransform(CMatrix entries) : m_(std::move(entries)) {
  require_square(m_, "UnitaryTransform");
  if (!m_.allFinite()) throw InvalidArgument("UnitaryTransform: non-finite entry");
  if (unitarity_residual(m_) > kUnitaryTol) {
    throw InvalidArgument("UnitaryTransform: not unitary");
  }
}

UnitaryTransform UnitaryTransform::identity(int dim) {
  check_dimension(dim);
  return UnitaryTransform(assume_valid, CMatrix::Identity(dim, dim));
}

UnitaryTransform UnitaryTransform::adjoint() const {
  return UnitaryTransform(assume_valid, m_.adjoint());
}

UnitaryTransform operator*(const UnitaryTransform& a, const UnitaryTransform& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("transform dimension mismatch");
  return UnitaryTransform(assume_valid, a.m_ * b.m_);
}

// ---------------------------------------------------------------------------
// Constructors

Observable jz_operator(int dim) {
  if (dim < 2) throw InvalidArgument("jz_operator: dimension must be >= 2");
  check_dimension(dim);
  const double j = 0.5 * (dim - 1);
  std::vector<double> d(dim);
  for (int i = 0; i < dim; ++i) d[i] = j - i;
  return Observable::diagonal(d);
}

Observable register_observable(int qubits, int channel) {
  if (qubits < 1 || (1 << qubits) > kMaxDimension) {
    throw InvalidArgument("register_observable: unsupported register size " +
                          std::to_string(qubits));
  }
  if (channel < 1 || channel > qubits) {
    throw InvalidArgument("register_observable: channel " +
                          std::to_string(channel) + " outside [1, " +
                          std::to_string(qubits) + "]");
  }
  const int dim = 1 << qubits;
  const int bit = qubits - channel;
  std::vector<double> d(dim);
  for (int k = 0; k < dim; ++k) d[k] = ((k >> bit) & 1) ? -1.0 : 1.0;
  return Observable::diagonal(d);
}

UnitaryTransform fourier_unbiased_transform(int dim,
                                            std::span<const double> column_phases) {
  if (dim < 2) throw InvalidArgument("fourier_unbiased_transform: dimension must be >= 2");
  check_dimension(dim);
  if (!column_phases.empty() && static_cast<int>(column_phases.size()) != dim) {
    throw InvalidArgument("fourier_unbiased_transform: need one phase per column");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  CMatrix f(dim, dim);
  for (int k = 0; k < dim; ++k) {
    for (int n = 0; n < dim; ++n) {
      // Reduce k*n mod D first so the angle stays exact for every entry.
      double angle = 2.0 * std::numbers::pi * ((k * n) % dim) / dim;
      if (!column_phases.empty()) angle += column_phases[n];
      f(k, n) = std::polar(scale, angle);
    }
  }
  return UnitaryTransform(std::move(f));
}

UnitaryTransform qubit_rotation_transform() {
  const double s = 1.0 / std::sqrt(2.0);
  CMatrix t(2, 2);
  t << s, s, -s, s;
  return UnitaryTransform(std::move(t));
}

Observable conjugate_observable(const Observable& x, const UnitaryTransform& u) {
  if (x.dim() != u.dim()) throw InvalidArgument("conjugate_observable: dimension mismatch");
  CMatrix m = hermitian_part(u.matrix() * x.matrix() * u.matrix().adjoint());
  std::optional<Spectrum> spectrum;
  if (x.spectrum()) {
    const auto& s = *x.spectrum();
    CMatrix basis = s.basis ? CMatrix(u.matrix() * *s.basis) : u.matrix();
    spectrum = Spectrum{s.values, std::make_shared<const CMatrix>(std::move(basis))};
  }
  return Observable(assume_valid, std::move(m), std::move(spectrum));
}

double impurity(const DensityMatrix& rho) {
  if (!rho.normalized() || std::abs(rho.trace() - 1.0) > kTraceTol) {
    throw ContractViolation("impurity: density matrix is not normalized");
  }
  return 1.0 - rho.purity();
}

DensityMatrix flat_state(int dim, double delta) {
  if (dim < 2) throw InvalidArgument("flat_state: dimension must be >= 2");
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw InvalidArgument("flat_state: delta outside [0, 1]");
  }
  std::vector<double> ev(dim, delta / (dim - 1));
  ev[0] = 1.0 - delta;
  return DensityMatrix::diagonal(ev);
}

DensityMatrix binary_state(int dim, double delta, std::pair<int, int> positions) {
  if (dim < 2) throw InvalidArgument("binary_state: dimension must be >= 2");
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw InvalidArgument("binary_state: delta outside [0, 1]");
  }
  const auto [a, b] = positions;
  if (a < 0 || b < 0 || a >= dim || b >= dim || a == b) {
    throw InvalidArgument("binary_state: positions must be distinct and in range");
  }
  std::vector<double> ev(dim, 0.0);
  ev[a] = 1.0 - delta;
  ev[b] = delta;
  return DensityMatrix::diagonal(ev);
}

UnitaryTransform permutation_operator(std::span<const int> perm) {
  const int d = static_cast<int>(perm.size());
  check_dimension(d);
  std::vector<char> seen(d, 0);
  for (int v : perm) {
    if (v < 0 || v >= d || seen[v]) {
      throw InvalidArgument("permutation_operator: input is not a bijection");
    }
    seen[v] = 1;
  }
  CMatrix p = CMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) p(perm[i], i) = 1.0;
  return UnitaryTransform(assume_valid, std::move(p));
}

// ---------------------------------------------------------------------------
// Eigensystem

EigenDecomposition eigensystem(const CMatrix& h) {
  require_square(h, "eigensystem");
  if (hermitian_residual(h) > kHermitianTol) {
    throw InvalidArgument("eigensystem: input is not Hermitian");
  }
  const int d = static_cast<int>(h.rows());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  const auto& vals = solver.eigenvalues();
  const auto& vecs = solver.eigenvectors();

  std::vector<int> dominant(d);
  for (int k = 0; k < d; ++k) {
    Eigen::Index row = 0;
    vecs.col(k).cwiseAbs2().maxCoeff(&row);
    dominant[k] = static_cast<int>(row);
  }

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dominant[a] < dominant[b]; });
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return vals(a) > vals(b); });
  // Near-equal eigenvalues from round-off count as ties.
  const double tie = 1e-13 * std::max(1.0, vals.cwiseAbs().maxCoeff());
  for (int start = 0; start < d;) {
    int stop = start + 1;
    while (stop < d && vals(order[stop - 1]) - vals(order[stop]) <= tie) ++stop;
    std::stable_sort(order.begin() + start, order.begin() + stop,
                     [&](int a, int b) { return dominant[a] < dominant[b]; });
    start = stop;
  }

  EigenDecomposition out{std::vector<double>(d), UnitaryTransform::identity(d)};
  CMatrix basis(d, d);
  for (int k = 0; k < d; ++k) {
    const int src = order[k];
    out.eigenvalues[k] = vals(src);
    const Complex lead = vecs(dominant[src], src);
    basis.col(k) = vecs.col(src) * (std::conj(lead) / std::abs(lead));
  }
  out.basis = UnitaryTransform(assume_valid, std::move(basis));
  return out;
}

EigenDecomposition eigensystem(const DensityMatrix& rho) {
  return eigensystem(rho.matrix());
}

// ---------------------------------------------------------------------------
// Identity checks

bool verify_unbiased(const UnitaryTransform& u, double tol) {
  const double target = 1.0 / u.dim();
  return ((u.matrix().cwiseAbs2().array() - target).abs() <= tol).all();
}

double verify_traceless_conjugate(const Observable& x, const UnitaryTransform& u) {
  if (x.dim() != u.dim()) throw InvalidArgument("dimension mismatch");
  if (!is_diagonal_matrix(x.matrix(), 1e-12) ||
      std::abs(x.matrix().trace()) > 1e-12) {
    throw ContractViolation("verify_traceless_conjugate: X must be traceless and diagonal");
  }
  require_unbiased(u, "verify_traceless_conjugate");
  const CMatrix xc = u.matrix() * x.matrix() * u.matrix().adjoint();
  return max_abs_diagonal(xc);
}

double verify_row_sum_identity(const Observable& x, const UnitaryTransform& u,
                               int column) {
  if (x.dim() != u.dim()) throw InvalidArgument("dimension mismatch");
  const int d = x.dim();
  if (column < 0 || column >= d) {
    throw InvalidArgument("verify_row_sum_identity: column out of range");
  }
  const Observable jz = jz_operator(d);
  if ((x.matrix() - jz.matrix()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ContractViolation("verify_row_sum_identity: X must be J_z");
  }
  require_unbiased(u, "verify_row_sum_identity");
  const CMatrix xc = u.matrix() * x.matrix() * u.matrix().adjoint();
  double sum = 0.0;
  for (int r = 0; r < d; ++r) {
    if (r != column) sum += std::norm(xc(r, column));
  }
  return sum;
}

PermutationSum permutation_sum_identity(const DensityMatrix& rho,
                                        const Observable& xcheck) {
  const int d = rho.dim();
  if (xcheck.dim() != d) throw InvalidArgument("dimension mismatch");
  if (d > 6) {
    throw InvalidArgument("permutation_sum_identity: D > 6 refused (D! terms)");
  }
  if (d < 2) throw InvalidArgument("permutation_sum_identity: D must be >= 2");
  if (!is_diagonal_matrix(rho.matrix(), 1e-12)) {
    throw ContractViolation("permutation_sum_identity: rho must be diagonal");
  }
  if (max_abs_diagonal(xcheck.matrix()) > 1e-10) {
    throw ContractViolation(
        "permutation_sum_identity: X must be unbiased with respect to rho (zero diagonal)");
  }

  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  double brute = 0.0;
  const CMatrix& r = rho.matrix();
  do {
    const CMatrix p = permutation_operator(perm).matrix();
    const CMatrix xm = p * xcheck.matrix() * p.adjoint();
    brute += (xm * r * xm * r).trace().real();
  } while (std::next_permutation(perm.begin(), perm.end()));

  double fact = 1.0;
  for (int k = 2; k <= d - 2; ++k) fact *= k;
  const double tr_x2 = (xcheck.matrix() * xcheck.matrix()).trace().real();
  return {brute, fact * tr_x2 * (1.0 - rho.purity())};
}

}  // namespace qpurify
