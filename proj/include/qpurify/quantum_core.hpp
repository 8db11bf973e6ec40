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

#include <complex>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qpurify {

/// Largest Hilbert-space dimension handled (a 4-qubit register).
inline constexpr int kMaxDimension = 16;

using Complex = std::complex<double>;

// Dynamic size with a fixed upper bound: no heap traffic in the step loop.
using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                              Eigen::ColMajor, kMaxDimension, kMaxDimension>;
using RVector =
    Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDimension, 1>;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPositivityTol = 1e-9;
inline constexpr double kUnitaryTol = 1e-12;

/// Tag for constructors that skip validation; the caller guarantees the
/// invariants (used on hot paths where the matrix is correct by construction).
struct AssumeValid {};
inline constexpr AssumeValid assume_valid{};

void check_dimension(int dim);

/// Conditional state of a D-level system. Hermitian and positive
/// semidefinite; unit trace unless it is a linear-trajectory intermediate.
class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix entries, bool normalized = true);
  DensityMatrix(AssumeValid, CMatrix entries, bool normalized = true)
      : m_(std::move(entries)), normalized_(normalized) {}

  static DensityMatrix maximally_mixed(int dim);
  static DensityMatrix diagonal(std::span<const double> eigenvalues);

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  bool normalized() const { return normalized_; }
  Complex operator()(int i, int j) const { return m_(i, j); }
  double trace() const { return m_.trace().real(); }
  /// tr(rho^2); equals the squared Frobenius norm for Hermitian input.
  double purity() const { return m_.squaredNorm(); }

 private:
  CMatrix m_;
  bool normalized_;
};

/// Eigenvalues with eigenvectors, shared so observables built from the
/// same transform can be recognised as commuting without a comparison.
struct Spectrum {
  RVector values;
  std::shared_ptr<const CMatrix> basis;  // null means the computational basis
};

class Observable {
 public:
  explicit Observable(CMatrix entries);
  Observable(AssumeValid, CMatrix entries, std::optional<Spectrum> spectrum)
      : m_(std::move(entries)), spectrum_(std::move(spectrum)) {}

  static Observable diagonal(std::span<const double> values);

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(int i, int j) const { return m_(i, j); }

  /// Known eigendecomposition, if the observable was built from one.
  const std::optional<Spectrum>& spectrum() const { return spectrum_; }
  bool is_diagonal() const;

 private:
  CMatrix m_;
  std::optional<Spectrum> spectrum_;
};

class UnitaryTransform {
 public:
  explicit UnitaryTransform(CMatrix entries);
  UnitaryTransform(AssumeValid, CMatrix entries) : m_(std::move(entries)) {}

  static UnitaryTransform identity(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(int i, int j) const { return m_(i, j); }
  UnitaryTransform adjoint() const;

  friend UnitaryTransform operator*(const UnitaryTransform& a,
                                    const UnitaryTransform& b);

 private:
  CMatrix m_;
};

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // descending
  UnitaryTransform basis;           // column k pairs with eigenvalues[k]
};

/// diag(j, j-1, ..., -j) with j = (D-1)/2.
Observable jz_operator(int dim);

/// sigma_z on qubit `channel` (1-based, qubit 1 most significant) of an
/// n-qubit register.
Observable register_observable(int qubits, int channel);

/// entry(k, n) = exp(2 pi i k n / D + i phase_n) / sqrt(D). An empty phase
/// list gives the plain Fourier kernel.
UnitaryTransform fourier_unbiased_transform(
    int dim, std::span<const double> column_phases = {});

/// exp(i pi J_y / 2) = (1/sqrt 2)[[1, 1], [-1, 1]]; takes J_z to J_x.
UnitaryTransform qubit_rotation_transform();

/// U X U^dagger. Carries the eigenbasis along when X's spectrum is known.
Observable conjugate_observable(const Observable& x, const UnitaryTransform& u);

/// 1 - tr(rho^2).
double impurity(const DensityMatrix& rho);

/// diag(1 - delta, delta/(D-1), ..., delta/(D-1)).
DensityMatrix flat_state(int dim, double delta);

/// 1 - delta at positions.first, delta at positions.second, zero elsewhere.
DensityMatrix binary_state(int dim, double delta, std::pair<int, int> positions);

/// P with P|i> = |perm[i]>.
UnitaryTransform permutation_operator(std::span<const int> perm);

/// Descending eigenvalues. Equal eigenvalues keep the order of the basis
/// index each eigenvector is concentrated on; eigenvector phases are fixed
/// so that the largest component is real and positive.
EigenDecomposition eigensystem(const DensityMatrix& rho);
EigenDecomposition eigensystem(const CMatrix& hermitian);

bool verify_unbiased(const UnitaryTransform& u, double tol);

/// max_i |(U X U^dagger)_ii| for traceless diagonal X and unbiased U.
double verify_traceless_conjugate(const Observable& x, const UnitaryTransform& u);

/// sum_{r != p} |(U J_z U^dagger)_{rp}|^2 for X = J_z and unbiased U.
double verify_row_sum_identity(const Observable& x, const UnitaryTransform& u,
                               int column);

struct PermutationSum {
  double brute_force;
  double closed_form;
};

/// Sum over all D! basis permutations of tr(P Xc P^+ rho P Xc P^+ rho)
/// against (D-2)! tr(Xc^2) (1 - tr rho^2). Refuses D > 6.
PermutationSum permutation_sum_identity(const DensityMatrix& rho,
                                        const Observable& xcheck);

// Small helpers shared across modules.
CMatrix hermitian_part(const CMatrix& m);
double max_abs_diagonal(const CMatrix& m);
bool is_diagonal_matrix(const CMatrix& m, double tol = 0.0);
std::vector<double> real_diagonal(const CMatrix& m);

}  // namespace qpurify
