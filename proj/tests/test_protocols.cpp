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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "qpurify/errors.hpp"
#include "qpurify/protocols.hpp"
#include "test_support.hpp"

using namespace qpurify;
using qpurify::testing::random_spectrum;
using qpurify::testing::random_state;
using qpurify::testing::random_unbiased;
using qpurify::testing::rel_diff;

namespace {

Observable fourier_check(int d) {
  return conjugate_observable(jz_operator(d), fourier_unbiased_transform(d));
}

double impurity_of(const std::vector<double>& p) {
  double s = 0.0;
  for (double v : p) s += v * v;
  return 1.0 - s;
}

// Matched-impurity extremal spectra.
std::vector<double> flat_spectrum(int d, double l) {
  const double a = d / (d - 1.0);
  const double delta = (1.0 - std::sqrt(1.0 - a * l)) / a;
  std::vector<double> p(d, delta / (d - 1));
  p[0] = 1.0 - delta;
  return p;
}

std::vector<double> binary_spectrum(int d, double l) {
  const double delta = 0.5 * (1.0 - std::sqrt(1.0 - 2.0 * l));
  std::vector<double> p(d, 0.0);
  p[0] = 1.0 - delta;
  p[1] = delta;
  return p;
}

}  // namespace

TEST_CASE("strategy names round-trip") {
  for (auto k : {StrategyKind::kBare, StrategyKind::kQubitUbb, StrategyKind::kQuditUbb,
                 StrategyKind::kPermutationAveragedUbb, StrategyKind::kRegisterBare,
                 StrategyKind::kRegisterUbb}) {
    CHECK(parse_strategy_kind(to_string(k)) == k);
  }
  CHECK_FALSE(parse_strategy_kind("nope").has_value());
  CHECK(parse_permutation_policy("fixed") == PermutationPolicy::kFixed);
  CHECK(parse_permutation_policy("resample-each-step") == PermutationPolicy::kResampleEachStep);
  CHECK_FALSE(parse_permutation_policy("other").has_value());
}

TEST_CASE("strategy construction checks") {
  CHECK_THROWS_AS(FeedbackStrategy::qudit_ubb(UnitaryTransform::identity(3)), InvalidArgument);
  CHECK_THROWS_AS(FeedbackStrategy::register_ubb(2, fourier_unbiased_transform(3),
                                                 PermutationPolicy::kFixed),
                  InvalidArgument);
  CHECK_THROWS_AS(FeedbackStrategy::permutation_averaged_ubb(fourier_unbiased_transform(3),
                                                             PermutationPolicy::kFixed, {0, 0, 1}),
                  InvalidArgument);
  const auto r = FeedbackStrategy::register_bare(3);
  CHECK(r.channels() == 3);
  CHECK(r.dimension() == 8);
  CHECK_FALSE(r.uses_feedback());
}

TEST_CASE("bare strategies emit base observables") {
  std::mt19937_64 rng(1);
  const auto s = FeedbackStrategy::bare(3);
  const auto out = choose_observables(s, random_state(3, rng));
  REQUIRE(out.size() == 1);
  CHECK((out[0].matrix() - jz_operator(3).matrix()).cwiseAbs().maxCoeff() == 0.0);
  const auto reg = choose_observables(FeedbackStrategy::register_bare(2), random_state(4, rng));
  REQUIRE(reg.size() == 2);
  CHECK((reg[1].matrix() - register_observable(2, 2).matrix()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("qubit-ubb picks J_x in the state eigenbasis") {
  const double p[] = {0.8, 0.2};
  const auto out = choose_observables(FeedbackStrategy::qubit_ubb(), DensityMatrix::diagonal(p));
  REQUIRE(out.size() == 1);
  CHECK(std::abs(out[0](0, 0)) < 1e-15);
  CHECK(std::abs(out[0](1, 1)) < 1e-15);
  CHECK(std::abs(out[0](0, 1)) == doctest::Approx(0.5));
}

TEST_CASE("qudit-ubb on descending diagonal state") {
  const double p[] = {0.6, 0.3, 0.1};
  const auto out = choose_observables(FeedbackStrategy::qudit_ubb(fourier_unbiased_transform(3)),
                                      DensityMatrix::diagonal(p));
  CHECK(max_abs_diagonal(out[0].matrix()) < 1e-12);
}

TEST_CASE("feedback observables stay unbiased w.r.t. the state") {
  std::mt19937_64 rng(2);
  for (int d = 2; d <= 8; ++d) {
    const auto t = random_unbiased(d, rng);
    std::vector<FeedbackStrategy> strategies{
        FeedbackStrategy::qudit_ubb(t),
        FeedbackStrategy::permutation_averaged_ubb(t, PermutationPolicy::kResampleEachStep)};
    if (d == 2) strategies.push_back(FeedbackStrategy::qubit_ubb());
    if (d == 4 || d == 8) {
      strategies.push_back(
          FeedbackStrategy::register_ubb(d == 4 ? 2 : 3, t, PermutationPolicy::kResampleEachStep));
    }
    NoiseSource perm_noise(1, d, 99);
    for (const auto& s : strategies) {
      for (int k = 0; k < 10; ++k) {
        const auto rho = random_state(d, rng);
        const auto eig = eigensystem(rho);
        const auto obs = choose_observables(s, rho, &perm_noise);
        for (const auto& x : obs) {
          const CMatrix& v = eig.basis.matrix();
          CHECK(max_abs_diagonal(v.adjoint() * x.matrix() * v) < 1e-10);
          // The composed eigenbasis of Xc is unbiased relative to V.
          const CMatrix rel = v.adjoint() * *x.spectrum()->basis;
          CHECK(verify_unbiased(UnitaryTransform(assume_valid, rel), 1e-10));
        }
      }
    }
  }
}

TEST_CASE("permutation resampling needs a stream") {
  const auto s = FeedbackStrategy::permutation_averaged_ubb(fourier_unbiased_transform(3),
                                                            PermutationPolicy::kResampleEachStep);
  CHECK_THROWS_AS(choose_observables(s, DensityMatrix::maximally_mixed(3)), InvalidArgument);
  NoiseSource n(1, 0, 0);
  std::vector<int> counts(6, 0);
  for (int i = 0; i < 6000; ++i) {
    const auto p = random_permutation(3, n);
    counts[p[0] * 2 + (p[1] > p[2])]++;
  }
  for (int c : counts) CHECK(std::abs(c - 1000) < 150);
}

TEST_CASE("step_dL examples") {
  const double g = 1.3, dt = 1e-3;
  for (double delta : {0.05, 0.2, 0.5}) {
    const double p[] = {1 - delta, delta};
    const auto rho = DensityMatrix::diagonal(p);
    const auto xc = fourier_check(2);
    CHECK(step_dL(rho, xc, g, dt) == doctest::Approx(-2 * g * dt * impurity(rho)).epsilon(1e-13));
  }
  const double pure[] = {1.0, 0.0, 0.0};
  CHECK(step_dL(DensityMatrix::diagonal(pure), fourier_check(3), g, dt) == 0.0);
  CHECK_THROWS_AS(step_dL(DensityMatrix::maximally_mixed(3), jz_operator(3), g, dt),
                  ContractViolation);
  const double biased[] = {1.0, 1.0};
  CHECK_THROWS_AS(step_dL(DensityMatrix::maximally_mixed(2),
                          conjugate_observable(Observable::diagonal(biased),
                                               fourier_unbiased_transform(2)),
                          g, dt),
                  ContractViolation);
}

TEST_CASE("flat-state rate") {
  for (int d = 2; d <= 8; ++d) {
    for (double delta : {0.01, 0.1, 0.3}) {
      const double direct = step_dL(flat_state(d, delta), fourier_check(d), 1.0, 1e-4);
      const double want = -(2.0 / 3.0) * (d + 1) * 1e-4 * impurity(flat_state(d, delta));
      CAPTURE(d);
      CHECK(rel_diff(direct, want) < 1e-10);
      CHECK(rel_diff(flat_state_dL(d, delta, 1.0, 1e-4), want) < 1e-14);
    }
  }
  CHECK(flat_state_dL(2, 0.5, 1.0, 1e-3) == doctest::Approx(-1e-3));
  CHECK(flat_state_dL(4, 0.0, 1.0, 1e-3) == 0.0);
  CHECK(flat_state_dL(5, 0.1, 1.0, 1.0) ==
        doctest::Approx(-4.0 * impurity(flat_state(5, 0.1))).epsilon(1e-14));
}

TEST_CASE("binary-state dL") {
  const double dt = 1e-3;
  CHECK(binary_state_dL(2, 0.3, fourier_check(2), 1.0, dt) ==
        doctest::Approx(-2 * dt * 2 * 0.3 * 0.7));
  CHECK(binary_state_dL(5, 0.0, fourier_check(5), 1.0, dt) == 0.0);
  const auto xc = fourier_check(4);
  double best = 0.0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      if (a == b) continue;
      best = std::min(best, step_dL(binary_state(4, 0.2, {a, b}), xc, 1.0, dt));
    }
  }
  CHECK(binary_state_dL(4, 0.2, xc, 1.0, dt) == doctest::Approx(best).epsilon(1e-13));
}

TEST_CASE("max element bound values") {
  CHECK(max_element_bound(2) == 0.25);
  CHECK(max_element_bound(3) == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
  CHECK(max_element_bound(8) == 4.0);
  for (int d = 2; d <= 12; ++d) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += std::abs(0.5 * (d - 1) - k);
    CHECK(max_element_bound(d) == doctest::Approx(s * s / (d * d)).epsilon(1e-14));
    const auto diag = real_diagonal(jz_operator(d).matrix());
    CHECK(std::abs(phase_aligned_maximum(diag) - max_element_bound(d)) < 1e-12);
  }
  CHECK_THROWS_AS(max_element_bound(1), InvalidArgument);
}

TEST_CASE("register max element bound") {
  CHECK(register_max_element_bound() == 1.0);
  for (int n = 1; n <= 3; ++n) {
    for (int r = 1; r <= n; ++r) {
      const auto diag = real_diagonal(register_observable(n, r).matrix());
      CHECK(std::abs(phase_aligned_maximum(diag) - register_max_element_bound()) < 1e-12);
    }
  }
}

TEST_CASE("max element bound dominates random unbiased transforms") {
  std::mt19937_64 rng(5);
  for (int d = 2; d <= 6; ++d) {
    double worst = 0.0;
    std::vector<int> cols(d);
    std::iota(cols.begin(), cols.end(), 0);
    for (int k = 0; k < 100000; ++k) {
      // Column permutations change |Xc_mn|; phases alone do not.
      std::shuffle(cols.begin(), cols.end(), rng);
      const CMatrix f = random_unbiased(d, rng).matrix();
      CMatrix t(d, d);
      for (int c = 0; c < d; ++c) t.col(c) = f.col(cols[c]);
      const CMatrix x = t * jz_operator(d).matrix() * t.adjoint();
      worst = std::max(worst, x.cwiseAbs2().maxCoeff());
    }
    CAPTURE(d);
    CHECK(worst <= max_element_bound(d) + 1e-12);
  }
}

TEST_CASE("permutation-averaged dL equals the closed form") {
  std::mt19937_64 rng(6);
  for (int d = 2; d <= 5; ++d) {
    const auto s = FeedbackStrategy::permutation_averaged_ubb(random_unbiased(d, rng),
                                                              PermutationPolicy::kFixed);
    double fact = 1.0;
    for (int k = 2; k <= d; ++k) fact *= k;
    const double tr_x2 = d * (d * d - 1) / 12.0;
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const auto rho = DensityMatrix::diagonal(random_spectrum(d, rng));
      const double got = permutation_average_dL(s, rho, 1.0, 1e-3);
      const double want = -8.0 * 1e-3 * (fact / (d * (d - 1))) / fact * tr_x2 * impurity(rho);
      worst = std::max(worst, rel_diff(got, want));
      // Same as the flat rate.
      worst = std::max(worst, rel_diff(got, -(2.0 / 3.0) * (d + 1) * 1e-3 * impurity(rho)));
    }
    CAPTURE(d);
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("register permutation average") {
  const int n = 2, d = 4;
  const double kappa = 0.7, dt = 1e-3;
  std::mt19937_64 rng(7);
  const auto s = FeedbackStrategy::register_ubb(n, fourier_unbiased_transform(d),
                                                PermutationPolicy::kFixed);
  for (int k = 0; k < 20; ++k) {
    const auto rho = DensityMatrix::diagonal(random_spectrum(d, rng));
    const double want = -8.0 * kappa * dt * n / (d - 1.0) * impurity(rho);
    CHECK(rel_diff(permutation_average_dL(s, rho, kappa, dt), want) < 1e-10);
  }
}

TEST_CASE("bound sandwich at matched impurity") {
  std::mt19937_64 rng(8);
  for (int d = 2; d <= 6; ++d) {
    const auto xc = fourier_check(d);
    int checked = 0, violations = 0;
    while (checked < 200) {
      const auto p = random_spectrum(d, rng);
      const double l = impurity_of(p);
      if (l > 0.5) continue;
      const double lo = std::abs(max_permuted_dL(flat_spectrum(d, l), xc, 1.0, 1.0));
      const double mid = std::abs(max_permuted_dL(p, xc, 1.0, 1.0));
      const double hi = std::abs(max_permuted_dL(binary_spectrum(d, l), xc, 1.0, 1.0));
      if (lo > mid + 1e-12 || mid > hi + 1e-12) ++violations;
      ++checked;
    }
    CAPTURE(d);
    CHECK(violations == 0);
  }
}

TEST_CASE("max_permuted_dL agrees with step_dL") {
  const auto xc = fourier_check(3);
  const std::vector<double> p{0.5, 0.3, 0.2};
  double best = 0.0;
  std::vector<int> perm{0, 1, 2};
  do {
    std::vector<double> q(3);
    for (int i = 0; i < 3; ++i) q[i] = p[perm[i]];
    best = std::min(best, step_dL(DensityMatrix::diagonal(q), xc, 1.0, 1.0));
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(max_permuted_dL(p, xc, 1.0, 1.0) == doctest::Approx(best).epsilon(1e-13));
}
