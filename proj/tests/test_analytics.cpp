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

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "doctest.h"
#include "qpurify/analytics.hpp"
#include "qpurify/diagnostics.hpp"
#include "qpurify/errors.hpp"
#include "qpurify/noise.hpp"
#include "qpurify/sme.hpp"

using namespace qpurify;

namespace {

constexpr double kPi = std::numbers::pi;

struct Mean {
  double n = 0, mean = 0, m2 = 0;
  void add(double x) {
    n += 1;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double se() const { return std::sqrt(m2 / (n - 1) / n); }
};

struct WarningCounter {
  int count = 0;
  WarningHandler prev;
  WarningCounter() { prev = set_warning_handler([this](std::string_view) { ++count; }); }
  ~WarningCounter() { set_warning_handler(prev); }
};

double sampler_mean(int dim, double g, double t, int n, std::uint64_t seed, double* se) {
  NoiseSource noise(seed, 0, 0);
  const auto x = jz_operator(dim);
  Mean m;
  for (int i = 0; i < n; ++i) m.add(exact_record_impurity(g, t, x, noise));
  *se = m.se();
  return m.mean;
}

}  // namespace

TEST_CASE("bare qubit quadrature limits") {
  CHECK(bare_qubit_quadrature(1.0, 1e-8) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK_THROWS_AS(bare_qubit_quadrature(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(bare_qubit_quadrature(1.0, -1.0), DomainError);
  double prev = 1.0;
  for (int i = 0; i < 100; ++i) {
    const double t = 0.01 + (12.0 - 0.01) * i / 99.0;
    const double v = bare_qubit_quadrature(1.0, t);
    CHECK(v < prev);
    CHECK(v >= 0.0);
    CHECK(v <= 0.5);
    prev = v;
  }
}

TEST_CASE("bare qubit quadrature matches exact sampler") {
  double se = 0.0;
  const double m = sampler_mean(2, 1.0, 1.0, 1000000, 31, &se);
  CHECK(std::abs(m - bare_qubit_quadrature(1.0, 1.0)) < 4.0 * se);
}

TEST_CASE("qudit quadrature reduces to qubit and matches sampler") {
  for (double t : {0.1, 1.0, 5.0, 20.0}) {
    CHECK(std::abs(bare_qudit_quadrature(2, 1.0, t) - bare_qubit_quadrature(1.0, t)) <
          1e-9 * bare_qubit_quadrature(1.0, t));
  }
  double se = 0.0;
  const double m = sampler_mean(3, 1.0, 2.0, 1000000, 32, &se);
  CHECK(std::abs(m - bare_qudit_quadrature(3, 1.0, 2.0)) < 4.0 * se);
  for (int d = 2; d <= 6; ++d) {
    CHECK(bare_qudit_quadrature(d, 1.0, 1e-6) == doctest::Approx(1.0 - 1.0 / d).epsilon(1e-3));
  }
}

TEST_CASE("asymptotes approach quadratures at the leading-correction rate") {
  // Expanding e^{-R^2/2t} to first order gives 1 - pi^2/(16 g t) for the
  // ratio; the observed gap must stay below that and shrink.
  for (double gt : {10.0, 20.0, 40.0}) {
    const double bound = kPi * kPi / (16.0 * gt);
    const double rq = bare_qubit_quadrature(1.0, gt) / bare_qubit_asymptote(1.0, gt);
    CAPTURE(gt);
    CHECK(rq < 1.0);
    CHECK(1.0 - rq < bound);
    for (int d : {3, 4}) {
      const double r = bare_qudit_quadrature(d, 1.0, gt) / bare_qudit_asymptote(d, 1.0, gt);
      CHECK(1.0 - r < bound);
    }
  }
  for (int d : {2, 3, 4}) {
    CHECK(std::abs(bare_qudit_quadrature(d, 1.0, 5.0) / bare_qudit_asymptote(d, 1.0, 5.0) - 1) <
          0.10);
  }
}

TEST_CASE("register product sampler matches product quadrature") {
  for (int n = 1; n <= 3; ++n) {
    NoiseSource noise(40 + n, 0, 0);
    Mean m;
    for (int i = 0; i < 200000; ++i) m.add(exact_register_impurity(n, 0.25, 2.0, noise));
    CAPTURE(n);
    CHECK(std::abs(m.mean - bare_register_quadrature(n, 0.25, 2.0)) < 4.0 * m.se());
  }
  CHECK(bare_register_quadrature(1, 0.25, 3.0) == doctest::Approx(bare_qubit_quadrature(1.0, 3.0)));
  const double l1 = bare_qubit_quadrature(4.0, 1.5);
  CHECK(bare_register_quadrature(3, 1.0, 1.5) ==
        doctest::Approx(1.0 - std::pow(1.0 - l1, 3)).epsilon(1e-13));
  for (int n = 1; n <= 3; ++n) {
    const double r =
        bare_register_quadrature(n, 1.0, 1.25) / bare_register_asymptote(n, 1.0, 1.25);
    CAPTURE(n);
    CHECK(std::abs(r - 1.0) < 0.10);
  }
}

TEST_CASE("Jordan-Korotkov quadrature") {
  const QubitInitialState mixed(0, 0, 0);
  CHECK(mixed.impurity() == 0.5);
  for (double t : {0.5, 2.0, 10.0}) {
    CHECK(jordan_korotkov_quadrature(mixed, 1.0, t) ==
          doctest::Approx(bare_qubit_quadrature(1.0, t)).epsilon(1e-9));
  }
  const QubitInitialState tilted(0, 0, 0.6);
  CHECK(tilted.impurity() == doctest::Approx(0.32));
  CHECK(jordan_korotkov_asymptote(tilted, 1.0, 10.0) ==
        doctest::Approx(kPi * std::exp(-10.0) / std::sqrt(160 * kPi) * 2 * 0.32 / 0.8));
  const double r = jordan_korotkov_quadrature(tilted, 1.0, 40.0) /
                   jordan_korotkov_asymptote(tilted, 1.0, 40.0);
  CHECK(std::abs(r - 1.0) < 0.03);
  CHECK_THROWS_AS(jordan_korotkov_quadrature(QubitInitialState(0, 0, 1), 1.0, 1.0),
                  DomainError);
  CHECK_THROWS_AS(QubitInitialState(0.8, 0.8, 0.0), InvalidArgument);
  CHECK(jordan_korotkov_quadrature(QubitInitialState(1, 0, 0), 1.0, 1.0) == 0.0);
}

TEST_CASE("Jordan-Korotkov quadrature matches the SDE on a tilted start") {
  // A direct simulation of the bare record from a non-diagonal start.
  const QubitInitialState init(0.3, 0.2, 0.5);
  CMatrix r0(2, 2);
  r0 << 0.5 * (1 + init.z), Complex(0.5 * init.x, -0.5 * init.y),
      Complex(0.5 * init.x, 0.5 * init.y), 0.5 * (1 - init.z);
  const std::vector<Observable> obs{jz_operator(2)};
  Mean m;
  for (int k = 0; k < 4000; ++k) {
    NoiseSource noise(5, k, 0);
    DensityMatrix rho(r0);
    for (int s = 0; s < 1000; ++s) {
      const double dw[] = {noise.wiener(1e-3)};
      rho = sme_step(rho, obs, 1.0, 1e-3, dw).state;
    }
    m.add(impurity(rho));
  }
  CHECK(std::abs(m.mean - jordan_korotkov_quadrature(init, 1.0, 1.0)) < 4.0 * m.se());
}

TEST_CASE("asymptote guards") {
  CHECK_THROWS_AS(bare_qubit_asymptote(1.0, 0.5), DomainError);
  CHECK_THROWS_AS(bare_qudit_asymptote(3, 2.0, 0.4), DomainError);
  CHECK_THROWS_AS(bare_register_asymptote(2, 1.0, 0.2), DomainError);
  CHECK_THROWS_AS(bare_register_asymptote(2, 1.0, 0.0), DomainError);
  WarningCounter w;
  bare_register_asymptote(2, 1.0, 0.3);
  CHECK(w.count == 1);
  bare_register_asymptote(2, 1.0, 0.6);
  CHECK(w.count == 1);
}

TEST_CASE("register asymptote values") {
  CHECK(bare_register_asymptote(1, 0.25, 10.0) ==
        doctest::Approx(bare_qubit_asymptote(1.0, 10.0)).epsilon(1e-14));
  CHECK(bare_register_asymptote(2, 0.25, 10.0) ==
        doctest::Approx(2 * bare_register_asymptote(1, 0.25, 10.0)).epsilon(1e-14));
  CHECK(bare_register_asymptote(3, 1.0, 5.0) ==
        doctest::Approx(3 * kPi * std::exp(-20.0) / (8 * std::sqrt(5 * kPi))).epsilon(1e-14));
  CHECK(bare_qudit_asymptote(4, 1.0, 10.0) ==
        doctest::Approx(1.5 * kPi * std::exp(-10.0) / std::sqrt(160 * kPi)).epsilon(1e-14));
}

TEST_CASE("feedback curves") {
  CHECK(feedback_curve_qubit(0.5, 1.0, 0.0) == 0.5);
  CHECK(feedback_curve_qubit(0.5, 1.0, 1.0) == doctest::Approx(0.06766764161830635));
  CHECK(feedback_curve_qubit(0.3, 2.0, std::log(2.0) / 4.0) == doctest::Approx(0.15));
  for (double t : {0.0, 0.3, 2.0}) {
    CHECK(feedback_curve_qudit_lower(2, 0.4, 1.0, t) == doctest::Approx(feedback_curve_qubit(0.4, 1.0, t)));
    CHECK(feedback_curve_register_lower(1, 0.4, 0.25, t) ==
          doctest::Approx(feedback_curve_qubit(0.4, 1.0, t)));
  }
  CHECK(feedback_curve_qudit_lower(5, 0.7, 1.0, 1.0) == doctest::Approx(0.7 * std::exp(-4.0)));
  CHECK(feedback_curve_register_lower(2, 0.6, 1.0, 0.3) ==
        doctest::Approx(0.6 * std::exp(-16.0 / 3.0 * 0.3)));
  CHECK(feedback_curve_register_lower(3, 0.6, 1.0, 0.0) == 0.6);
  CHECK_THROWS_AS(feedback_curve_qubit(0.6, 1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(feedback_curve_qudit_lower(3, 0.7, 1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(feedback_curve_qubit(0.5, 1.0, -1.0), DomainError);
}

TEST_CASE("speed-up bounds") {
  const auto q = speedup_bounds(2, 1);
  CHECK(q.qudit_lower == doctest::Approx(2.0));
  CHECK(q.qudit_upper == 2.0);
  CHECK(*q.register_lower == 2.0);
  CHECK(*q.register_upper == 2.0);
  CHECK(*speedup_bounds(4, 2).register_lower == doctest::Approx(4.0 / 3.0));
  CHECK(*speedup_bounds(8, 3).register_lower == doctest::Approx(6.0 / 7.0));
  CHECK_FALSE(speedup_bounds(5).register_lower.has_value());
  CHECK_THROWS_AS(speedup_bounds(6, 2), InvalidArgument);
  for (int d = 2; d <= 16; ++d) {
    const auto b = speedup_bounds(d);
    CHECK(b.qudit_lower <= b.qudit_upper);
  }
}

TEST_CASE("finite-time qubit speed-up formula") {
  CHECK(speedup_ratio_qubit(1e12, 1.0) == doctest::Approx(2.0).epsilon(1e-9));
  const double inv = 0.5 + std::log(std::sqrt(320 * kPi)) / 40 - std::log(2 * kPi) / 40;
  CHECK(speedup_ratio_qubit(20.0, 1.0) == doctest::Approx(1.0 / inv).epsilon(1e-14));
  double prev = 0.0;
  for (double t : {10.0, 20.0, 50.0, 100.0}) {
    const double s = speedup_ratio_qubit(t, 1.0);
    CHECK(s > prev);
    CHECK(s < 2.0);
    prev = s;
  }
  WarningCounter w;
  speedup_ratio_qubit(0.5, 1.0);
  CHECK(w.count == 1);
}

TEST_CASE("time_to_impurity") {
  const auto fb = ImpurityCurve::sample(
      CurveKind::kDeterministicFeedback, [](double t) { return feedback_curve_qubit(0.5, 1.0, t); },
      linear_grid(0.0, 3.0, 7));
  CHECK(std::abs(time_to_impurity(fb, 0.5 * std::exp(-2.0)) - 1.0) < 1e-6);
  CHECK(time_to_impurity(fb, 0.5) == 0.0);
  CHECK_THROWS_AS(time_to_impurity(fb, 1e-6), NoCrossingError);
  CHECK_THROWS_AS(time_to_impurity(fb, 0.7), NoCrossingError);

  auto no_eval = fb;
  no_eval.evaluator = nullptr;
  CHECK(std::abs(time_to_impurity(no_eval, 0.5 * std::exp(-2.0)) - 1.0) < 1e-12);

  const auto bare = ImpurityCurve::sample(
      CurveKind::kQuadrature, [](double t) { return bare_qubit_quadrature(1.0, t); },
      linear_grid(0.05, 20.0, 41));
  const double t5 = time_to_impurity(bare, 1e-5);
  CHECK(std::abs(bare_qubit_quadrature(1.0, t5) / 1e-5 - 1.0) < 1e-4);
  CHECK(curve_speedup(bare, bare, 1e-5) == 1.0);
}

TEST_CASE("measured qubit speed-up tracks the finite-time formula") {
  const auto fb = ImpurityCurve::sample(
      CurveKind::kDeterministicFeedback, [](double t) { return feedback_curve_qubit(0.5, 1.0, t); },
      linear_grid(0.0, 12.0, 49));
  const auto bare = ImpurityCurve::sample(
      CurveKind::kQuadrature, [](double t) { return bare_qubit_quadrature(1.0, t); },
      linear_grid(0.05, 25.0, 100));
  for (double target : {1e-4, 1e-6, 1e-8}) {
    const double s = curve_speedup(fb, bare, target);
    const double formula = speedup_ratio_qubit(time_to_impurity(bare, target), 1.0);
    CAPTURE(target);
    CAPTURE(s);
    CHECK(std::abs(s / formula - 1.0) < 0.01);
  }
}

TEST_CASE("curves stay inside [0, 1 - 1/D]") {
  for (double t : {1e-3, 0.1, 1.0, 5.0, 15.0}) {
    for (int d = 2; d <= 6; ++d) {
      const double v = bare_qudit_quadrature(d, 1.0, t);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 - 1.0 / d + 1e-12);
      const double f = feedback_curve_qudit_lower(d, 1.0 - 1.0 / d, 1.0, t);
      CHECK(f >= 0.0);
      CHECK(f <= 1.0 - 1.0 / d);
    }
    const double r = bare_register_quadrature(3, 1.0, t);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0 - 1.0 / 8);
  }
}
