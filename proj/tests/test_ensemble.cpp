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
#include <cstdlib>
#include <string>
#include <vector>

#include "doctest.h"
#include "qpurify/analytics.hpp"
#include "qpurify/ensemble.hpp"
#include "qpurify/errors.hpp"

using namespace qpurify;

namespace {

SimConfig qubit_config(double dt, double t_final, int n_traj, std::vector<double> times) {
  SimConfig c;
  c.dimension = 2;
  c.strength = 1.0;
  c.dt = dt;
  c.t_final = t_final;
  c.n_traj = n_traj;
  c.sample_times = std::move(times);
  c.seed = 2026;
  return c;
}

struct EnvGuard {
  std::string old;
  bool had;
  EnvGuard() {
    const char* v = std::getenv(kWorkersEnv);
    had = v != nullptr;
    if (had) old = v;
  }
  ~EnvGuard() {
    if (had) {
      setenv(kWorkersEnv, old.c_str(), 1);
    } else {
      unsetenv(kWorkersEnv);
    }
  }
};

}  // namespace

TEST_CASE("config validation names the field") {
  auto c = qubit_config(1e-3, 1.0, 10, {0.0, 1.0});
  CHECK_NOTHROW(c.validate());
  const auto expect_field = [](SimConfig bad, const std::string& field) {
    try {
      bad.validate();
      FAIL("accepted invalid " << field);
    } catch (const InvalidArgument& e) {
      CHECK(std::string(e.what()).find(field) != std::string::npos);
    }
  };
  auto b = c;
  b.dt = 0.0;
  expect_field(b, "dt");
  b = c;
  b.n_traj = 0;
  expect_field(b, "n_traj");
  b = c;
  b.sample_times = {0.5, 0.2};
  expect_field(b, "sample_times");
  b = c;
  b.sample_times = {2.0};
  expect_field(b, "sample_times");
  b = c;
  b.t_final = -1.0;
  expect_field(b, "t_final");
  b = c;
  b.dimension = 17;
  expect_field(b, "dimension");
  b = c;
  b.register_qubits = 2;
  expect_field(b, "register_n");
  b = c;
  b.strength = 0.0;
  expect_field(b, "strength");
}

TEST_CASE("zero-length run reports the initial impurity") {
  for (int d : {2, 3, 5}) {
    SimConfig c;
    c.dimension = d;
    c.t_final = 0.0;
    c.n_traj = 1;
    c.sample_times = {0.0};
    const auto s = run_ensemble(c, FeedbackStrategy::bare(d));
    REQUIRE(s.mean_impurity.size() == 1);
    CHECK(std::abs(s.mean_impurity[0] - (1.0 - 1.0 / d)) < 1e-15);
    CHECK(s.stderr_impurity[0] == 0.0);
    CHECK(s.clip_fraction == 0.0);
  }
  SimConfig c;
  c.t_final = 0.0;
  c.sample_times = {0.0};
  CHECK(run_ensemble(c, FeedbackStrategy::bare(2)).mean_impurity[0] == 0.5);
}

TEST_CASE("bare qubit ensemble matches quadrature") {
  const auto c = qubit_config(1e-3, 1.0, 10000, {0.5, 1.0});
  const auto s = run_ensemble(c, FeedbackStrategy::bare(2));
  for (std::size_t j = 0; j < s.sample_times.size(); ++j) {
    const double want = bare_qubit_quadrature(1.0, s.sample_times[j]);
    CAPTURE(s.sample_times[j]);
    CHECK(std::abs(s.mean_impurity[j] - want) < 3.0 * s.stderr_impurity[j]);
  }
  CHECK(s.clip_fraction < 1e-3);
}

TEST_CASE("SDE ensemble agrees with the exact record sampler") {
  const std::vector<double> times{0.5, 1.0, 2.0, 4.0};
  const auto c = qubit_config(1e-3, 4.0, 10000, times);
  const auto s = run_ensemble(c, FeedbackStrategy::bare(2));
  const auto x = jz_operator(2);
  for (std::size_t j = 0; j < times.size(); ++j) {
    NoiseSource noise(8, j, 0);
    double sum = 0, sq = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      const double l = exact_record_impurity(1.0, times[j], x, noise);
      sum += l;
      sq += l * l;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / (n - 1));
    const double combined = std::hypot(se, s.stderr_impurity[j]);
    CAPTURE(times[j]);
    CHECK(std::abs(mean - s.mean_impurity[j]) < 3.0 * combined);
  }
}

TEST_CASE("qubit UBB ensemble follows the deterministic curve") {
  const auto c = qubit_config(1e-4, 1.0, 10, {0.0, 0.5, 1.0});
  const auto s = run_ensemble(c, FeedbackStrategy::qubit_ubb());
  const double want = 0.5 * std::exp(-2.0);
  CHECK(std::abs(s.mean_impurity[2] / want - 1.0) < 0.01);
  CHECK(s.stderr_impurity[2] / s.mean_impurity[2] < 1e-2);
  CHECK(s.mean_impurity[0] == 0.5);
  CHECK(s.clip_fraction < 1e-3);
}

TEST_CASE("qubit UBB spread shrinks like sqrt(dt)") {
  const auto cv = [](double dt) {
    auto c = qubit_config(dt, 1.0, 400, {1.0});
    const auto s = run_ensemble(c, FeedbackStrategy::qubit_ubb());
    return s.stderr_impurity[0] * std::sqrt(400.0) / s.mean_impurity[0];
  };
  const double ratio = cv(4e-4) / cv(2e-4);
  CAPTURE(ratio);
  CHECK(ratio >= 1.2);
  CHECK(ratio <= 1.7);
}

TEST_CASE("ensembles are reproducible and worker-count independent") {
  auto c = qubit_config(1e-3, 0.5, 64, {0.1, 0.25, 0.5});
  const auto strategy = FeedbackStrategy::permutation_averaged_ubb(
      fourier_unbiased_transform(3), PermutationPolicy::kResampleEachStep);
  c.dimension = 3;
  c.workers = 1;
  const auto a = run_ensemble(c, strategy);
  const auto b = run_ensemble(c, strategy);
  c.workers = 5;
  const auto p = run_ensemble(c, strategy);
  CHECK(a.mean_impurity == b.mean_impurity);
  CHECK(a.stderr_impurity == b.stderr_impurity);
  CHECK(a.mean_impurity == p.mean_impurity);
  CHECK(a.stderr_impurity == p.stderr_impurity);
  c.seed += 1;
  CHECK(run_ensemble(c, strategy).mean_impurity != a.mean_impurity);
}

TEST_CASE("trajectory results") {
  auto c = qubit_config(1e-3, 0.2, 1, {0.0, 0.1, 0.2});
  c.dimension = 4;
  c.register_qubits = 2;
  c.retain_records = true;
  const auto r = run_trajectory(c, FeedbackStrategy::register_bare(2), 3);
  CHECK(r.steps == 200);
  REQUIRE(r.record.has_value());
  CHECK(r.record->channels() == 2);
  CHECK(r.record->length() == 200);
  for (double v : r.impurity_values) {
    CHECK(v >= 0.0);
    CHECK(v <= 0.75 + 1e-9);
  }
  CHECK(r.impurity_values.back() == doctest::Approx(impurity(r.final_state)));
  const auto again = run_trajectory(c, FeedbackStrategy::register_bare(2), 3);
  CHECK(again.impurity_values == r.impurity_values);
  CHECK_THROWS_AS(run_trajectory(c, FeedbackStrategy::bare(2), 0), InvalidArgument);
}

TEST_CASE("numerical failure carries trajectory and step") {
  auto c = qubit_config(1e-3, 0.01, 4, {0.0, 0.01});
  auto s = FeedbackStrategy::bare(2);
  const double huge[] = {1e200, -1e200};
  s.base_observables = {Observable::diagonal(huge)};
  try {
    run_ensemble(c, s);
    FAIL("expected a numerical failure");
  } catch (const NumericalFailure& e) {
    CHECK(e.has_trajectory());
    CHECK(e.trajectory() == 0);
    CHECK(e.step() == 0);
  }
}

TEST_CASE("default worker count from the environment") {
  EnvGuard guard;
  setenv(kWorkersEnv, "3", 1);
  CHECK(default_worker_count() == 3);
  setenv(kWorkersEnv, "0", 1);
  CHECK_THROWS_AS(default_worker_count(), InvalidArgument);
  setenv(kWorkersEnv, "two", 1);
  CHECK_THROWS_AS(default_worker_count(), InvalidArgument);
  unsetenv(kWorkersEnv);
  CHECK(default_worker_count() >= 1);
}

TEST_CASE("measured speed-up") {
  auto c = qubit_config(1e-3, 2.0, 20, linear_grid(0.0, 2.0, 21));
  const auto fb = run_ensemble(c, FeedbackStrategy::qubit_ubb());
  CHECK(measured_speedup(fb, fb, 0.05) == 1.0);
  const auto oracle = ImpurityCurve::sample(
      CurveKind::kDeterministicFeedback, [](double t) { return feedback_curve_qubit(0.5, 1.0, t); },
      linear_grid(0.0, 2.0, 21));
  CHECK(measured_speedup(fb, oracle, 0.05) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(measured_speedup(oracle, fb, 0.05) == doctest::Approx(1.0).epsilon(0.03));
  CHECK_THROWS_AS(measured_speedup(fb, oracle, 1e-9), NoCrossingError);
}
