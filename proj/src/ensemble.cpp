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

#include "qpurify/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "qpurify/errors.hpp"

namespace qpurify {
namespace {

constexpr std::uint64_t kPermutationChannel = 0x7065726dULL;

// Neumaier summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw InvalidArgument("invalid " + field + ": " + why);
}

}  // namespace

void SimConfig::validate() const {
  if (dimension < 2 || dimension > kMaxDimension) {
    bad_field("dimension", "must be in [2, " + std::to_string(kMaxDimension) + "]");
  }
  if (register_qubits && (*register_qubits < 1 || (1 << *register_qubits) != dimension)) {
    bad_field("register_n", "dimension must equal 2^n");
  }
  if (!(strength > 0.0) || !std::isfinite(strength)) bad_field("strength", "must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) bad_field("dt", "must be positive");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) bad_field("t_final", "must be >= 0");
  if (t_final > 0.0 && t_final < dt) bad_field("t_final", "must be 0 or at least dt");
  const double n = t_final / dt;
  if (std::abs(n - std::round(n)) > 1e-6 * std::max(1.0, n)) {
    bad_field("t_final", "must be a whole number of steps dt");
  }
  if (n_traj < 1) bad_field("n_traj", "must be >= 1");
  if (workers < 0) bad_field("workers", "must be >= 0");
  if (sample_times.empty()) bad_field("sample_times", "need at least one time");
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    const double t = sample_times[i];
    if (!(t >= 0.0) || t > t_final * (1 + 1e-12) + 1e-15) {
      bad_field("sample_times", "must lie in [0, t_final]");
    }
    if (i > 0 && !(t > sample_times[i - 1])) bad_field("sample_times", "must be increasing");
  }
  if (initial_state) {
    if (initial_state->dim() != dimension) bad_field("initial_state", "dimension mismatch");
    if (!initial_state->normalized()) bad_field("initial_state", "must be normalized");
  }
}

std::size_t SimConfig::steps() const {
  return static_cast<std::size_t>(std::llround(t_final / dt));
}

std::vector<std::size_t> SimConfig::sample_steps() const {
  std::vector<std::size_t> out;
  out.reserve(sample_times.size());
  const std::size_t n = steps();
  for (double t : sample_times) {
    out.push_back(std::min(n, static_cast<std::size_t>(std::llround(t / dt))));
  }
  return out;
}

int default_worker_count() {
  if (const char* env = std::getenv(kWorkersEnv)) {
    const std::string s(env);
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0' || v < 1 || v > 4096) {
      throw InvalidArgument(std::string(kWorkersEnv) + " must be an integer >= 1, got '" + s +
                            "'");
    }
    return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

TrajectoryResult run_trajectory(const SimConfig& config, const FeedbackStrategy& strategy,
                                std::size_t index) {
  if (strategy.dimension() != config.dimension) {
    throw InvalidArgument("run_trajectory: strategy dimension differs from config");
  }
  const int channels = strategy.channels();
  std::vector<NoiseSource> noise;
  noise.reserve(channels);
  for (int c = 0; c < channels; ++c) noise.emplace_back(config.seed, index, c);
  NoiseSource perm_noise(config.seed, index, kPermutationChannel);

  TrajectoryResult out;
  out.sample_times = config.sample_times;
  out.impurity_values.reserve(config.sample_times.size());
  if (config.retain_records) out.record.emplace(channels, config.dt);

  DensityMatrix rho = config.initial_state
                          ? *config.initial_state
                          : DensityMatrix::maximally_mixed(config.dimension);
  const auto sample_at = config.sample_steps();
  const std::size_t n_steps = config.steps();
  std::size_t next_sample = 0;
  auto record_samples = [&](std::size_t step) {
    while (next_sample < sample_at.size() && sample_at[next_sample] == step) {
      out.impurity_values.push_back(impurity(rho));
      ++next_sample;
    }
  };
  record_samples(0);

  std::vector<double> dw(channels);
  std::vector<Observable> observables = strategy.base_observables;
  const bool feedback = strategy.uses_feedback();
  try {
    for (std::size_t k = 0; k < n_steps; ++k) {
      if (feedback) observables = choose_observables(strategy, rho, &perm_noise);
      for (int c = 0; c < channels; ++c) dw[c] = noise[c].wiener(config.dt);
      auto step = sme_step(rho, observables, config.strength, config.dt, dw, k);
      if (step.clipped) ++out.clip_count;
      if (out.record) out.record->append(step.record);
      rho = std::move(step.state);
      record_samples(k + 1);
    }
  } catch (const NumericalFailure& e) {
    throw NumericalFailure("trajectory " + std::to_string(index) + ": " + e.what(), e.step(),
                           index);
  }
  out.steps = n_steps;
  out.final_state = std::move(rho);
  return out;
}

EnsembleSummary run_ensemble(const SimConfig& config, const FeedbackStrategy& strategy) {
  config.validate();
  if (strategy.dimension() != config.dimension) {
    throw InvalidArgument("run_ensemble: strategy dimension differs from config");
  }
  const int n = config.n_traj;
  const int workers = std::max(1, std::min(n, config.workers > 0 ? config.workers
                                                                  : default_worker_count()));
  std::vector<std::vector<double>> values(n);
  std::vector<std::size_t> clips(n, 0);

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::exception_ptr first_error;
  int first_error_index = n;

  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        auto r = run_trajectory(config, strategy, static_cast<std::size_t>(i));
        values[i] = std::move(r.impurity_values);
        clips[i] = r.clip_count;
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (i < first_error_index) {
          first_error_index = i;
          first_error = std::current_exception();
        }
        failed.store(true);
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  EnsembleSummary s;
  s.sample_times = config.sample_times;
  s.n_traj = n;
  s.config = config;
  s.strategy = strategy.kind;
  const std::size_t m = config.sample_times.size();
  s.mean_impurity.resize(m);
  s.stderr_impurity.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    CompensatedSum sum;
    for (int i = 0; i < n; ++i) sum.add(values[i][j]);
    const double mean = sum.value() / n;
    CompensatedSum sq;
    for (int i = 0; i < n; ++i) {
      const double d = values[i][j] - mean;
      sq.add(d * d);
    }
    s.mean_impurity[j] = mean;
    s.stderr_impurity[j] = n > 1 ? std::sqrt(sq.value() / (n - 1)) / std::sqrt(double(n)) : 0.0;
  }
  std::size_t total_clips = 0;
  for (auto c : clips) total_clips += c;
  const double total_steps = static_cast<double>(config.steps()) * n;
  s.clip_fraction = total_steps > 0 ? total_clips / total_steps : 0.0;
  return s;
}

ImpurityCurve to_curve(const EnsembleSummary& summary) {
  ImpurityCurve c;
  c.kind = CurveKind::kSimulated;
  c.times = summary.sample_times;
  c.values = summary.mean_impurity;
  return c;
}

double measured_speedup(const ImpurityCurve& feedback, const ImpurityCurve& bare,
                        double target) {
  return curve_speedup(feedback, bare, target);
}

double measured_speedup(const EnsembleSummary& feedback, const EnsembleSummary& bare,
                        double target) {
  return curve_speedup(to_curve(feedback), to_curve(bare), target);
}

double measured_speedup(const EnsembleSummary& feedback, const ImpurityCurve& bare,
                        double target) {
  return curve_speedup(to_curve(feedback), bare, target);
}

double measured_speedup(const ImpurityCurve& feedback, const EnsembleSummary& bare,
                        double target) {
  return curve_speedup(feedback, to_curve(bare), target);
}

}  // namespace qpurify
