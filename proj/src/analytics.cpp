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

#include "qpurify/analytics.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_roots.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "qpurify/diagnostics.hpp"
#include "qpurify/errors.hpp"
#include "qpurify/quantum_core.hpp"

namespace qpurify {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kWorkspaceLimit = 2000;

void disable_gsl_abort() {
  static std::once_flag flag;
  std::call_once(flag, [] { gsl_set_error_handler_off(); });
}

struct Workspace {
  gsl_integration_workspace* w;
  Workspace() : w(gsl_integration_workspace_alloc(kWorkspaceLimit)) {}
  ~Workspace() { gsl_integration_workspace_free(w); }
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;
};

template <class F>
double gsl_trampoline(double x, void* p) {
  return (*static_cast<F*>(p))(x);
}

// Adaptive integration over [points.front(), points.back()] with the
// interior points as known singular/peak locations.
template <class F>
double integrate(F f, std::vector<double> points, double rel_tol, const char* what) {
  disable_gsl_abort();
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  gsl_function fn;
  fn.function = &gsl_trampoline<F>;
  fn.params = &f;
  Workspace ws;
  double result = 0.0, abserr = 0.0;
  const int status = gsl_integration_qagp(&fn, points.data(), points.size(), 0.0, rel_tol,
                                          kWorkspaceLimit, ws.w, &result, &abserr);
  if (!std::isfinite(result)) {
    throw NumericalFailure(std::string(what) + ": non-finite quadrature result", 0);
  }
  if (status != GSL_SUCCESS && abserr > 1e3 * rel_tol * std::abs(result)) {
    throw NumericalFailure(std::string(what) + ": quadrature did not converge (" +
                               gsl_strerror(status) + ")",
                           0);
  }
  return result;
}

void require_positive(double t, const char* what) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw DomainError(std::string(what) + ": t must be positive");
  }
}

void require_strength(double g, const char* what) {
  if (!(g > 0.0) || !std::isfinite(g)) {
    throw InvalidArgument(std::string(what) + ": strength must be positive");
  }
}

void require_long_time(double gt, const char* what) {
  if (!(gt >= 1.0)) {
    throw DomainError(std::string(what) +
                      ": long-time form is not valid below strength*t = 1");
  }
}

double log_add_exp(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

QubitInitialState::QubitInitialState(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) ||
      x * x + y * y + z * z > 1.0 + 1e-12) {
    throw InvalidArgument("QubitInitialState: Bloch vector outside the unit ball");
  }
}

double QubitInitialState::impurity() const {
  return std::max(0.0, 0.5 * (1.0 - (x * x + y * y + z * z)));
}

// ---------------------------------------------------------------------------
// Quadratures

double bare_qubit_quadrature(double strength, double t) {
  require_positive(t, "bare_qubit_quadrature");
  require_strength(strength, "bare_qubit_quadrature");
  const double c = std::sqrt(2.0 * strength);
  const double log_pre = -strength * t - 0.5 * std::log(8.0 * kPi * t);
  // 1/cosh(cR) = 2 e^{-c|R|} / (1 + e^{-2c|R|}); even integrand.
  auto f = [&](double r) {
    const double a = c * r;
    return 2.0 * std::exp(log_pre - r * r / (2.0 * t) - a) / (1.0 + std::exp(-2.0 * a));
  };
  const double r_max = c * t + 12.0 * std::sqrt(t);
  return 2.0 * integrate(f, {0.0, std::min(t / c, r_max / 2), r_max}, 1e-10,
                         "bare_qubit_quadrature");
}

double bare_qudit_quadrature(int dim, double strength, double t) {
  require_positive(t, "bare_qudit_quadrature");
  require_strength(strength, "bare_qudit_quadrature");
  const auto xs = real_diagonal(jz_operator(dim).matrix());
  std::vector<double> mu(dim);
  for (int i = 0; i < dim; ++i) mu[i] = 2.0 * std::sqrt(2.0 * strength) * xs[i] * t;
  const double log_norm = -0.5 * std::log(2.0 * kPi * t);

  // P(R) L = (1/D) sum_{i != j} w_i w_j / sum_k w_k with Gaussian w_i.
  std::vector<double> a(dim);
  auto f = [&](double r) {
    double top = -INFINITY;
    for (int i = 0; i < dim; ++i) {
      const double z = r - mu[i];
      a[i] = -z * z / (2.0 * t);
      top = std::max(top, a[i]);
    }
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double e = std::exp(a[i] - top);
      sum += e;
      sq += e * e;
    }
    return std::exp(top + log_norm) * (sum * sum - sq) / (sum * dim);
  };
  const double r_max = *std::max_element(mu.begin(), mu.end()) + 12.0 * std::sqrt(t);
  std::vector<double> pts{-r_max, 0.0, r_max};
  if (std::abs(mu[0] - mu[1]) > std::sqrt(t)) {
    for (int i = 0; i < dim; ++i) {
      pts.push_back(mu[i]);
      if (i + 1 < dim) pts.push_back(0.5 * (mu[i] + mu[i + 1]));
    }
  }
  return integrate(f, pts, 1e-10, "bare_qudit_quadrature");
}

double bare_register_quadrature(int qubits, double strength_kappa, double t) {
  if (qubits < 1 || (1 << qubits) > kMaxDimension) {
    throw InvalidArgument("bare_register_quadrature: unsupported register size");
  }
  const double l1 = bare_qubit_quadrature(4.0 * strength_kappa, t);
  return -std::expm1(qubits * std::log1p(-l1));
}

double jordan_korotkov_quadrature(const QubitInitialState& initial, double strength, double t) {
  require_positive(t, "jordan_korotkov_quadrature");
  require_strength(strength, "jordan_korotkov_quadrature");
  const double z = initial.z;
  if (!(std::abs(z) < 1.0)) {
    throw DomainError("jordan_korotkov_quadrature: |z0| must be below 1");
  }
  const double l0 = initial.impurity();
  if (l0 == 0.0) return 0.0;
  const double c = std::sqrt(2.0 * strength);
  const double log_pre = -strength * t + std::log(l0) - 0.5 * std::log(2.0 * kPi * t);
  const double lp = std::log1p(z), lm = std::log1p(-z);
  // cosh s + z sinh s = ((1+z) e^s + (1-z) e^{-s}) / 2.
  auto f = [&](double r) {
    const double s = c * r;
    const double log_den = log_add_exp(lp + s, lm - s) - std::numbers::ln2;
    return std::exp(log_pre - r * r / (2.0 * t) - log_den);
  };
  const double peak = -std::atanh(z) / c;
  const double r_max = std::abs(peak) + c * t + 12.0 * std::sqrt(t);
  return integrate(f, {-r_max, peak, r_max}, 1e-10, "jordan_korotkov_quadrature");
}

// ---------------------------------------------------------------------------
// Asymptotes

double bare_qubit_asymptote(double strength, double t) {
  require_positive(t, "bare_qubit_asymptote");
  require_strength(strength, "bare_qubit_asymptote");
  require_long_time(strength * t, "bare_qubit_asymptote");
  return kPi * std::exp(-strength * t) / std::sqrt(16.0 * kPi * strength * t);
}

double bare_qudit_asymptote(int dim, double strength, double t) {
  if (dim < 2) throw InvalidArgument("bare_qudit_asymptote: dimension must be >= 2");
  return 2.0 * (dim - 1) / dim * bare_qubit_asymptote(strength, t);
}

double jordan_korotkov_asymptote(const QubitInitialState& initial, double strength, double t) {
  if (!(std::abs(initial.z) < 1.0)) {
    throw DomainError("jordan_korotkov_asymptote: |z0| must be below 1");
  }
  return bare_qubit_asymptote(strength, t) * 2.0 * initial.impurity() /
         std::sqrt(1.0 - initial.z * initial.z);
}

double bare_register_asymptote(int qubits, double strength_kappa, double t) {
  if (qubits < 1) throw InvalidArgument("bare_register_asymptote: need at least one qubit");
  require_positive(t, "bare_register_asymptote");
  require_strength(strength_kappa, "bare_register_asymptote");
  require_long_time(4.0 * strength_kappa * t, "bare_register_asymptote");
  if (4.0 * strength_kappa * t < 2.0) {
    warn("bare_register_asymptote: 4*kappa*t < 2, long-time form is rough here");
  }
  return qubits * kPi * std::exp(-4.0 * strength_kappa * t) /
         (8.0 * std::sqrt(kPi * strength_kappa * t));
}

// ---------------------------------------------------------------------------
// Feedback curves

namespace {

void require_l0(double l0, double max, const char* what) {
  if (!(l0 >= 0.0 && l0 <= max + 1e-12)) {
    throw InvalidArgument(std::string(what) + ": L0 outside [0, 1 - 1/D]");
  }
}

void require_time(double t, const char* what) {
  if (!(t >= 0.0)) throw DomainError(std::string(what) + ": t must be nonnegative");
}

}  // namespace

double feedback_curve_qubit(double l0, double strength, double t) {
  require_l0(l0, 0.5, "feedback_curve_qubit");
  require_time(t, "feedback_curve_qubit");
  return l0 * std::exp(-2.0 * strength * t);
}

double feedback_curve_qudit_lower(int dim, double l0, double strength, double t) {
  if (dim < 2) throw InvalidArgument("feedback_curve_qudit_lower: dimension must be >= 2");
  require_l0(l0, 1.0 - 1.0 / dim, "feedback_curve_qudit_lower");
  require_time(t, "feedback_curve_qudit_lower");
  return l0 * std::exp(-(2.0 / 3.0) * (dim + 1) * strength * t);
}

double feedback_curve_register_lower(int qubits, double l0, double strength_kappa, double t) {
  if (qubits < 1 || qubits > 30) {
    throw InvalidArgument("feedback_curve_register_lower: unsupported register size");
  }
  const double d = std::ldexp(1.0, qubits);
  require_l0(l0, 1.0 - 1.0 / d, "feedback_curve_register_lower");
  require_time(t, "feedback_curve_register_lower");
  return l0 * std::exp(-8.0 * strength_kappa * qubits * t / (d - 1.0));
}

// ---------------------------------------------------------------------------
// Speed-up

SpeedupBounds speedup_bounds(int dim, std::optional<int> qubits) {
  if (dim < 2) throw InvalidArgument("speedup_bounds: dimension must be >= 2");
  SpeedupBounds b{(2.0 / 3.0) * (dim + 1), 0.5 * dim * dim, std::nullopt, std::nullopt};
  if (qubits) {
    if (*qubits < 1 || *qubits > 30 || (1 << *qubits) != dim) {
      throw InvalidArgument("speedup_bounds: D must equal 2^n");
    }
    b.register_lower = 2.0 * *qubits / (dim - 1.0);
    b.register_upper = 2.0 * *qubits;
  }
  return b;
}

double speedup_ratio_qubit(double t_bare, double strength) {
  require_positive(t_bare, "speedup_ratio_qubit");
  require_strength(strength, "speedup_ratio_qubit");
  const double gt = strength * t_bare;
  if (gt <= 1.0) {
    warn("speedup_ratio_qubit: strength*t_bare <= 1, asymptotic formula is not valid");
  }
  const double inv = 0.5 + std::log(std::sqrt(16.0 * kPi * gt)) / (2.0 * gt) -
                     std::log(2.0 * kPi) / (2.0 * gt);
  return 1.0 / inv;
}

// ---------------------------------------------------------------------------
// Curves

std::string_view to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::kQuadrature: return "quadrature";
    case CurveKind::kAsymptotic: return "asymptotic";
    case CurveKind::kDeterministicFeedback: return "deterministic-feedback";
    case CurveKind::kBound: return "bound";
    case CurveKind::kSimulated: return "simulated";
  }
  return "unknown";
}

ImpurityCurve ImpurityCurve::sample(CurveKind kind, std::function<double(double)> f,
                                    std::vector<double> times, bool keep_evaluator) {
  if (!std::is_sorted(times.begin(), times.end())) {
    throw InvalidArgument("ImpurityCurve: times must be sorted");
  }
  ImpurityCurve c;
  c.kind = kind;
  c.values.reserve(times.size());
  for (double t : times) c.values.push_back(f(t));
  c.times = std::move(times);
  if (keep_evaluator) c.evaluator = std::move(f);
  return c;
}

std::vector<double> linear_grid(double t0, double t1, int count) {
  if (count < 1) throw InvalidArgument("linear_grid: count must be positive");
  if (count == 1) return {t0};
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i) g[i] = t0 + (t1 - t0) * i / (count - 1);
  g.back() = t1;
  return g;
}

namespace {

struct RootCtx {
  const std::function<double(double)>* f;
  double log_target;
};

double root_fn(double t, void* p) {
  auto* ctx = static_cast<RootCtx*>(p);
  const double v = (*ctx->f)(t);
  return (v > 0.0 ? std::log(v) : -745.0) - ctx->log_target;
}

double refine_on_evaluator(const std::function<double(double)>& f, double lo, double hi,
                           double target) {
  disable_gsl_abort();
  RootCtx ctx{&f, std::log(target)};
  gsl_function fn{&root_fn, &ctx};
  if (root_fn(lo, &ctx) * root_fn(hi, &ctx) > 0.0) return 0.5 * (lo + hi);
  std::unique_ptr<gsl_root_fsolver, decltype(&gsl_root_fsolver_free)> s(
      gsl_root_fsolver_alloc(gsl_root_fsolver_brent), &gsl_root_fsolver_free);
  gsl_root_fsolver_set(s.get(), &fn, lo, hi);
  for (int it = 0; it < 200; ++it) {
    gsl_root_fsolver_iterate(s.get());
    lo = gsl_root_fsolver_x_lower(s.get());
    hi = gsl_root_fsolver_x_upper(s.get());
    if (gsl_root_test_interval(lo, hi, 0.0, 1e-9) == GSL_SUCCESS) break;
  }
  return gsl_root_fsolver_root(s.get());
}

}  // namespace

double time_to_impurity(const ImpurityCurve& curve, double target) {
  const auto& t = curve.times;
  const auto& v = curve.values;
  if (t.empty() || t.size() != v.size()) {
    throw InvalidArgument("time_to_impurity: malformed curve");
  }
  if (!(target > 0.0)) throw InvalidArgument("time_to_impurity: target must be positive");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == target) return t[i];
    if (i + 1 == v.size()) break;
    if (!(v[i] > target && v[i + 1] < target)) continue;
    double guess;
    if (v[i + 1] > 0.0) {
      const double a = std::log(v[i]), b = std::log(v[i + 1]);
      guess = t[i] + (std::log(target) - a) / (b - a) * (t[i + 1] - t[i]);
    } else {
      guess = t[i] + (v[i] - target) / (v[i] - v[i + 1]) * (t[i + 1] - t[i]);
    }
    if (!curve.evaluator) return guess;
    return refine_on_evaluator(curve.evaluator, t[i], t[i + 1], target);
  }
  throw NoCrossingError("time_to_impurity: curve does not cross L = " + std::to_string(target));
}

double curve_speedup(const ImpurityCurve& feedback, const ImpurityCurve& bare, double target) {
  const double tf = time_to_impurity(feedback, target);
  const double tb = time_to_impurity(bare, target);
  if (tf == 0.0 && tb == 0.0) return 1.0;
  if (!(tf > 0.0)) throw DomainError("curve_speedup: feedback crossing at t = 0");
  return tb / tf;
}

}  // namespace qpurify
