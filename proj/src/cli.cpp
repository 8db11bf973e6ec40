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

#include "qpurify/cli.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"

namespace qpurify::cli {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"system", {"dimension", "register_n", "strength", "strength_convention", "initial_bloch"}},
      {"run", {"dt", "t_final", "n_traj", "seed", "sample_times", "sample_count", "workers"}},
      {"protocol", {"kind", "transform", "permutation_policy", "transform_seed"}},
      {"output", {"path", "format"}},
  };
  return keys;
}

[[noreturn]] void config_fail(const std::string& field, const std::string& why) {
  throw ConfigError(field + ": " + why);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    config_fail(field, "expected a number, got '" + raw + "'");
  }
  return v;
}

long long parse_integer(const std::string& field, const std::string& raw) {
  const std::string s = trim(raw);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    config_fail(field, "expected an integer, got '" + raw + "'");
  }
  return v;
}

std::uint64_t parse_seed(const std::string& field, const std::string& raw) {
  const std::string s = trim(raw);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    config_fail(field, "expected a nonnegative 64-bit integer, got '" + raw + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& field, const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(field, item));
  if (out.empty()) config_fail(field, "expected a comma-separated list");
  return out;
}

class Section {
 public:
  Section(const pt::ptree* node, std::string name) : node_(node), name_(std::move(name)) {}

  std::optional<std::string> get(const std::string& key) const {
    if (!node_) return std::nullopt;
    const auto it = node_->find(key);
    if (it == node_->not_found()) return std::nullopt;
    const std::string& raw = it->second.data();
    return trim(raw.substr(0, raw.find_first_of(";#")));
  }
  std::string field(const std::string& key) const { return "[" + name_ + "] " + key; }
  std::string require(const std::string& key) const {
    auto v = get(key);
    if (!v) config_fail(field(key), "missing");
    return *v;
  }

 private:
  const pt::ptree* node_;
  std::string name_;
};

std::uint64_t transform_rng_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x7472616eULL); }

UnitaryTransform make_transform(int dim, TransformChoice choice, std::uint64_t seed) {
  if (choice == TransformChoice::kFourier) return fourier_unbiased_transform(dim);
  std::mt19937_64 rng(transform_rng_seed(seed));
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  std::vector<double> phases(dim);
  for (auto& p : phases) p = u(rng);
  return fourier_unbiased_transform(dim, phases);
}

bool is_register_kind(StrategyKind k) {
  return k == StrategyKind::kRegisterBare || k == StrategyKind::kRegisterUbb;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

double convert_strength(double value, StrengthConvention given, bool register_run) {
  if (register_run) return given == StrengthConvention::kKappa ? value : value / 4.0;
  return given == StrengthConvention::kGamma ? value : 4.0 * value;
}

FeedbackStrategy ExperimentConfig::strategy() const {
  const int d = sim.dimension;
  switch (kind) {
    case StrategyKind::kBare: return FeedbackStrategy::bare(d);
    case StrategyKind::kQubitUbb: return FeedbackStrategy::qubit_ubb();
    case StrategyKind::kQuditUbb:
      return FeedbackStrategy::qudit_ubb(make_transform(d, transform, transform_seed));
    case StrategyKind::kPermutationAveragedUbb:
      return FeedbackStrategy::permutation_averaged_ubb(
          make_transform(d, transform, transform_seed), permutation_policy);
    case StrategyKind::kRegisterBare: return FeedbackStrategy::register_bare(*sim.register_qubits);
    case StrategyKind::kRegisterUbb:
      return FeedbackStrategy::register_ubb(*sim.register_qubits,
                                            make_transform(d, transform, transform_seed),
                                            permutation_policy);
  }
  throw ConfigError("[protocol] kind: unsupported");
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [name, node] : tree) {
    const auto it = allowed_keys().find(name);
    if (node.empty() && !node.data().empty()) {
      config_fail(name, "key outside any section");
    }
    if (it == allowed_keys().end()) config_fail("[" + name + "]", "unknown section");
    for (const auto& [key, value] : node) {
      if (!it->second.count(key)) config_fail("[" + name + "] " + key, "unknown key");
    }
  }
  const auto section = [&](const std::string& name) {
    const auto it = tree.find(name);
    return Section(it == tree.not_found() ? nullptr : &it->second, name);
  };
  const Section system = section("system"), run = section("run"), protocol = section("protocol"),
                output = section("output");

  ExperimentConfig c;
  SimConfig& s = c.sim;

  // [protocol] first: the kind decides how [system] is read.
  const std::string kind_name = protocol.require("kind");
  const auto kind = parse_strategy_kind(kind_name);
  if (!kind) config_fail(protocol.field("kind"), "unknown protocol '" + kind_name + "'");
  c.kind = *kind;
  if (auto t = protocol.get("transform")) {
    if (*t == "fourier") {
      c.transform = TransformChoice::kFourier;
    } else if (*t == "fourier-random-phase") {
      c.transform = TransformChoice::kFourierRandomPhase;
    } else {
      config_fail(protocol.field("transform"), "expected fourier or fourier-random-phase");
    }
  }
  if (auto p = protocol.get("permutation_policy")) {
    const auto policy = parse_permutation_policy(*p);
    if (!policy) {
      config_fail(protocol.field("permutation_policy"), "expected fixed or resample-each-step");
    }
    c.permutation_policy = *policy;
  }

  const bool reg = is_register_kind(c.kind);
  const auto dim = system.get("dimension");
  const auto reg_n = system.get("register_n");
  if (dim && reg_n) config_fail(system.field("register_n"), "give dimension or register_n, not both");
  if (reg) {
    if (!reg_n) config_fail(system.field("register_n"), "required for " + kind_name);
    const long long n = parse_integer(system.field("register_n"), *reg_n);
    if (n < 1 || (1LL << n) > kMaxDimension) config_fail(system.field("register_n"), "must be 1..4");
    s.register_qubits = static_cast<int>(n);
    s.dimension = 1 << n;
  } else {
    if (!dim) config_fail(system.field("dimension"), "required for " + kind_name);
    const long long d = parse_integer(system.field("dimension"), *dim);
    if (d < 2 || d > kMaxDimension) {
      config_fail(system.field("dimension"), "must be in [2, " + std::to_string(kMaxDimension) + "]");
    }
    s.dimension = static_cast<int>(d);
  }
  if (c.kind == StrategyKind::kQubitUbb && s.dimension != 2) {
    config_fail(system.field("dimension"), "qubit-ubb needs dimension 2");
  }

  const std::string conv = system.require("strength_convention");
  if (conv == "gamma") {
    c.convention = StrengthConvention::kGamma;
  } else if (conv == "kappa") {
    c.convention = StrengthConvention::kKappa;
  } else {
    config_fail(system.field("strength_convention"), "expected gamma or kappa");
  }
  c.strength_as_given = parse_number(system.field("strength"), system.require("strength"));
  if (!(c.strength_as_given > 0.0)) config_fail(system.field("strength"), "must be positive");
  s.strength = convert_strength(c.strength_as_given, c.convention, reg);

  if (auto b = system.get("initial_bloch")) {
    if (s.dimension != 2) config_fail(system.field("initial_bloch"), "only for dimension 2");
    const auto v = parse_list(system.field("initial_bloch"), *b);
    if (v.size() != 3) config_fail(system.field("initial_bloch"), "expected x, y, z");
    if (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] > 1.0 + 1e-12) {
      config_fail(system.field("initial_bloch"), "outside the unit ball");
    }
    CMatrix m(2, 2);
    m << 0.5 * (1 + v[2]), Complex(0.5 * v[0], -0.5 * v[1]), Complex(0.5 * v[0], 0.5 * v[1]),
        0.5 * (1 - v[2]);
    s.initial_state.emplace(m);
  }

  const double default_dt = reg ? 1e-4 / (4.0 * s.strength) : 1e-4 / s.strength;
  s.dt = run.get("dt") ? parse_number(run.field("dt"), *run.get("dt")) : default_dt;
  if (!(s.dt > 0.0)) config_fail(run.field("dt"), "must be positive");
  s.t_final = parse_number(run.field("t_final"), run.require("t_final"));
  if (!(s.t_final >= 0.0)) config_fail(run.field("t_final"), "must be >= 0");
  if (s.t_final > 0.0 && s.t_final < s.dt) config_fail(run.field("t_final"), "must be 0 or >= dt");
  if (auto n = run.get("n_traj")) {
    const long long v = parse_integer(run.field("n_traj"), *n);
    if (v < 1 || v > 100000000) config_fail(run.field("n_traj"), "must be >= 1");
    s.n_traj = static_cast<int>(v);
  } else {
    s.n_traj = 1;
  }
  s.seed = run.get("seed") ? parse_seed(run.field("seed"), *run.get("seed")) : 0;
  if (auto w = run.get("workers")) {
    const long long v = parse_integer(run.field("workers"), *w);
    if (v < 0 || v > 4096) config_fail(run.field("workers"), "must be >= 0");
    s.workers = static_cast<int>(v);
  }
  const auto times = run.get("sample_times");
  const auto count = run.get("sample_count");
  if (times && count) config_fail(run.field("sample_count"), "give sample_times or sample_count, not both");
  if (times) {
    s.sample_times = parse_list(run.field("sample_times"), *times);
  } else {
    long long n = s.t_final > 0.0 ? 11 : 1;
    if (count) {
      n = parse_integer(run.field("sample_count"), *count);
      if (n < 1 || n > 10000000) config_fail(run.field("sample_count"), "must be >= 1");
    }
    s.sample_times = s.t_final > 0.0 && n > 1 ? linear_grid(0.0, s.t_final, static_cast<int>(n))
                                               : std::vector<double>{s.t_final};
  }

  c.transform_seed = protocol.get("transform_seed")
                         ? parse_seed(protocol.field("transform_seed"), *protocol.get("transform_seed"))
                         : s.seed;
  c.output_path = output.get("path").value_or("");
  c.output_format = output.get("format").value_or("csv");
  if (c.output_format != "csv") config_fail(output.field("format"), "only csv is supported");

  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("[run] ") + e.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_summary_csv(std::ostream& out, const EnsembleSummary& s) {
  out << "t,mean_L,stderr_L,n_traj,clip_fraction\n";
  for (std::size_t j = 0; j < s.sample_times.size(); ++j) {
    out << format_double(s.sample_times[j]) << ',' << format_double(s.mean_impurity[j]) << ','
        << format_double(s.stderr_impurity[j]) << ',' << s.n_traj << ','
        << format_double(s.clip_fraction) << '\n';
  }
}

void write_curve_csv(std::ostream& out, const std::vector<double>& t,
                     const std::vector<double>& l) {
  out << "t,L\n";
  for (std::size_t j = 0; j < t.size(); ++j) {
    out << format_double(t[j]) << ',' << format_double(l[j]) << '\n';
  }
}

void write_bounds_csv(std::ostream& out, int d_min, int d_max) {
  out << "D,lower,upper\n";
  for (int d = d_min; d <= d_max; ++d) {
    const auto b = speedup_bounds(d);
    out << d << ',' << format_double(b.qudit_lower) << ',' << format_double(b.qudit_upper) << '\n';
  }
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("read_csv: empty input");
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.header.push_back(trim(cell));
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream rs(line);
    while (std::getline(rs, cell, ',')) row.push_back(parse_number("csv", cell));
    if (row.size() != t.header.size()) throw InvalidArgument("read_csv: ragged row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Oracles

double oracle_initial(const std::string& kind, const OracleParams& p) {
  if (kind == "jk") return p.initial.impurity();
  if (kind == "fb-qubit") return p.l0.value_or(0.5);
  if (kind == "bare-qubit") return 0.5;
  if (kind == "bare-qudit") return 1.0 - 1.0 / p.dimension;
  if (kind == "fb-qudit-lower") return p.l0.value_or(1.0 - 1.0 / p.dimension);
  const double reg = 1.0 - std::ldexp(1.0, -p.qubits);
  if (kind == "fb-register-lower") return p.l0.value_or(reg);
  if (kind == "register-bare" || kind == "register-bare-asymptote") return reg;
  throw InvalidArgument("unknown curve oracle '" + kind + "'");
}

double oracle_value(const std::string& kind, const OracleParams& p, double t) {
  const double g = convert_strength(p.strength, p.convention, false);
  const double k = convert_strength(p.strength, p.convention, true);
  const double l0 = oracle_initial(kind, p);
  if (kind == "fb-qubit") return feedback_curve_qubit(l0, g, t);
  if (kind == "fb-qudit-lower") return feedback_curve_qudit_lower(p.dimension, l0, g, t);
  if (kind == "fb-register-lower") return feedback_curve_register_lower(p.qubits, l0, k, t);
  if (kind == "register-bare-asymptote") return bare_register_asymptote(p.qubits, k, t);
  if (t == 0.0) return l0;
  if (kind == "bare-qubit") return bare_qubit_quadrature(g, t);
  if (kind == "bare-qudit") return bare_qudit_quadrature(p.dimension, g, t);
  if (kind == "jk") return jordan_korotkov_quadrature(p.initial, g, t);
  if (kind == "register-bare") return bare_register_quadrature(p.qubits, k, t);
  throw InvalidArgument("unknown curve oracle '" + kind + "'");
}

ImpurityCurve oracle_curve(const std::string& kind, const OracleParams& p, double target) {
  const double k = convert_strength(p.strength, p.convention, true);
  const double t0 = kind == "register-bare-asymptote" ? 1.0 / (4.0 * k) : 0.0;
  double t_max = std::max(1.0, 2.0 * t0);
  while (oracle_value(kind, p, t_max) >= target && t_max < 1e6) t_max *= 2.0;
  const auto kind_of = [&] {
    if (kind.rfind("fb-", 0) == 0) return CurveKind::kDeterministicFeedback;
    if (kind == "register-bare-asymptote") return CurveKind::kAsymptotic;
    return CurveKind::kQuadrature;
  };
  return ImpurityCurve::sample(
      kind_of(), [kind, p](double t) { return oracle_value(kind, p, t); },
      linear_grid(t0, t_max, 400), true);
}

// ---------------------------------------------------------------------------
// Verification

namespace {

UnitaryTransform perturb(const UnitaryTransform& u, double angle) {
  CMatrix r = CMatrix::Identity(u.dim(), u.dim());
  r(0, 0) = std::cos(angle);
  r(1, 1) = std::cos(angle);
  r(0, 1) = -std::sin(angle);
  r(1, 0) = std::sin(angle);
  return UnitaryTransform(u.matrix() * r);
}

double rel(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

std::vector<double> random_spectrum(int d, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(d);
  double s = 0.0;
  for (auto& v : p) s += (v = e(rng));
  for (auto& v : p) v /= s;
  return p;
}

double spectrum_impurity(const std::vector<double>& p) {
  double s = 0.0;
  for (double v : p) s += v * v;
  return 1.0 - s;
}

template <class F>
VerifyLine check(const std::string& name, int d, double tol, F f) {
  VerifyLine line{name, d, 0.0, tol, false, ""};
  try {
    line.residual = f();
    line.pass = line.residual <= tol;
  } catch (const std::exception& e) {
    line.residual = std::numeric_limits<double>::quiet_NaN();
    line.note = e.what();
  }
  return line;
}

}  // namespace

std::vector<VerifyLine> run_verification(int max_dim, bool inject_fault, std::uint64_t seed) {
  if (max_dim < 2 || max_dim > 6) {
    throw InvalidArgument("verify: max dimension must be in [2, 6]");
  }
  std::vector<VerifyLine> lines;
  for (int d = 2; d <= max_dim; ++d) {
    std::mt19937_64 rng(splitmix64(seed + d));
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const auto fault = [&](const UnitaryTransform& u) {
      return inject_fault ? perturb(u, 1e-3) : u;
    };
    std::vector<UnitaryTransform> transforms;
    for (int k = 0; k < 100; ++k) {
      std::vector<double> ph(d);
      for (auto& p : ph) p = phase(rng);
      transforms.push_back(fault(fourier_unbiased_transform(d, ph)));
    }
    const Observable jz = jz_operator(d);
    const Observable xc = conjugate_observable(jz, fault(fourier_unbiased_transform(d)));

    lines.push_back(check("zero-diagonal", d, 1e-12, [&] {
      double worst = 0.0;
      for (const auto& u : transforms) worst = std::max(worst, verify_traceless_conjugate(jz, u));
      return worst;
    }));
    lines.push_back(check("permutation-sum", d, 1e-10, [&] {
      double worst = 0.0;
      const Observable x = conjugate_observable(jz, transforms[0]);
      for (int k = 0; k < 100; ++k) {
        const auto r = permutation_sum_identity(DensityMatrix::diagonal(random_spectrum(d, rng)), x);
        worst = std::max(worst, rel(r.brute_force, r.closed_form));
      }
      return worst;
    }));
    lines.push_back(check("row-sum", d, 1e-12, [&] {
      double worst = 0.0;
      const double want = (d * d - 1) / 12.0;
      for (const auto& u : transforms) {
        for (int p = 0; p < d; ++p) {
          worst = std::max(worst, std::abs(verify_row_sum_identity(jz, u, p) - want));
        }
      }
      return worst;
    }));
    lines.push_back(check("flat-binary-rate", d, 1e-10, [&] {
      double worst = 0.0;
      for (double delta : {0.01, 0.1, 0.3}) {
        const auto f = flat_state(d, delta);
        worst = std::max(worst, rel(step_dL(f, xc, 1.0, 1e-4),
                                    -(2.0 / 3.0) * (d + 1) * 1e-4 * impurity(f)));
        double best = 0.0;
        for (int a = 0; a < d; ++a) {
          for (int b = 0; b < d; ++b) {
            if (a != b) best = std::min(best, step_dL(binary_state(d, delta, {a, b}), xc, 1.0, 1e-4));
          }
        }
        worst = std::max(worst, rel(binary_state_dL(d, delta, xc, 1.0, 1e-4), best));
      }
      return worst;
    }));
    lines.push_back(check("bound-sandwich", d, 1e-12, [&] {
      double worst = 0.0;
      int done = 0;
      while (done < 200) {
        const auto p = random_spectrum(d, rng);
        const double l = spectrum_impurity(p);
        if (l > 0.5) continue;
        const double a = d / (d - 1.0);
        const double df = (1.0 - std::sqrt(1.0 - a * l)) / a;
        std::vector<double> flat(d, df / (d - 1));
        flat[0] = 1.0 - df;
        const double db = 0.5 * (1.0 - std::sqrt(1.0 - 2.0 * l));
        std::vector<double> bin(d, 0.0);
        bin[0] = 1.0 - db;
        bin[1] = db;
        const double lo = std::abs(max_permuted_dL(flat, xc, 1.0, 1.0));
        const double mid = std::abs(max_permuted_dL(p, xc, 1.0, 1.0));
        const double hi = std::abs(max_permuted_dL(bin, xc, 1.0, 1.0));
        worst = std::max({worst, lo - mid, mid - hi});
        ++done;
      }
      return worst;
    }));
  }
  return lines;
}

void write_verify_report(std::ostream& out, const std::vector<VerifyLine>& lines) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-18s %3s  %-12s %-8s %s\n", "identity", "D", "residual", "tol",
                "status");
  out << buf;
  for (const auto& l : lines) {
    std::snprintf(buf, sizeof buf, "%-18s %3d  %-12.3e %-8.0e %s", l.identity.c_str(),
                  l.dimension, l.residual, l.tolerance, l.pass ? "PASS" : "FAIL");
    out << buf;
    if (!l.note.empty()) out << "  (" << l.note << ')';
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Command line

namespace {

struct OracleFlags {
  double strength = 1.0;
  std::string convention = "gamma";
  int dimension = 2;
  int qubits = 1;
  std::optional<double> l0;
  std::vector<double> bloch;

  OracleParams params() const {
    OracleParams p;
    p.strength = strength;
    if (convention == "gamma") {
      p.convention = StrengthConvention::kGamma;
    } else if (convention == "kappa") {
      p.convention = StrengthConvention::kKappa;
    } else {
      throw InvalidArgument("--strength-convention must be gamma or kappa");
    }
    p.dimension = dimension;
    p.qubits = qubits;
    p.l0 = l0;
    if (!bloch.empty()) {
      if (bloch.size() != 3) throw InvalidArgument("--bloch expects x,y,z");
      p.initial = QubitInitialState(bloch[0], bloch[1], bloch[2]);
    }
    return p;
  }
};

constexpr const char* kConventionHelp =
    "gamma (qudit convention, J_z eigenvalues) or kappa (register convention, +-1 "
    "eigenvalues); kappa = gamma/4";

void add_oracle_flags(CLI::App* app, OracleFlags& f) {
  app->add_option("--strength", f.strength, "measurement strength")->check(CLI::PositiveNumber);
  app->add_option("--strength-convention", f.convention, kConventionHelp)
      ->check(CLI::IsMember({"gamma", "kappa"}));
  app->add_option("--dimension", f.dimension, "qudit dimension D")->check(CLI::Range(2, 16));
  app->add_option("--qubits", f.qubits, "register size n")->check(CLI::Range(1, 4));
  app->add_option("--L0", f.l0, "initial impurity for feedback curves");
  app->add_option("--bloch", f.bloch, "initial Bloch vector x,y,z for jk")->delimiter(',');
}

struct SpeedupSource {
  ImpurityCurve curve;
  int dimension = 2;
  std::optional<int> qubits;
};

SpeedupSource load_source(const std::string& source, const OracleFlags& flags, double target) {
  SpeedupSource s;
  if (source.rfind("oracle:", 0) == 0) {
    const std::string kind = source.substr(7);
    const auto p = flags.params();
    s.curve = oracle_curve(kind, p, target);
    if (kind.find("register") != std::string::npos) {
      s.qubits = p.qubits;
      s.dimension = 1 << p.qubits;
    } else {
      s.dimension = kind == "bare-qudit" || kind == "fb-qudit-lower" ? p.dimension : 2;
    }
    return s;
  }
  const auto cfg = load_experiment_config(source);
  s.curve = to_curve(run_ensemble(cfg.sim, cfg.strategy()));
  s.dimension = cfg.sim.dimension;
  s.qubits = cfg.sim.register_qubits;
  return s;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous-measurement purification: trajectory simulation, analytic oracles, "
               "identity checks and speed-up estimates."};
  app.require_subcommand(1);
  app.footer(std::string("Default worker count comes from ") + kWorkersEnv +
             " (integer >= 1). Exit codes: 0 ok, 1 usage/config, 2 numerical failure, "
             "3 verification failure.");

  std::string sim_config, sim_output;
  int sim_workers = -1;
  auto* sim = app.add_subcommand("simulate", "run a trajectory ensemble from a config file");
  sim->add_option("config", sim_config, "experiment config (sections [system] [run] [protocol] [output])")
      ->required();
  sim->add_option("-o,--output", sim_output, "CSV path, '-' for stdout (overrides [output] path)");
  sim->add_option("-w,--workers", sim_workers, "worker threads (overrides config and env)")
      ->check(CLI::PositiveNumber);

  std::string oracle_kind, oracle_output = "-";
  OracleFlags oracle_flags;
  std::vector<double> oracle_times;
  double t_min = 0.0, t_max = 1.0;
  int count = 11, d_min = 2, d_max = 8;
  auto* orc = app.add_subcommand("oracle", "tabulate an analytic curve or the bound table");
  orc->add_option("kind", oracle_kind, "oracle kind")->required()->check(CLI::IsMember(oracle_kinds()));
  add_oracle_flags(orc, oracle_flags);
  orc->add_option("--times", oracle_times, "comma-separated times")->delimiter(',');
  orc->add_option("--t-min", t_min, "grid start");
  orc->add_option("--t-max", t_max, "grid end");
  orc->add_option("--count", count, "grid points")->check(CLI::PositiveNumber);
  orc->add_option("--d-min", d_min, "bounds: smallest D")->check(CLI::Range(2, 1000));
  orc->add_option("--d-max", d_max, "bounds: largest D")->check(CLI::Range(2, 1000));
  orc->add_option("-o,--output", oracle_output, "CSV path, '-' for stdout");

  int max_dim = 6;
  bool inject = false;
  std::uint64_t verify_seed = 1;
  auto* ver = app.add_subcommand("verify", "check the unbiased-basis identities and dL bounds");
  ver->add_option("--max-dimension", max_dim, "largest D (2..6)");
  ver->add_flag("--inject-fault", inject, "test mode: perturb every transform off the unbiased family");
  ver->add_option("--seed", verify_seed, "random seed for sampled states and phases");

  std::string fb_source, bare_source;
  double target = 0.0;
  OracleFlags speed_flags;
  auto* spd = app.add_subcommand("speedup", "t_bare / t_fb at a target impurity");
  spd->add_option("feedback", fb_source, "config path or oracle:<kind>")->required();
  spd->add_option("bare", bare_source, "config path or oracle:<kind>")->required();
  spd->add_option("--target", target, "target impurity")->required()->check(CLI::PositiveNumber);
  add_oracle_flags(spd, speed_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  const auto open_output = [](const std::string& path, std::ofstream& file) -> std::ostream& {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw ConfigError("output path: cannot open '" + path + "'");
    return file;
  };

  try {
    if (*sim) {
      auto cfg = load_experiment_config(sim_config);
      if (sim_workers > 0) cfg.sim.workers = sim_workers;
      const auto summary = run_ensemble(cfg.sim, cfg.strategy());
      const std::string path = sim_output.empty() ? cfg.output_path : sim_output;
      std::ofstream file;
      std::ostream& o = (path.empty() || path == "-") ? out : open_output(path, file);
      write_summary_csv(o, summary);
      if (summary.clip_fraction > 1e-3) {
        err << "warning: clip fraction " << format_double(summary.clip_fraction) << '\n';
      }
    } else if (*orc) {
      std::ofstream file;
      std::ostream& o = oracle_output == "-" ? out : open_output(oracle_output, file);
      if (oracle_kind == "bounds") {
        if (d_min > d_max) throw InvalidArgument("--d-min exceeds --d-max");
        write_bounds_csv(o, d_min, d_max);
      } else {
        const auto p = oracle_flags.params();
        std::vector<double> times = oracle_times.empty() ? linear_grid(t_min, t_max, count)
                                                         : oracle_times;
        std::vector<double> values;
        for (double t : times) values.push_back(oracle_value(oracle_kind, p, t));
        write_curve_csv(o, times, values);
      }
    } else if (*ver) {
      const auto lines = run_verification(max_dim, inject, verify_seed);
      write_verify_report(out, lines);
      std::vector<std::string> failed;
      for (const auto& l : lines) {
        if (!l.pass) failed.push_back(l.identity + " D=" + std::to_string(l.dimension));
      }
      if (!failed.empty()) {
        err << "verification failed:";
        for (const auto& f : failed) err << ' ' << f;
        err << '\n';
        return kExitVerification;
      }
      out << "all " << lines.size() << " checks passed\n";
    } else if (*spd) {
      const auto fb = load_source(fb_source, speed_flags, target);
      const auto bare = load_source(bare_source, speed_flags, target);
      const double tf = time_to_impurity(fb.curve, target);
      const double tb = time_to_impurity(bare.curve, target);
      out << "target  = " << format_double(target) << '\n';
      out << "t_fb    = " << format_double(tf) << '\n';
      out << "t_bare  = " << format_double(tb) << '\n';
      out << "S       = " << format_double(curve_speedup(fb.curve, bare.curve, target)) << '\n';
      const auto b = speedup_bounds(fb.dimension, fb.qubits);
      out << "asymptotic qudit bounds (D=" << fb.dimension << "): " << format_double(b.qudit_lower)
          << " <= S <= " << format_double(b.qudit_upper) << '\n';
      if (b.register_lower) {
        out << "asymptotic register bounds (n=" << *fb.qubits << "): lower-bound protocol S = "
            << format_double(*b.register_lower) << ", S <= " << format_double(*b.register_upper)
            << '\n';
      }
    }
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what();
    if (e.has_trajectory()) err << " (trajectory " << e.trajectory() << ", step " << e.step() << ')';
    err << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace qpurify::cli
