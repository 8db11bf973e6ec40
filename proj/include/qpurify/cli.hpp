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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qpurify/analytics.hpp"
#include "qpurify/ensemble.hpp"
#include "qpurify/errors.hpp"
#include "qpurify/protocols.hpp"

namespace qpurify::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitNumerical = 2,
  kExitVerification = 3,
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class StrengthConvention { kGamma, kKappa };

enum class TransformChoice { kFourier, kFourierRandomPhase };

/// Parsed experiment file. Sections [system], [run], [protocol], [output].
struct ExperimentConfig {
  SimConfig sim;  // strength already converted to the run's convention
  StrengthConvention convention = StrengthConvention::kGamma;
  double strength_as_given = 1.0;
  StrategyKind kind = StrategyKind::kBare;
  TransformChoice transform = TransformChoice::kFourier;
  PermutationPolicy permutation_policy = PermutationPolicy::kResampleEachStep;
  std::uint64_t transform_seed = 0;
  std::string output_path;  // empty or "-" means stdout
  std::string output_format = "csv";

  FeedbackStrategy strategy() const;
};

/// Strength in the convention the simulation uses: gamma for qudits
/// (J_z eigenvalues), kappa for registers (+-1 eigenvalues); kappa = gamma / 4.
double convert_strength(double value, StrengthConvention given, bool register_run);

ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

/// %.17g, which round-trips every double.
std::string format_double(double v);

void write_summary_csv(std::ostream& out, const EnsembleSummary& summary);
void write_curve_csv(std::ostream& out, const std::vector<double>& t,
                     const std::vector<double>& l);
void write_bounds_csv(std::ostream& out, int d_min, int d_max);

/// Header plus rows of doubles.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(std::istream& in);

struct OracleParams {
  double strength = 1.0;
  StrengthConvention convention = StrengthConvention::kGamma;
  int dimension = 2;
  int qubits = 1;
  std::optional<double> l0;
  QubitInitialState initial{};
};

inline const std::vector<std::string>& oracle_kinds() {
  static const std::vector<std::string> kinds{
      "bare-qubit",          "bare-qudit",
      "jk",                  "fb-qubit",
      "fb-qudit-lower",      "register-bare-asymptote",
      "fb-register-lower",   "register-bare",
      "bounds"};
  return kinds;
}

/// L(t) for a curve oracle. Quadrature kinds return the initial impurity at
/// t = 0. Throws InvalidArgument for unknown kinds (and for "bounds").
double oracle_value(const std::string& kind, const OracleParams& p, double t);
/// Impurity at t = 0 of the oracle's system.
double oracle_initial(const std::string& kind, const OracleParams& p);

/// Curve on [0, t_max] where t_max is the first power of two with L below
/// `target`; keeps the evaluator for refinement.
ImpurityCurve oracle_curve(const std::string& kind, const OracleParams& p, double target);

struct VerifyLine {
  std::string identity;
  int dimension;
  double residual;
  double tolerance;
  bool pass;
  std::string note;
};

/// Unbiased-basis identity and bound checks, five identities per dimension in [2, max_dim].
/// `inject_fault` perturbs every unbiased transform by a small rotation.
std::vector<VerifyLine> run_verification(int max_dim, bool inject_fault, std::uint64_t seed);
void write_verify_report(std::ostream& out, const std::vector<VerifyLine>& lines);

/// Full command line: simulate | oracle | verify | speedup.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qpurify::cli
