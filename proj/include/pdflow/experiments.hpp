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
#include <filesystem>
#include <string>
#include <vector>

#include "pdflow/diagnostics.hpp"
#include "pdflow/dynamics.hpp"
#include "pdflow/integrator.hpp"
#include "pdflow/problem.hpp"
#include "pdflow/schedules.hpp"

namespace pdflow {

/// Invalid or inconsistent run configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GeneratorSpec {
  std::size_t n = 50, m = 20;
  std::uint64_t seed = 7;
  QpMode mode = QpMode::general;
};

struct Example2Spec {
  double d = 5.0, e = 1.0, v = 1.0;
};

struct ProblemSource {
  enum class Kind { generator, example2, file };
  Kind kind = Kind::generator;
  GeneratorSpec generator;
  Example2Spec example2;
  std::string file;

  ConstrainedProblem build() const;
};

/// Initial phase-space point. The default is the all-ones convention; an
/// explicit state overrides it componentwise.
struct InitialSpec {
  bool all_ones = true;
  Vector x, lambda, vx, vlambda;

  FlowState build(std::size_t n, std::size_t m, double t0) const;
};

struct RunConfig {
  std::string label = "run";
  ProblemSource problem;
  ParameterSet params{};
  PowerSchedule beta{1.0, 1.5};
  PowerSchedule eps{1.0, -4.0};
  SystemVariant variant = SystemVariant::tikhonov_scaled;
  InitialSpec initial;
  double t_end = 100.0;
  std::size_t samples = 400;
  StepperConfig stepper{};
};

/// Round-trippable JSON form; throws ConfigError on malformed input.
RunConfig config_from_json(const std::string& text);
std::string config_to_json(const RunConfig& cfg);

struct RunArtifact {
  RunConfig config;
  RegimeReport regime;
  SaddleCertificate saddle;
  Vector min_norm;
  std::vector<DiagnosticRecord> records;  // one per sample-grid time
  IntegrationStats stats;
  std::vector<std::string> warnings;
  std::string problem_json;  // the exact instance, reloadable via problem: {file: ...}

  std::string csv() const;            // diagnostics table
  std::string metadata_json() const;  // config echo + regime + oracles
  std::string rates_json() const;     // tail-window rate fits
};

/// samples log-spaced times with grid[0] = t0 and grid[samples-1] = t_end.
Vector log_spaced_grid(double t0, double t_end, std::size_t samples);

/// Integrates one configuration and evaluates diagnostics on its sample
/// grid. Deterministic: identical configs produce identical artifacts.
RunArtifact run_single(const RunConfig& cfg);

/// Writes <label>.csv, <label>.meta.json, <label>.rates.json under out_dir.
void write_artifact(const RunArtifact& artifact, const std::filesystem::path& out_dir);

/// Runs several configurations, fanning out across worker threads.
std::vector<RunArtifact> run_many(const std::vector<RunConfig>& cfgs,
                                  std::size_t workers = 0);

/// Side-by-side table (t, then obj_residual / feasibility / dist_min_norm
/// per run) for runs sharing one problem and sample grid; throws ConfigError
/// otherwise.
std::string compare_table(const std::vector<RunArtifact>& artifacts);

/// Human-readable regime report for a configuration (no integration).
std::string describe_regime(const RunConfig& cfg);

/// Preset sweeps: "1a" (random QP, scaling-exponent sweep plus the plain
/// variant), "1b" (orthogonal square constraint sweep), "2a" (rank-one
/// problem, regularization-decay sweep), "2b" (rank-one problem, full flow
/// against the eps = 0 variant on two coefficient sets).
std::vector<RunConfig> reproduce_preset(const std::string& name);

}  // namespace pdflow
