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

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pdflow/experiments.hpp"
#include "pdflow/kernels.hpp"

namespace {

using namespace pdflow;

struct Overrides {
  double t_end = -1.0;
  double rtol = -1.0;
  long long samples = -1;
  long long seed = -1;
  std::string variant;
};

void apply(const Overrides& ov, RunConfig& cfg) {
  if (ov.t_end > 0) cfg.t_end = ov.t_end;
  if (ov.rtol > 0) cfg.stepper.rtol = ov.rtol;
  if (ov.samples > 0) cfg.samples = static_cast<std::size_t>(ov.samples);
  if (ov.seed >= 0 && cfg.problem.kind == ProblemSource::Kind::generator)
    cfg.problem.generator.seed = static_cast<std::uint64_t>(ov.seed);
  if (!ov.variant.empty()) cfg.variant = variant_from_name(ov.variant);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void print_summary(const RunArtifact& art, const std::filesystem::path& out) {
  for (const auto& w : art.warnings) std::cerr << "warning: " << w << "\n";
  const auto& last = art.records.back();
  std::cout << art.config.label << ": regime " << regime_label_name(art.regime.label)
            << ", steps " << art.stats.accepted << " (+" << art.stats.rejected
            << " rejected), t = " << last.t << ", feasibility " << last.feasibility
            << ", obj residual " << last.obj_residual << ", |x - xbar| "
            << last.dist_min_norm << "\n";
  std::cout << "  artifacts: " << (out / (art.config.label + ".csv")).string() << " (+ "
            << ".meta.json, .rates.json)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Simulator and diagnostics for an inertial primal-dual flow with time scaling\n"
      "and a vanishing Tikhonov term, on linearly constrained quadratic programs"};
  app.require_subcommand(1);

  Overrides ov;
  std::string out_dir = "out";
  std::vector<std::string> config_paths;

  auto add_common = [&](CLI::App* sub, bool many_configs) {
    if (many_configs)
      sub->add_option("--config", config_paths, "run configuration JSON file(s)")
          ->required();
    else
      sub->add_option("--config", config_paths, "run configuration JSON file")
          ->expected(1)
          ->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--t-end", ov.t_end, "override integration horizon");
    sub->add_option("--rtol", ov.rtol, "override relative tolerance");
    sub->add_option("--samples", ov.samples, "override sample count");
    sub->add_option("--seed", ov.seed, "override generator seed");
    sub->add_option("--variant", ov.variant,
                    "override system variant (tikhonov-scaled | scaled | plain)");
  };

  auto* cmd_run = app.add_subcommand("run", "integrate one configuration and emit artifacts");
  add_common(cmd_run, false);

  auto* cmd_compare =
      app.add_subcommand("compare", "run several configurations on one problem side by side");
  add_common(cmd_compare, true);

  auto* cmd_check =
      app.add_subcommand("check", "classify a configuration's regime (no integration)");
  cmd_check->add_option("--config", config_paths, "run configuration JSON file")
      ->expected(1)
      ->required();

  std::string preset;
  auto* cmd_reproduce =
      app.add_subcommand("reproduce", "run a preset sweep (1a, 1b, 2a, 2b)");
  cmd_reproduce->add_option("preset", preset, "preset name")->required();
  cmd_reproduce->add_option("--out", out_dir, "output directory");
  cmd_reproduce->add_option("--t-end", ov.t_end, "override integration horizon");
  cmd_reproduce->add_option("--rtol", ov.rtol, "override relative tolerance");
  cmd_reproduce->add_option("--samples", ov.samples, "override sample count");
  cmd_reproduce->add_option("--seed", ov.seed, "override generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_run->parsed()) {
      RunConfig cfg = load_config(config_paths.front());
      apply(ov, cfg);
      RunArtifact art = run_single(cfg);
      write_artifact(art, out_dir);
      print_summary(art, out_dir);
    } else if (cmd_compare->parsed()) {
      std::vector<RunConfig> cfgs;
      for (const auto& path : config_paths) {
        cfgs.push_back(load_config(path));
        apply(ov, cfgs.back());
      }
      std::vector<RunArtifact> arts = run_many(cfgs);
      const std::string table = compare_table(arts);
      std::filesystem::create_directories(out_dir);
      const auto path = std::filesystem::path(out_dir) / "compare.csv";
      std::ofstream f(path, std::ios::binary);
      f << table;
      for (const auto& a : arts) write_artifact(a, out_dir);
      for (const auto& a : arts) print_summary(a, out_dir);
      std::cout << "comparison table: " << path.string() << "\n";
    } else if (cmd_check->parsed()) {
      RunConfig cfg = load_config(config_paths.front());
      std::cout << describe_regime(cfg);
    } else if (cmd_reproduce->parsed()) {
      std::vector<RunConfig> cfgs = reproduce_preset(preset);
      for (auto& cfg : cfgs) apply(ov, cfg);
      std::vector<RunArtifact> arts = run_many(cfgs);
      for (const auto& a : arts) {
        write_artifact(a, out_dir);
        print_summary(a, out_dir);
      }
    }
  } catch (const IntegrationError& e) {
    std::cerr << "integration failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
