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

#include "pdflow/experiments.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pdflow/kernels.hpp"

namespace pdflow {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string qp_mode_name(QpMode mode) {
  return mode == QpMode::general ? "general" : "orthogonal-square";
}

QpMode qp_mode_from_name(const std::string& name) {
  if (name == "general") return QpMode::general;
  if (name == "orthogonal-square") return QpMode::orthogonal_square;
  throw ConfigError("unknown generator mode: " + name);
}

ordered_json schedule_json(const PowerSchedule& s) {
  return ordered_json{{"coeff", s.coefficient()}, {"exponent", s.exponent()}};
}

PowerSchedule schedule_from_json(const nlohmann::json& j, const PowerSchedule& fallback) {
  if (j.is_null()) return fallback;
  return PowerSchedule(j.value("coeff", fallback.coefficient()),
                       j.value("exponent", fallback.exponent()));
}

ordered_json regime_json(const RegimeReport& r) {
  return ordered_json{{"label", std::string(regime_label_name(r.label))},
                      {"assumption1", r.assumption1},
                      {"assumption2", r.assumption2},
                      {"scaling_condition", r.scaling_condition},
                      {"strict_scaling", r.strict_scaling},
                      {"integrable_over_t", r.integrable_over_t},
                      {"fast_integrable", r.fast_integrable},
                      {"slow_divergent", r.slow_divergent}};
}

ordered_json fit_json(const RateFit& f) {
  return ordered_json{{"slope", f.slope},         {"intercept", f.intercept},
                      {"r_squared", f.r_squared}, {"reliable", f.reliable},
                      {"count", f.count},         {"window", {f.t_lo, f.t_hi}}};
}

}  // namespace

ConstrainedProblem ProblemSource::build() const {
  switch (kind) {
    case Kind::generator:
      return generate_random_qp(generator.n, generator.m, generator.seed, generator.mode);
    case Kind::example2:
      return example2_problem(example2.d, example2.e, example2.v);
    case Kind::file: {
      std::ifstream in(file);
      if (!in) throw ConfigError("cannot open problem file: " + file);
      std::stringstream ss;
      ss << in.rdbuf();
      return problem_from_json(ss.str());
    }
  }
  throw ConfigError("invalid problem source");
}

FlowState InitialSpec::build(std::size_t n, std::size_t m, double t0) const {
  FlowState s;
  s.t = t0;
  if (all_ones) {
    s.x.assign(n, 1.0);
    s.lambda.assign(m, 1.0);
    s.vx.assign(n, 1.0);
    s.vlambda.assign(m, 1.0);
    return s;
  }
  if (x.size() != n || lambda.size() != m || vx.size() != n || vlambda.size() != m)
    throw ConfigError("initial state dimensions do not match the problem");
  s.x = x;
  s.lambda = lambda;
  s.vx = vx;
  s.vlambda = vlambda;
  return s;
}

RunConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  try {
    RunConfig cfg;
    cfg.label = j.value("label", cfg.label);
    if (j.contains("problem")) {
      const auto& p = j.at("problem");
      if (p.contains("generator")) {
        cfg.problem.kind = ProblemSource::Kind::generator;
        const auto& g = p.at("generator");
        cfg.problem.generator.n = g.value("n", cfg.problem.generator.n);
        cfg.problem.generator.m = g.value("m", cfg.problem.generator.m);
        cfg.problem.generator.seed = g.value("seed", cfg.problem.generator.seed);
        cfg.problem.generator.mode =
            qp_mode_from_name(g.value("mode", std::string("general")));
      } else if (p.contains("example2")) {
        cfg.problem.kind = ProblemSource::Kind::example2;
        const auto& e = p.at("example2");
        cfg.problem.example2.d = e.value("d", cfg.problem.example2.d);
        cfg.problem.example2.e = e.value("e", cfg.problem.example2.e);
        cfg.problem.example2.v = e.value("v", cfg.problem.example2.v);
      } else if (p.contains("file")) {
        cfg.problem.kind = ProblemSource::Kind::file;
        cfg.problem.file = p.at("file").get<std::string>();
      } else {
        throw ConfigError("problem must be one of generator/example2/file");
      }
    }
    cfg.params.alpha = j.value("alpha", cfg.params.alpha);
    cfg.params.theta = j.value("theta", cfg.params.theta);
    cfg.params.rho = j.value("rho", cfg.params.rho);
    cfg.params.t0 = j.value("t0", cfg.params.t0);
    cfg.beta = schedule_from_json(j.value("beta", nlohmann::json()), cfg.beta);
    cfg.eps = schedule_from_json(j.value("eps", nlohmann::json()), cfg.eps);
    if (j.contains("variant"))
      cfg.variant = variant_from_name(j.at("variant").get<std::string>());
    if (j.contains("initial")) {
      const auto& ini = j.at("initial");
      if (ini.is_string()) {
        if (ini.get<std::string>() != "ones")
          throw ConfigError("initial must be \"ones\" or an explicit state");
        cfg.initial.all_ones = true;
      } else {
        cfg.initial.all_ones = false;
        cfg.initial.x = ini.at("x").get<Vector>();
        cfg.initial.lambda = ini.at("lambda").get<Vector>();
        cfg.initial.vx = ini.at("vx").get<Vector>();
        cfg.initial.vlambda = ini.at("vlambda").get<Vector>();
      }
    }
    cfg.t_end = j.value("t_end", cfg.t_end);
    cfg.samples = j.value("samples", cfg.samples);
    if (j.contains("stepper")) {
      const auto& s = j.at("stepper");
      cfg.stepper.rtol = s.value("rtol", cfg.stepper.rtol);
      cfg.stepper.atol = s.value("atol", cfg.stepper.atol);
      cfg.stepper.h_init = s.value("h_init", cfg.stepper.h_init);
      cfg.stepper.h_max = s.value("h_max", cfg.stepper.h_max);
      cfg.stepper.safety = s.value("safety", cfg.stepper.safety);
      cfg.stepper.max_steps = s.value("max_steps", cfg.stepper.max_steps);
      cfg.stepper.max_recorded_nodes =
          s.value("max_recorded_nodes", cfg.stepper.max_recorded_nodes);
    }
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config error: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config error: ") + e.what());
  }
}

std::string config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["label"] = cfg.label;
  switch (cfg.problem.kind) {
    case ProblemSource::Kind::generator:
      j["problem"] = {{"generator",
                       ordered_json{{"n", cfg.problem.generator.n},
                                    {"m", cfg.problem.generator.m},
                                    {"seed", cfg.problem.generator.seed},
                                    {"mode", qp_mode_name(cfg.problem.generator.mode)}}}};
      break;
    case ProblemSource::Kind::example2:
      j["problem"] = {{"example2", ordered_json{{"d", cfg.problem.example2.d},
                                                {"e", cfg.problem.example2.e},
                                                {"v", cfg.problem.example2.v}}}};
      break;
    case ProblemSource::Kind::file:
      j["problem"] = {{"file", cfg.problem.file}};
      break;
  }
  j["alpha"] = cfg.params.alpha;
  j["theta"] = cfg.params.theta;
  j["rho"] = cfg.params.rho;
  j["t0"] = cfg.params.t0;
  j["beta"] = schedule_json(cfg.beta);
  j["eps"] = schedule_json(cfg.eps);
  j["variant"] = std::string(variant_name(cfg.variant));
  if (cfg.initial.all_ones) {
    j["initial"] = "ones";
  } else {
    j["initial"] = ordered_json{{"x", cfg.initial.x},
                                {"lambda", cfg.initial.lambda},
                                {"vx", cfg.initial.vx},
                                {"vlambda", cfg.initial.vlambda}};
  }
  j["t_end"] = cfg.t_end;
  j["samples"] = cfg.samples;
  j["stepper"] = ordered_json{{"rtol", cfg.stepper.rtol},
                              {"atol", cfg.stepper.atol},
                              {"h_init", cfg.stepper.h_init},
                              {"h_max", cfg.stepper.h_max},
                              {"safety", cfg.stepper.safety},
                              {"max_steps", cfg.stepper.max_steps},
                              {"max_recorded_nodes", cfg.stepper.max_recorded_nodes}};
  return j.dump(2);
}

Vector log_spaced_grid(double t0, double t_end, std::size_t samples) {
  if (samples < 2) throw ConfigError("log_spaced_grid: need at least 2 samples");
  if (!(t0 > 0.0) || !(t_end > t0)) throw ConfigError("log_spaced_grid: need 0 < t0 < t_end");
  Vector g(samples);
  const double l0 = std::log(t0), l1 = std::log(t_end);
  for (std::size_t i = 0; i < samples; ++i)
    g[i] = std::exp(l0 + (l1 - l0) * static_cast<double>(i) /
                             static_cast<double>(samples - 1));
  g.front() = t0;
  g.back() = t_end;
  return g;
}

RunArtifact run_single(const RunConfig& cfg) {
  try {
    cfg.params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(cfg.t_end > cfg.params.t0)) throw ConfigError("run: t_end must exceed t0");

  RunArtifact art;
  art.config = cfg;

  ConstrainedProblem problem = cfg.problem.build();
  art.problem_json = problem_to_json(problem);
  // classify what actually runs: reduced variants substitute their schedules
  const auto [cls_beta, cls_eps] = effective_schedules(cfg.variant, cfg.beta, cfg.eps);
  art.regime = classify_regime(cfg.params, *cls_beta, *cls_eps);
  if (!art.regime.assumption1)
    art.warnings.push_back("damping/regularization assumptions not satisfied (exploratory run)");
  if (!art.regime.scaling_condition)
    art.warnings.push_back("scaling condition violated; rate guarantees do not apply");

  art.saddle = solve_saddle_point(problem);
  art.min_norm = minimal_norm_solution(problem);

  const Vector grid = log_spaced_grid(cfg.params.t0, cfg.t_end, cfg.samples);
  const FlowState initial =
      cfg.initial.build(problem.primal_dim(), problem.dual_dim(), cfg.params.t0);

  Trajectory traj =
      integrate(problem, cfg.params, cfg.beta, cfg.eps, cfg.variant, initial, cfg.t_end,
                cfg.stepper, std::span<const double>(grid).subspan(1));
  art.stats = traj.stats();

  const auto [beta_eff, eps_eff] = effective_schedules(cfg.variant, cfg.beta, cfg.eps);
  art.records.reserve(grid.size());
  for (double t : grid) {
    const FlowState s = traj.flow_state(traj.node_index_of(t));
    art.records.push_back(
        record(problem, cfg.params, *beta_eff, *eps_eff, s, art.saddle.point, art.min_norm));
  }
  return art;
}

std::string RunArtifact::csv() const { return records_to_csv(records); }

std::string RunArtifact::metadata_json() const {
  ordered_json j;
  j["label"] = config.label;
  j["backend"] = std::string(kernels::backend_name(kernels::active_backend()));
  j["config"] = ordered_json::parse(config_to_json(config));
  j["regime"] = regime_json(regime);
  j["saddle"] = ordered_json{{"x", saddle.point.x},
                             {"lambda", saddle.point.lambda},
                             {"stationarity_residual", saddle.stationarity_residual},
                             {"feasibility_residual", saddle.feasibility_residual},
                             {"rank_deficient", saddle.rank_deficient}};
  j["min_norm_solution"] = min_norm;
  j["integration"] = ordered_json{{"accepted", stats.accepted},
                                  {"rejected", stats.rejected},
                                  {"field_evals", stats.field_evals},
                                  {"max_accepted_err", stats.max_accepted_err},
                                  {"final_h", stats.final_h}};
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

std::string RunArtifact::rates_json() const {
  std::vector<double> t, feas, obj, gap, stat, speed;
  for (const auto& r : records) {
    t.push_back(r.t);
    feas.push_back(r.feasibility);
    obj.push_back(r.obj_residual);
    gap.push_back(r.gap);
    stat.push_back(r.kkt_stationarity);
    speed.push_back(r.speed);
  }
  const double t_hi = config.t_end;
  const double t_lo = std::max(config.params.t0, t_hi / 10.0);

  ordered_json j;
  j["window"] = {t_lo, t_hi};
  auto add = [&](const char* name, const std::vector<double>& v, bool envelope) {
    try {
      const Vector data = envelope ? decay_envelope(v) : Vector(v.begin(), v.end());
      j[name] = fit_json(fit_rate(t, data, t_lo, t_hi));
      j[name]["envelope"] = envelope;
    } catch (const std::invalid_argument&) {
      j[name] = nullptr;
    }
  };
  add("feasibility", feas, true);
  add("obj_residual", obj, true);
  add("kkt_stationarity", stat, true);
  add("gap", gap, false);
  add("speed", speed, false);
  return j.dump(2) + "\n";
}

void write_artifact(const RunArtifact& artifact, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto base = out_dir / artifact.config.label;
  {
    std::ofstream f(base.string() + ".csv", std::ios::binary);
    f << artifact.csv();
  }
  {
    std::ofstream f(base.string() + ".meta.json", std::ios::binary);
    f << artifact.metadata_json();
  }
  {
    std::ofstream f(base.string() + ".rates.json", std::ios::binary);
    f << artifact.rates_json();
  }
  {
    std::ofstream f(base.string() + ".problem.json", std::ios::binary);
    f << artifact.problem_json << "\n";
  }
}

std::vector<RunArtifact> run_many(const std::vector<RunConfig>& cfgs, std::size_t workers) {
  if (workers == 0) {
    workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }
  std::vector<RunArtifact> out(cfgs.size());
  std::size_t next = 0;
  while (next < cfgs.size()) {
    const std::size_t batch = std::min(workers, cfgs.size() - next);
    std::vector<std::future<RunArtifact>> futures;
    futures.reserve(batch);
    for (std::size_t k = 0; k < batch; ++k) {
      const RunConfig& cfg = cfgs[next + k];
      futures.push_back(std::async(std::launch::async, [&cfg] { return run_single(cfg); }));
    }
    for (std::size_t k = 0; k < batch; ++k) out[next + k] = futures[k].get();
    next += batch;
  }
  return out;
}

std::string compare_table(const std::vector<RunArtifact>& artifacts) {
  if (artifacts.empty()) throw ConfigError("compare: no runs");
  const std::string problem_ref = [&] {
    ordered_json j = ordered_json::parse(config_to_json(artifacts.front().config));
    return j["problem"].dump();
  }();
  const auto& first = artifacts.front();
  for (const auto& a : artifacts) {
    ordered_json j = ordered_json::parse(config_to_json(a.config));
    if (j["problem"].dump() != problem_ref)
      throw ConfigError("compare: runs use different problems");
    if (a.records.size() != first.records.size() ||
        a.config.params.t0 != first.config.params.t0 || a.config.t_end != first.config.t_end)
      throw ConfigError("compare: runs use different sample grids");
  }

  std::string out = "t";
  for (const auto& a : artifacts) {
    out += ",obj_residual_" + a.config.label;
    out += ",feasibility_" + a.config.label;
    out += ",dist_min_norm_" + a.config.label;
  }
  out += '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
  };
  for (std::size_t i = 0; i < first.records.size(); ++i) {
    put(first.records[i].t);
    for (const auto& a : artifacts) {
      out += ',';
      put(a.records[i].obj_residual);
      out += ',';
      put(a.records[i].feasibility);
      out += ',';
      put(a.records[i].dist_min_norm);
    }
    out += '\n';
  }
  return out;
}

std::string describe_regime(const RunConfig& cfg) {
  const auto [beta_eff, eps_eff] = effective_schedules(cfg.variant, cfg.beta, cfg.eps);
  const RegimeReport r = classify_regime(cfg.params, *beta_eff, *eps_eff);
  std::ostringstream os;
  os << "label:               " << regime_label_name(r.label) << '\n'
     << "assumption1:         " << (r.assumption1 ? "yes" : "no") << '\n'
     << "assumption2:         " << (r.assumption2 ? "yes" : "no") << '\n'
     << "scaling condition:   " << (r.scaling_condition ? "yes" : "no") << '\n'
     << "strict scaling:      " << (r.strict_scaling ? "yes" : "no") << '\n'
     << "int beta*eps/t < oo: " << (r.integrable_over_t ? "yes" : "no") << '\n'
     << "int t*beta*eps < oo: " << (r.fast_integrable ? "yes" : "no") << '\n'
     << "t^2*beta*eps -> oo:  " << (r.slow_divergent ? "yes" : "no") << '\n';
  return os.str();
}

std::vector<RunConfig> reproduce_preset(const std::string& name) {
  std::vector<RunConfig> cfgs;
  auto label_of = [](std::string base, double value) {
    std::string v = std::to_string(value);
    v.erase(v.find_last_not_of('0') + 1);
    if (!v.empty() && v.back() == '.') v.pop_back();
    for (auto& c : v)
      if (c == '.') c = 'p';
    return base + v;
  };

  if (name == "1a") {
    RunConfig base;
    base.problem.kind = ProblemSource::Kind::generator;
    base.problem.generator = {50, 20, 7, QpMode::general};
    base.params = {15.0, 1.0 / 13.0, 1.0, 1.0};
    base.eps = PowerSchedule(1.0, -4.0);
    for (double r2 : {1.0, 1.5, 1.8}) {
      RunConfig c = base;
      c.beta = PowerSchedule(1.0, r2);
      c.label = label_of("qp50x20-full-r2_", r2);
      cfgs.push_back(c);
    }
    RunConfig plain = base;
    plain.variant = SystemVariant::plain;
    plain.label = "qp50x20-plain";
    cfgs.push_back(plain);
    return cfgs;
  }

  if (name == "1b") {
    for (std::size_t n : {std::size_t(10), std::size_t(50)}) {
      RunConfig base;
      base.problem.kind = ProblemSource::Kind::generator;
      base.problem.generator = {n, n, 7, QpMode::orthogonal_square};
      base.params = {15.0, 1.0 / 13.0, 1.0, 1.0};
      base.eps = PowerSchedule(1.0, -4.0);
      for (double r2 : {1.0, 1.5, 1.8}) {
        RunConfig c = base;
        c.beta = PowerSchedule(1.0, r2);
        c.label = label_of("qp" + std::to_string(n) + "orth-full-r2_", r2);
        cfgs.push_back(c);
      }
    }
    return cfgs;
  }

  auto example2_base = [](double d, double e, double v) {
    RunConfig c;
    c.problem.kind = ProblemSource::Kind::example2;
    c.problem.example2 = {d, e, v};
    c.params = {13.0, 1.0 / 8.0, 1.0, 1.0};
    c.beta = PowerSchedule(1.0, 0.9);
    c.eps = PowerSchedule(2.8, -1.0);
    c.initial.all_ones = false;
    c.initial.x = {1.0, 1.0, -1.0};
    c.initial.lambda = {1.0};
    c.initial.vx = {1.0, 1.0, 1.0};
    c.initial.vlambda = {1.0};
    return c;
  };

  if (name == "2a") {
    for (double r1 : {1.0, 1.9, 2.4}) {
      RunConfig c = example2_base(5.0, 1.0, 1.0);
      c.eps = PowerSchedule(2.8, -r1);
      c.label = label_of("rank1-full-r1_", r1);
      cfgs.push_back(c);
    }
    return cfgs;
  }

  if (name == "2b") {
    struct Coeffs {
      double d, e, v;
      const char* tag;
    };
    for (const auto& co : {Coeffs{5.0, 1.0, 1.0, "d5"}, Coeffs{120.0, 5.0, 25.0, "d120"}}) {
      RunConfig full = example2_base(co.d, co.e, co.v);
      full.label = std::string("rank1-") + co.tag + "-full";
      cfgs.push_back(full);
      RunConfig noreg = example2_base(co.d, co.e, co.v);
      noreg.variant = SystemVariant::scaled;
      noreg.label = std::string("rank1-") + co.tag + "-noreg";
      cfgs.push_back(noreg);
    }
    return cfgs;
  }

  throw ConfigError("unknown preset: " + name + " (expected 1a, 1b, 2a or 2b)");
}

}  // namespace pdflow
