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

#include "pdflow/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace pdflow {

namespace {

double sq(double v) { return v * v; }

// L_rho(x, lam*) - L_rho(x*, lam*) evaluated in difference form; the direct
// subtraction of two O(|f|) Lagrangian values loses everything below
// eps_mach * |f| once the trajectory converges.
double aug_gap_value(const ConstrainedProblem& p, double rho, const Vector& x,
                     const PrimalDualPoint& saddle) {
  const Vector r = p.constraint_residual(x);
  const Vector rref = p.constraint_residual(saddle.x);
  double gap = p.objective().value_difference(x, saddle.x);
  gap += dot(saddle.lambda, r) - dot(saddle.lambda, rref);
  if (rho != 0.0) gap += 0.5 * rho * (sq(norm(r)) - sq(norm(rref)));
  return gap;
}

}  // namespace

double energy_E(const ConstrainedProblem& problem, const ParameterSet& params,
                const Schedule& beta, const Schedule& eps, const FlowState& state,
                const PrimalDualPoint& saddle) {
  const double t = state.t;
  const double bv = beta.value(t);
  const double ev = eps.value(t);
  const double theta = params.theta;

  const double gap = aug_gap_value(problem, params.rho, state.x, saddle);
  const double xn2 = sq(norm(state.x));

  double e = sq(theta) * sq(t) * bv * (gap + 0.5 * ev * xn2);

  double mix = 0.0;
  for (std::size_t i = 0; i < state.x.size(); ++i)
    mix += sq(state.x[i] - saddle.x[i] + theta * t * state.vx[i]);
  for (std::size_t i = 0; i < state.lambda.size(); ++i)
    mix += sq(state.lambda[i] - saddle.lambda[i] + theta * t * state.vlambda[i]);
  e += 0.5 * mix;

  const double anchor_coeff = 0.5 * ((params.alpha - 1.0) * theta - 1.0);
  e += anchor_coeff * (sq(distance(state.x, saddle.x)) +
                       sq(distance(state.lambda, saddle.lambda)));
  return e;
}

double energy_W(const ConstrainedProblem& problem, const ParameterSet& params,
                const Schedule& beta, const Schedule& eps, const FlowState& state,
                const PrimalDualPoint& saddle) {
  const double t = state.t;
  const double gap = aug_gap_value(problem, params.rho, state.x, saddle);
  const double xn2 = sq(norm(state.x));
  const double speed2 = sq(norm(state.vx)) + sq(norm(state.vlambda));
  return beta.value(t) * (gap + 0.5 * eps.value(t) * xn2) + 0.5 * speed2;
}

double anchor_h(const FlowState& state, const PrimalDualPoint& saddle) {
  return 0.5 * (sq(distance(state.x, saddle.x)) +
                sq(distance(state.lambda, saddle.lambda)));
}

DiagnosticRecord record(const ConstrainedProblem& problem, const ParameterSet& params,
                        const Schedule& beta, const Schedule& eps, const FlowState& state,
                        const PrimalDualPoint& saddle, const Vector& min_norm_solution) {
  DiagnosticRecord r;
  r.t = state.t;
  r.gap = aug_gap_value(problem, 0.0, state.x, saddle);
  r.aug_gap = aug_gap_value(problem, params.rho, state.x, saddle);
  r.feasibility = norm(problem.constraint_residual(state.x));
  r.obj_residual = std::fabs(problem.objective().value_difference(state.x, saddle.x));
  r.grad_residual = distance(problem.objective().gradient(state.x),
                             problem.objective().gradient(saddle.x));
  r.kkt_stationarity = norm(grad_x_auglag(problem, state.x, state.lambda, 0.0));
  r.speed = std::sqrt(sq(norm(state.vx)) + sq(norm(state.vlambda)));
  r.energy_E = energy_E(problem, params, beta, eps, state, saddle);
  r.energy_W = energy_W(problem, params, beta, eps, state, saddle);
  r.anchor_h = anchor_h(state, saddle);
  r.dist_min_norm = distance(state.x, min_norm_solution);
  r.x_norm = norm(state.x);
  return r;
}

double energy_E_bound_check(const Trajectory& traj, const ConstrainedProblem& problem,
                            const ParameterSet& params, const Schedule& beta,
                            const Schedule& eps, const PrimalDualPoint& saddle) {
  const std::size_t count = traj.node_count();
  if (count < 3)
    throw std::invalid_argument("energy_E_bound_check: need at least 3 trajectory nodes");

  std::vector<double> e(count);
  for (std::size_t i = 0; i < count; ++i)
    e[i] = energy_E(problem, params, beta, eps, traj.flow_state(i), saddle);

  const double xs2 = sq(norm(saddle.x));
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < count; ++i) {
    const double h1 = traj.time(i) - traj.time(i - 1);
    const double h2 = traj.time(i + 1) - traj.time(i);
    // Derivative of the quadratic through three nonuniform samples.
    const double fd = -h2 / (h1 * (h1 + h2)) * e[i - 1] +
                      (h2 - h1) / (h1 * h2) * e[i] +
                      h1 / (h2 * (h1 + h2)) * e[i + 1];
    const double t = traj.time(i);
    const double bound = 0.5 * params.theta * xs2 * t * beta.value(t) * eps.value(t);
    worst = std::max(worst, fd - bound);
  }
  return worst;
}

RateFit fit_rate(std::span<const double> times, std::span<const double> values,
                 double t_lo, double t_hi) {
  if (times.size() != values.size())
    throw std::invalid_argument("fit_rate: times/values size mismatch");
  if (!(t_lo < t_hi)) throw std::invalid_argument("fit_rate: need t_lo < t_hi");

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_lo || times[i] > t_hi) continue;
    if (!(values[i] > 1e-300)) continue;
    lx.push_back(std::log(times[i]));
    ly.push_back(std::log(values[i]));
  }
  if (lx.size() < 20)
    throw std::invalid_argument("fit_rate: fewer than 20 usable samples in the window");

  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += sq(lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += sq(ly[i] - my);
  }

  RateFit fit;
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  fit.count = lx.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? sq(sxy) / (sxx * syy) : 1.0;
  fit.reliable = fit.r_squared >= 0.9;
  return fit;
}

Vector decay_envelope(std::span<const double> values) {
  Vector env(values.size());
  double running = -std::numeric_limits<double>::infinity();
  for (std::size_t i = values.size(); i-- > 0;) {
    running = std::max(running, values[i]);
    env[i] = running;
  }
  return env;
}

Vector running_integral(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size())
    throw std::invalid_argument("running_integral: times/values size mismatch");
  Vector out(times.size(), 0.0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double dt = times[i] - times[i - 1];
    if (!(dt > 0.0))
      throw std::invalid_argument("running_integral: times must be strictly increasing");
    out[i] = out[i - 1] + 0.5 * dt * (values[i] + values[i - 1]);
  }
  return out;
}

double path_inequality_slack(const ConstrainedProblem& problem, const Schedule& eps,
                     const FlowState& state, double rho, const Vector& lambda_star,
                     const Vector& min_norm_solution) {
  const double ev = eps.value(state.t);
  if (!(ev > 0.0))
    throw std::domain_error("path_inequality_slack: eps(t) must be positive");

  const Vector x_eps = tikhonov_path_point(problem, rho, ev, lambda_star);
  auto l_eps = [&](const Vector& z) {
    return lagrangian(problem, z, lambda_star, rho) + 0.5 * ev * sq(norm(z));
  };
  const double rhs = l_eps(state.x) - l_eps(min_norm_solution);
  const double lhs = 0.5 * ev * (sq(distance(state.x, x_eps)) + sq(norm(x_eps)) -
                                 sq(norm(min_norm_solution)));
  return rhs - lhs;
}

std::vector<std::pair<double, double>> kkt_rate_series(std::span<const double> times,
                                                       std::span<const double> stationarity,
                                                       const Schedule& beta) {
  if (times.size() != stationarity.size())
    throw std::invalid_argument("kkt_rate_series: size mismatch");
  std::vector<std::pair<double, double>> out;
  out.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    out.emplace_back(t, std::sqrt(t) * std::pow(beta.value(t), 0.25) * stationarity[i]);
  }
  return out;
}

std::vector<std::pair<double, double>> kkt_rate_series(const Trajectory& traj,
                                                       const ConstrainedProblem& problem,
                                                       const Schedule& beta) {
  std::vector<double> times(traj.times().begin(), traj.times().end());
  std::vector<double> stat(traj.node_count());
  for (std::size_t i = 0; i < traj.node_count(); ++i) {
    const FlowState s = traj.flow_state(i);
    stat[i] = norm(grad_x_auglag(problem, s.x, s.lambda, 0.0));
  }
  return kkt_rate_series(times, stat, beta);
}

void write_csv(std::ostream& os, std::span<const DiagnosticRecord> records) {
  os << records_to_csv(records);
}

std::string records_to_csv(std::span<const DiagnosticRecord> records) {
  std::string out =
      "t,gap,aug_gap,feasibility,obj_residual,grad_residual,kkt_stationarity,"
      "speed,energy_E,energy_W,anchor_h,dist_min_norm,x_norm\n";
  char buf[32];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
    out += sep;
  };
  for (const auto& r : records) {
    put(r.t, ',');
    put(r.gap, ',');
    put(r.aug_gap, ',');
    put(r.feasibility, ',');
    put(r.obj_residual, ',');
    put(r.grad_residual, ',');
    put(r.kkt_stationarity, ',');
    put(r.speed, ',');
    put(r.energy_E, ',');
    put(r.energy_W, ',');
    put(r.anchor_h, ',');
    put(r.dist_min_norm, ',');
    put(r.x_norm, '\n');
  }
  return out;
}

}  // namespace pdflow
