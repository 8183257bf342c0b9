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

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "pdflow/dynamics.hpp"
#include "pdflow/integrator.hpp"
#include "pdflow/problem.hpp"
#include "pdflow/schedules.hpp"

namespace pdflow {

/// Every monitored quantity at one sample. gap and aug_gap use a fixed
/// saddle multiplier and are nonnegative up to round-off; everything else is
/// nonnegative by construction.
struct DiagnosticRecord {
  double t = 0.0;
  double gap = 0.0;               // L(x, lam*) - L(x*, lam*)
  double aug_gap = 0.0;           // same with the rho penalty
  double feasibility = 0.0;       // |Ax - b|
  double obj_residual = 0.0;      // |f(x) - f(x*)|
  double grad_residual = 0.0;     // |grad f(x) - grad f(x*)|
  double kkt_stationarity = 0.0;  // |grad f(x) + A^T lambda|
  double speed = 0.0;             // |(dx/dt, dlambda/dt)|
  double energy_E = 0.0;
  double energy_W = 0.0;
  double anchor_h = 0.0;          // 0.5 |(x,lambda) - (x*,lambda*)|^2
  double dist_min_norm = 0.0;     // |x - min-norm solution|
  double x_norm = 0.0;
};

/// Least-squares fit of ln(value) against ln(t) over a window. reliable is
/// false when r^2 < 0.9, in which case the slope should not be read as an
/// empirical order.
struct RateFit {
  double t_lo = 0.0, t_hi = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t count = 0;
  bool reliable = false;
};

/// The anchored energy
///   E(t) = theta^2 t^2 beta(t) (L_rho(x,lam*) - L_rho(x*,lam*)
///          + eps(t)/2 |x|^2)
///        + 1/2 |x - x* + theta t vx|^2 + 1/2 |lam - lam* + theta t vlam|^2
///        + ((alpha-1) theta - 1)/2 (|x - x*|^2 + |lam - lam*|^2).
/// Nonnegative whenever (alpha-1) theta >= 1.
double energy_E(const ConstrainedProblem& problem, const ParameterSet& params,
                const Schedule& beta, const Schedule& eps, const FlowState& state,
                const PrimalDualPoint& saddle);

/// W(t) = beta(t) (L_rho(x,lam*) - L_rho(x*,lam*) + eps(t)/2 |x|^2)
///        + 1/2 |(vx, vlam)|^2.
double energy_W(const ConstrainedProblem& problem, const ParameterSet& params,
                const Schedule& beta, const Schedule& eps, const FlowState& state,
                const PrimalDualPoint& saddle);

double anchor_h(const FlowState& state, const PrimalDualPoint& saddle);

DiagnosticRecord record(const ConstrainedProblem& problem, const ParameterSet& params,
                        const Schedule& beta, const Schedule& eps, const FlowState& state,
                        const PrimalDualPoint& saddle, const Vector& min_norm_solution);

/// Max over interior trajectory nodes of
///   dE/dt (3-point finite difference) - (theta |x*|^2 / 2) t beta(t) eps(t).
/// The descent property makes this nonpositive up to finite-difference
/// noise on compliant configurations. Needs at least 3 nodes.
double energy_E_bound_check(const Trajectory& traj, const ConstrainedProblem& problem,
                            const ParameterSet& params, const Schedule& beta,
                            const Schedule& eps, const PrimalDualPoint& saddle);

/// Fits ln(value) ~ slope * ln(t) + intercept over t in [t_lo, t_hi].
/// Values <= 1e-300 are dropped; fewer than 20 usable samples throws.
RateFit fit_rate(std::span<const double> times, std::span<const double> values,
                 double t_lo, double t_hi);

/// Nonincreasing upper envelope: env[i] = max(values[i:]). Used to fit
/// oscillatory residuals against their O(.) bound.
Vector decay_envelope(std::span<const double> values);

/// Cumulative trapezoid of (times, values); entry 0 is 0. Throws on
/// non-increasing times.
Vector running_integral(std::span<const double> times, std::span<const double> values);

/// Signed slack of the strong-convexity inequality tying the state to the
/// regularization path:
///   [L_eps(x) - L_eps(xbar*)] - eps/2 (|x - x_eps|^2 + |x_eps|^2 - |xbar*|^2)
/// with eps = eps(t) evaluated at the state's time and x_eps the path point.
/// Nonnegative up to round-off. Throws std::domain_error when eps(t) <= 0.
double path_inequality_slack(const ConstrainedProblem& problem, const Schedule& eps,
                     const FlowState& state, double rho, const Vector& lambda_star,
                     const Vector& min_norm_solution);

/// (t, sqrt(t) beta(t)^{1/4} |grad f(x) + A^T lambda|) per sample; a series
/// decaying to zero evidences the stationarity rate.
std::vector<std::pair<double, double>> kkt_rate_series(std::span<const double> times,
                                                       std::span<const double> stationarity,
                                                       const Schedule& beta);
std::vector<std::pair<double, double>> kkt_rate_series(const Trajectory& traj,
                                                       const ConstrainedProblem& problem,
                                                       const Schedule& beta);

/// CSV with a header row, columns in DiagnosticRecord order, 17 significant
/// digits.
void write_csv(std::ostream& os, std::span<const DiagnosticRecord> records);
std::string records_to_csv(std::span<const DiagnosticRecord> records);

}  // namespace pdflow
