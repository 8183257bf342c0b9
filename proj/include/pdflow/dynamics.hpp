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

#include <span>
#include <string_view>
#include <utility>

#include "pdflow/linalg.hpp"
#include "pdflow/problem.hpp"
#include "pdflow/schedules.hpp"

namespace pdflow {

/// Phase-space point of the flow in first-order form.
struct FlowState {
  double t = 1.0;
  Vector x;        // primal position
  Vector lambda;   // multiplier
  Vector vx;       // dx/dt
  Vector vlambda;  // dlambda/dt
};

/// tikhonov_scaled: the full flow (time scaling beta(t) and primal Tikhonov
///   term eps(t) x).
/// scaled: same with the Tikhonov term switched off (eps == 0).
/// plain: additionally beta == 1 (no time scaling).
/// The reduced variants are evaluated through the identical code path with
/// substituted constant schedules, so `scaled` output is bitwise equal to
/// tikhonov_scaled with a zero eps schedule, and `plain` to coefficients
/// (beta = 1, eps = 0).
enum class SystemVariant { tikhonov_scaled, scaled, plain };

std::string_view variant_name(SystemVariant v) noexcept;
SystemVariant variant_from_name(std::string_view name);

/// d/dt of (x, lambda, vx, vlambda):
///   ax    = -(alpha/t) vx - beta(t) (grad f(x) + A^T(lambda + theta t vlambda)
///            + rho A^T(Ax - b) + eps(t) x)
///   alam  = -(alpha/t) vlambda + beta(t) (A(x + theta t vx) - b)
struct PhaseVelocity {
  Vector vx;
  Vector vlambda;
  Vector ax;
  Vector alambda;
};

/// Pure evaluation of the vector field at one state. Reentrant.
PhaseVelocity rhs(const ConstrainedProblem& problem, const ParameterSet& params,
                  const Schedule& beta, const Schedule& eps, SystemVariant variant,
                  const FlowState& state);

/// The (beta, eps) pair a variant actually runs with: `scaled` substitutes a
/// zero eps, `plain` additionally a unit beta. Diagnostics of a variant run
/// must use these so energies match the integrated system.
std::pair<const Schedule*, const Schedule*> effective_schedules(SystemVariant variant,
                                                                const Schedule& beta,
                                                                const Schedule& eps);

/// Flat layout [x | lambda | vx | vlambda], length 2(n+m).
Vector pack_state(const FlowState& state);
FlowState unpack_state(std::span<const double> flat, std::size_t n, std::size_t m,
                       double t);

/// Callable adapter for the integrator: dydt = F(t, y) on the packed layout.
/// Owns scratch buffers, so use one instance per concurrent integration.
class FlowField {
 public:
  FlowField(const ConstrainedProblem& problem, const ParameterSet& params,
            const Schedule& beta, const Schedule& eps, SystemVariant variant);

  std::size_t dim() const noexcept { return 2 * (n_ + m_); }
  void operator()(double t, const double* y, double* dydt);

 private:
  const ConstrainedProblem* problem_;
  ParameterSet params_;
  const Schedule* beta_;
  const Schedule* eps_;
  std::size_t n_, m_;
  // [Q | A^T] stored as one n x (n+m) row-major block so the primal forcing
  // Qx + A^T w is a single matrix-vector pass.
  Matrix fused_;
  Vector r_, av_, xw_, g_;
};

}  // namespace pdflow
