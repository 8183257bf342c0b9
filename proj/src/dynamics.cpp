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

#include "pdflow/dynamics.hpp"

#include <algorithm>
#include <stdexcept>

#include "pdflow/kernels.hpp"

namespace pdflow {

namespace {

const PowerSchedule& unit_schedule() {
  static const PowerSchedule s(1.0, 0.0);
  return s;
}

const PowerSchedule& zero_schedule() {
  static const PowerSchedule s(0.0, 0.0);
  return s;
}

// Variants reuse the identical evaluation path with substituted constant
// schedules; this is what makes the reduced systems bitwise-comparable to
// the full one.
void apply_variant(SystemVariant v, const Schedule*& beta, const Schedule*& eps) {
  switch (v) {
    case SystemVariant::tikhonov_scaled:
      break;
    case SystemVariant::scaled:
      eps = &zero_schedule();
      break;
    case SystemVariant::plain:
      beta = &unit_schedule();
      eps = &zero_schedule();
      break;
  }
}

}  // namespace

std::pair<const Schedule*, const Schedule*> effective_schedules(SystemVariant variant,
                                                                const Schedule& beta,
                                                                const Schedule& eps) {
  const Schedule* b = &beta;
  const Schedule* e = &eps;
  apply_variant(variant, b, e);
  return {b, e};
}

std::string_view variant_name(SystemVariant v) noexcept {
  switch (v) {
    case SystemVariant::tikhonov_scaled: return "tikhonov-scaled";
    case SystemVariant::scaled: return "scaled";
    case SystemVariant::plain: return "plain";
  }
  return "tikhonov-scaled";
}

SystemVariant variant_from_name(std::string_view name) {
  if (name == "tikhonov-scaled") return SystemVariant::tikhonov_scaled;
  if (name == "scaled") return SystemVariant::scaled;
  if (name == "plain") return SystemVariant::plain;
  throw std::invalid_argument("unknown system variant: " + std::string(name));
}

PhaseVelocity rhs(const ConstrainedProblem& problem, const ParameterSet& params,
                  const Schedule& beta, const Schedule& eps, SystemVariant variant,
                  const FlowState& state) {
  if (!(state.t > 0.0)) throw std::domain_error("rhs: state.t must be > 0");
  FlowField field(problem, params, beta, eps, variant);
  const Vector y = pack_state(state);
  Vector dy(y.size());
  field(state.t, y.data(), dy.data());

  const std::size_t n = problem.primal_dim();
  const std::size_t m = problem.dual_dim();
  PhaseVelocity out;
  out.vx.assign(dy.begin(), dy.begin() + n);
  out.vlambda.assign(dy.begin() + n, dy.begin() + n + m);
  out.ax.assign(dy.begin() + n + m, dy.begin() + 2 * n + m);
  out.alambda.assign(dy.begin() + 2 * n + m, dy.end());
  return out;
}

Vector pack_state(const FlowState& state) {
  Vector flat;
  flat.reserve(2 * (state.x.size() + state.lambda.size()));
  flat.insert(flat.end(), state.x.begin(), state.x.end());
  flat.insert(flat.end(), state.lambda.begin(), state.lambda.end());
  flat.insert(flat.end(), state.vx.begin(), state.vx.end());
  flat.insert(flat.end(), state.vlambda.begin(), state.vlambda.end());
  return flat;
}

FlowState unpack_state(std::span<const double> flat, std::size_t n, std::size_t m,
                       double t) {
  if (flat.size() != 2 * (n + m))
    throw std::invalid_argument("unpack_state: flat vector has wrong length");
  FlowState s;
  s.t = t;
  s.x.assign(flat.begin(), flat.begin() + n);
  s.lambda.assign(flat.begin() + n, flat.begin() + n + m);
  s.vx.assign(flat.begin() + n + m, flat.begin() + 2 * n + m);
  s.vlambda.assign(flat.begin() + 2 * n + m, flat.end());
  return s;
}

FlowField::FlowField(const ConstrainedProblem& problem, const ParameterSet& params,
                     const Schedule& beta, const Schedule& eps, SystemVariant variant)
    : problem_(&problem),
      params_(params),
      beta_(&beta),
      eps_(&eps),
      n_(problem.primal_dim()),
      m_(problem.dual_dim()),
      fused_(n_, n_ + m_),
      r_(m_),
      av_(m_),
      xw_(n_ + m_),
      g_(n_) {
  params_.validate();
  apply_variant(variant, beta_, eps_);
  const Matrix& Q = problem.objective().Q();
  const Matrix& A = problem.A();
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) fused_(i, j) = Q(i, j);
    for (std::size_t k = 0; k < m_; ++k) fused_(i, n_ + k) = A(k, i);
  }
}

void FlowField::operator()(double t, const double* y, double* dydt) {
  const std::size_t n = n_, m = m_;
  const double* x = y;
  const double* lam = y + n;
  const double* u = y + n + m;
  const double* v = y + 2 * n + m;

  const double beta = beta_->value(t);
  const double epsv = eps_->value(t);
  const double at = params_.alpha / t;
  const double tt = params_.theta * t;
  const double rho = params_.rho;

  const Matrix& A = problem_->A();
  const Vector& q = problem_->objective().q();
  const Vector& b = problem_->b();

  std::copy(x, x + n, xw_.begin());
  if (m > 0) {
    kernels::matvec2(A.data(), m, n, x, u, r_.data(), av_.data());
    for (std::size_t i = 0; i < m; ++i) r_[i] -= b[i];
    // multiplier argument lambda + theta t vlambda plus the penalty pull
    for (std::size_t i = 0; i < m; ++i) xw_[n + i] = lam[i] + tt * v[i] + rho * r_[i];
  }
  kernels::matvec(fused_.data(), n, n + m, xw_.data(), g_.data());

  for (std::size_t i = 0; i < n; ++i) dydt[i] = u[i];
  for (std::size_t i = 0; i < m; ++i) dydt[n + i] = v[i];
  double* ax = dydt + n + m;
  for (std::size_t i = 0; i < n; ++i)
    ax[i] = -at * u[i] - beta * (g_[i] + q[i] + epsv * x[i]);
  double* al = dydt + 2 * n + m;
  for (std::size_t i = 0; i < m; ++i) al[i] = -at * v[i] + beta * (r_[i] + tt * av_[i]);
}

}  // namespace pdflow
