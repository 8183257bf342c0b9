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

#include "pdflow/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace pdflow {

void StepperConfig::validate() const {
  if (!(rtol >= 1e-14)) throw std::invalid_argument("StepperConfig: rtol must be >= 1e-14");
  if (!(atol > 0.0)) throw std::invalid_argument("StepperConfig: atol must be > 0");
  if (!(h_init > 0.0) || !(h_max > 0.0) || !(safety > 0.0))
    throw std::invalid_argument("StepperConfig: h_init, h_max, safety must be > 0");
  if (max_steps <= 0) throw std::invalid_argument("StepperConfig: max_steps must be > 0");
  if (max_recorded_nodes < 16)
    throw std::invalid_argument("StepperConfig: max_recorded_nodes must be >= 16");
}

void Trajectory::append_node(double t, std::span<const double> y,
                             std::span<const double> f, bool pinned) {
  if (!times_.empty() && !(t > times_.back()))
    throw std::invalid_argument("Trajectory: node times must be strictly increasing");
  times_.push_back(t);
  states_.insert(states_.end(), y.begin(), y.end());
  derivs_.insert(derivs_.end(), f.begin(), f.end());
  pinned_.push_back(pinned ? 1 : 0);
}

void Trajectory::thin_unpinned() {
  const std::size_t count = times_.size();
  std::size_t out = 0;
  std::size_t unpinned_seen = 0;
  for (std::size_t i = 0; i < count; ++i) {
    bool keep = true;
    if (!pinned_[i] && i != 0 && i + 1 != count) keep = (unpinned_seen++ % 2) == 0;
    if (!keep) continue;
    if (out != i) {
      times_[out] = times_[i];
      pinned_[out] = pinned_[i];
      std::copy_n(states_.begin() + i * dim_, dim_, states_.begin() + out * dim_);
      std::copy_n(derivs_.begin() + i * dim_, dim_, derivs_.begin() + out * dim_);
    }
    ++out;
  }
  times_.resize(out);
  pinned_.resize(out);
  states_.resize(out * dim_);
  derivs_.resize(out * dim_);
}

Vector Trajectory::at(double t) const {
  if (empty()) throw std::out_of_range("Trajectory::at: empty trajectory");
  if (t < t_front() || t > t_back())
    throw std::out_of_range("Trajectory::at: query time outside [t_front, t_back]");

  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - times_.begin());
  if (hi == times_.size()) --hi;          // t == t_back
  const std::size_t lo = hi == 0 ? 0 : hi - 1;
  if (lo == hi || times_[lo] == t) return Vector(state(lo).begin(), state(lo).end());

  const double t0 = times_[lo], t1 = times_[hi];
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;

  auto y0 = state(lo), y1 = state(hi);
  auto f0 = derivative(lo), f1 = derivative(hi);
  Vector out(dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    out[i] = h00 * y0[i] + h * h10 * f0[i] + h01 * y1[i] + h * h11 * f1[i];
  return out;
}

std::size_t Trajectory::node_index_of(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.end() || *it != t)
    throw std::out_of_range("Trajectory::node_index_of: no node at the requested time");
  return static_cast<std::size_t>(it - times_.begin());
}

Trajectory integrate(const ConstrainedProblem& problem, const ParameterSet& params,
                     const Schedule& beta, const Schedule& eps, SystemVariant variant,
                     const FlowState& initial, double t_end, const StepperConfig& cfg,
                     std::span<const double> sample_grid) {
  params.validate();
  if (initial.t != params.t0)
    throw std::invalid_argument("integrate: initial.t must equal params.t0");
  if (initial.x.size() != problem.primal_dim() ||
      initial.lambda.size() != problem.dual_dim() ||
      initial.vx.size() != problem.primal_dim() ||
      initial.vlambda.size() != problem.dual_dim())
    throw std::invalid_argument("integrate: initial state dimensions do not match the problem");

  FlowField field(problem, params, beta, eps, variant);
  return integrate_adaptive(field, pack_state(initial), initial.t, t_end, cfg, sample_grid,
                            problem.primal_dim(), problem.dual_dim());
}

}  // namespace pdflow
