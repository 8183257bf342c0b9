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

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdflow/dynamics.hpp"
#include "pdflow/kernels.hpp"
#include "pdflow/linalg.hpp"

namespace pdflow {

struct StepperConfig {
  double rtol = 1e-6;
  double atol = 1e-9;
  double h_init = 1e-3;
  double h_max = 1.0;
  double safety = 0.9;
  std::int64_t max_steps = 10'000'000;
  // Node budget for the recorded trajectory. When exceeded, unpinned nodes
  // are thinned (every other one dropped, recording stride doubled); grid
  // nodes and the endpoints are always kept.
  std::size_t max_recorded_nodes = 100'000;

  void validate() const;
};

struct IntegrationStats {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t field_evals = 0;
  double max_accepted_err = 0.0;  // scaled norm, <= 1 by construction
  double final_h = 0.0;
};

class IntegrationError : public std::runtime_error {
 public:
  enum class Kind { max_steps, non_finite, step_underflow };
  IntegrationError(Kind kind, double t_last, const std::string& msg)
      : std::runtime_error(msg), kind_(kind), t_last_(t_last) {}
  Kind kind() const noexcept { return kind_; }
  double t_last() const noexcept { return t_last_; }

 private:
  Kind kind_;
  double t_last_;
};

/// Time-ordered samples of the flow with the field value at each node,
/// queryable anywhere in [t_front, t_back] through cubic Hermite
/// interpolation. Nodes are exact accepted-step endpoints, never
/// interpolated.
class Trajectory {
 public:
  Trajectory() = default;
  // dim is the flat state length; the flow layout [x | lambda | vx | vlambda]
  // has dim = 2(n+m), but the driver also serves plain ODE systems.
  explicit Trajectory(std::size_t n, std::size_t m = 0, std::size_t dim = 0)
      : n_(n), m_(m), dim_(dim == 0 ? 2 * (n + m) : dim) {}

  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t node_count() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }
  double t_front() const { return times_.front(); }
  double t_back() const { return times_.back(); }
  std::span<const double> times() const noexcept { return times_; }

  double time(std::size_t i) const { return times_[i]; }
  std::span<const double> state(std::size_t i) const {
    return {states_.data() + i * dim_, dim_};
  }
  std::span<const double> derivative(std::size_t i) const {
    return {derivs_.data() + i * dim_, dim_};
  }
  FlowState flow_state(std::size_t i) const {
    if (dim_ != 2 * (n_ + m_))
      throw std::logic_error("Trajectory::flow_state: not a flow-layout trajectory");
    return unpack_state(state(i), n_, m_, times_[i]);
  }

  /// Cubic Hermite evaluation at an arbitrary time in [t_front, t_back].
  Vector at(double t) const;
  FlowState flow_state_at(double t) const { return unpack_state(at(t), n_, m_, t); }

  /// Index of the node with time exactly t (grid times are hit exactly);
  /// throws std::out_of_range if absent.
  std::size_t node_index_of(double t) const;

  const IntegrationStats& stats() const noexcept { return stats_; }

  // Recording interface used by the integrator.
  void append_node(double t, std::span<const double> y, std::span<const double> f,
                   bool pinned);
  void thin_unpinned();
  IntegrationStats& mutable_stats() noexcept { return stats_; }

 private:
  std::size_t n_ = 0, m_ = 0, dim_ = 0;
  std::vector<double> times_;
  std::vector<double> states_;
  std::vector<double> derivs_;
  std::vector<char> pinned_;
  IntegrationStats stats_;
};

namespace detail {

inline bool all_finite(const double* v, std::size_t len) noexcept {
  for (std::size_t i = 0; i < len; ++i)
    if (!std::isfinite(v[i])) return false;
  return true;
}

}  // namespace detail

/// Scratch buffers for bs23_step.
struct Bs23Workspace {
  Vector k2, k3, k4, ytmp;
  explicit Bs23Workspace(std::size_t dim = 0) { resize(dim); }
  void resize(std::size_t dim) {
    k2.resize(dim);
    k3.resize(dim);
    k4.resize(dim);
    ytmp.resize(dim);
  }
};

/// One embedded 3(2) step from (t, y) with slope k1 = F(t, y) already
/// evaluated. Writes the third-order update into y_high and the difference
/// between the third- and second-order solutions into err. Leaves
/// F(t+h, y_high) in ws.k4 for first-same-as-last reuse. Throws
/// IntegrationError on a non-finite field evaluation.
template <class Field>
void bs23_step(Field&& field, double t, double h, std::span<const double> y,
               std::span<const double> k1, std::span<double> y_high,
               std::span<double> err, Bs23Workspace& ws) {
  const std::size_t d = y.size();
  double* k2 = ws.k2.data();
  double* k3 = ws.k3.data();
  double* k4 = ws.k4.data();
  double* yt = ws.ytmp.data();

  kernels::lincomb1(yt, y.data(), 0.5 * h, k1.data(), d);
  field(t + 0.5 * h, yt, k2);
  kernels::lincomb1(yt, y.data(), 0.75 * h, k2, d);
  field(t + 0.75 * h, yt, k3);
  constexpr double b1 = 2.0 / 9.0, b2 = 1.0 / 3.0, b3 = 4.0 / 9.0;
  kernels::lincomb3(y_high.data(), y.data(), h * b1, k1.data(), h * b2, k2, h * b3, k3, d);
  field(t + h, y_high.data(), k4);
  constexpr double e1 = -5.0 / 72.0, e2 = 1.0 / 12.0, e3 = 1.0 / 9.0, e4 = -1.0 / 8.0;
  kernels::weighted4(err.data(), h * e1, k1.data(), h * e2, k2, h * e3, k3, h * e4, k4, d);

  if (!detail::all_finite(y_high.data(), d) || !detail::all_finite(k4, d))
    throw IntegrationError(IntegrationError::Kind::non_finite, t,
                           "bs23_step: non-finite field evaluation at t = " + std::to_string(t));
}

/// Adaptive driver over an arbitrary field on a flat state. sample_grid
/// times (sorted, inside (t0, t_end]) are forced to be step endpoints and
/// their nodes are always recorded. Throws IntegrationError on failure.
template <class Field>
Trajectory integrate_adaptive(Field&& field, Vector y, double t0, double t_end,
                              const StepperConfig& cfg, std::span<const double> grid,
                              std::size_t n, std::size_t m) {
  cfg.validate();
  if (!(t0 > 0.0) || !(t_end > t0))
    throw std::invalid_argument("integrate: need 0 < t0 < t_end");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] <= t0 || grid[i] > t_end || (i > 0 && grid[i] <= grid[i - 1]))
      throw std::invalid_argument("integrate: sample grid must be sorted inside (t0, t_end]");
  }

  const std::size_t d = y.size();
  Trajectory traj(n, m, d);
  Bs23Workspace ws(d);
  Vector k1(d), y_high(d), err(d);
  IntegrationStats& st = traj.mutable_stats();

  field(t0, y.data(), k1.data());
  ++st.field_evals;
  if (!detail::all_finite(k1.data(), d))
    throw IntegrationError(IntegrationError::Kind::non_finite, t0,
                           "integrate: non-finite field at the initial state");
  traj.append_node(t0, y, k1, true);

  double t = t0;
  double h_prop = std::min(cfg.h_init, t_end - t0);
  std::size_t grid_idx = 0;
  std::int64_t record_stride = 1, since_record = 0;
  std::int64_t attempts = 0;

  while (t < t_end) {
    if (attempts >= cfg.max_steps)
      throw IntegrationError(IntegrationError::Kind::max_steps, t,
                             "integrate: max_steps exceeded at t = " + std::to_string(t));
    if (h_prop < 1e-12 * t)
      throw IntegrationError(IntegrationError::Kind::step_underflow, t,
                             "integrate: step size underflow at t = " + std::to_string(t));

    // Force the next step to end on the next grid time / horizon.
    double target = t_end;
    bool on_grid = false;
    if (grid_idx < grid.size() && grid[grid_idx] <= t_end) {
      target = grid[grid_idx];
      on_grid = true;
    }
    double h = std::min({h_prop, cfg.h_max, target - t});
    bool hits_target = (t + h >= target - 1e-14 * target);
    if (hits_target) h = target - t;

    ++attempts;
    bs23_step(field, t, h, y, k1, y_high, err, ws);
    st.field_evals += 3;
    const double err_norm =
        kernels::scaled_rms_error(err.data(), y.data(), d, cfg.atol, cfg.rtol);
    if (!std::isfinite(err_norm))
      throw IntegrationError(IntegrationError::Kind::non_finite, t,
                             "integrate: non-finite error estimate at t = " + std::to_string(t));

    double factor = err_norm > 0.0 ? cfg.safety * std::pow(err_norm, -1.0 / 3.0) : 5.0;
    factor = std::min(5.0, std::max(0.2, factor));

    if (err_norm <= 1.0) {
      t = hits_target ? target : t + h;
      y.swap(y_high);
      k1.swap(ws.k4);  // first-same-as-last
      ++st.accepted;
      st.max_accepted_err = std::max(st.max_accepted_err, err_norm);
      st.final_h = h;

      bool record = false, pinned = false;
      if (hits_target && on_grid) {
        ++grid_idx;
        record = pinned = true;
      } else if (t >= t_end) {
        record = pinned = true;
      } else if (++since_record >= record_stride) {
        record = true;
      }
      if (record) {
        traj.append_node(t, y, k1, pinned);
        since_record = 0;
        if (traj.node_count() >= cfg.max_recorded_nodes) {
          traj.thin_unpinned();
          record_stride *= 2;
        }
      }
    } else {
      ++st.rejected;
    }
    h_prop = h * factor;
  }
  return traj;
}

/// The flow-level entry point: first-order reduction of the full system from
/// `initial` (initial.t must equal params.t0) up to t_end.
Trajectory integrate(const ConstrainedProblem& problem, const ParameterSet& params,
                     const Schedule& beta, const Schedule& eps, SystemVariant variant,
                     const FlowState& initial, double t_end, const StepperConfig& cfg = {},
                     std::span<const double> sample_grid = {});

}  // namespace pdflow
