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

#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "pdflow/experiments.hpp"
#include "pdflow/integrator.hpp"
#include "pdflow/kernels.hpp"

using namespace pdflow;

namespace {

using Field = std::function<void(double, const double*, double*)>;

// One fixed-step sweep of the embedded pair over [t0, t1].
Vector fixed_step_solve(const Field& field, Vector y, double t0, double t1, double h) {
  const std::size_t d = y.size();
  Bs23Workspace ws(d);
  Vector k1(d), y_high(d), err(d);
  double t = t0;
  field(t, y.data(), k1.data());
  while (t < t1 - 1e-12) {
    const double step = std::min(h, t1 - t);
    bs23_step(field, t, step, y, k1, y_high, err, ws);
    y = y_high;
    k1 = ws.k4;
    t += step;
  }
  return y;
}

FlowState example2_start() {
  FlowState s;
  s.t = 1.0;
  s.x = {1.0, 1.0, -1.0};
  s.lambda = {1.0};
  s.vx = {1.0, 1.0, 1.0};
  s.vlambda = {1.0};
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("integrator");

TEST_CASE("config validation") {
  StepperConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.rtol = 1e-15;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.atol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.max_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("bs23 step on flat and constant-slope fields") {
  const std::size_t d = 3;
  Bs23Workspace ws(d);
  Vector y{1.0, -2.0, 0.5}, k1(d), y_high(d), err(d);

  Field zero = [](double, const double*, double* dy) { std::fill(dy, dy + 3, 0.0); };
  zero(1.0, y.data(), k1.data());
  bs23_step(zero, 1.0, 0.37, y, k1, y_high, err, ws);
  CHECK(y_high == y);
  CHECK(err == Vector(d, 0.0));

  Field one = [](double, const double*, double* dy) { std::fill(dy, dy + 3, 1.0); };
  one(1.0, y.data(), k1.data());
  bs23_step(one, 1.0, 0.37, y, k1, y_high, err, ws);
  for (std::size_t i = 0; i < d; ++i) {
    CHECK(y_high[i] == doctest::Approx(y[i] + 0.37).epsilon(1e-15));
    CHECK(std::fabs(err[i]) < 1e-16);
  }
}

TEST_CASE("third-order convergence on exponential decay") {
  Field decay = [](double, const double* y, double* dy) { dy[0] = -y[0]; };
  const double exact = std::exp(-1.0);
  double prev_err = 0.0;
  int level = 0;
  for (double h : {0.1, 0.05, 0.025}) {
    const Vector yT = fixed_step_solve(decay, Vector{1.0}, 1.0, 2.0, h);
    const double e = std::fabs(yT[0] - exact);
    if (level > 0) {
      const double ratio = prev_err / e;
      CHECK(ratio >= 6.0);
      CHECK(ratio <= 10.0);
    }
    prev_err = e;
    ++level;
  }
}

TEST_CASE("harmonic oscillator completes one period") {
  Field osc = [](double, const double* y, double* dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  const double t0 = 1.0, t1 = 1.0 + 2.0 * std::numbers::pi;
  Trajectory traj = integrate_adaptive(osc, Vector{1.0, 0.0}, t0, t1, StepperConfig{}, {}, 1, 0);
  const auto yT = traj.state(traj.node_count() - 1);
  CHECK(std::fabs(yT[0] - 1.0) < 1e-4);
  CHECK(std::fabs(yT[1]) < 1e-4);
  CHECK(traj.stats().max_accepted_err <= 1.0);
}

TEST_CASE("equilibrium start stays put") {
  const ConstrainedProblem p = example2_problem(5.0, 1.0, 1.0);
  const ParameterSet params{13.0, 1.0 / 8.0, 1.0, 1.0};
  const PowerSchedule beta(1.0, 0.9), eps(2.8, -1.0);
  const SaddleCertificate cert = solve_saddle_point(p);
  FlowState s;
  s.t = 1.0;
  s.x = cert.point.x;
  s.lambda = cert.point.lambda;
  s.vx.assign(3, 0.0);
  s.vlambda.assign(1, 0.0);
  Trajectory traj = integrate(p, params, beta, eps, SystemVariant::scaled, s, 20.0);
  const Vector start = pack_state(s);
  for (std::size_t i : {std::size_t(0), traj.node_count() / 2, traj.node_count() - 1}) {
    const auto y = traj.state(i);
    for (std::size_t j = 0; j < y.size(); ++j)
      CHECK(std::fabs(y[j] - start[j]) <= 1e-9);
  }
}

TEST_CASE("bitwise deterministic reruns") {
  const ConstrainedProblem p = generate_random_qp(8, 3, 5, QpMode::general);
  const ParameterSet params{15.0, 1.0 / 13.0, 1.0, 1.0};
  const PowerSchedule beta(1.0, 1.5), eps(1.0, -4.0);
  FlowState s;
  s.t = 1.0;
  s.x.assign(8, 1.0);
  s.lambda.assign(3, 1.0);
  s.vx.assign(8, 1.0);
  s.vlambda.assign(3, 1.0);
  const Vector grid = log_spaced_grid(1.0, 10.0, 20);
  const auto sub = std::span<const double>(grid).subspan(1);
  Trajectory a = integrate(p, params, beta, eps, SystemVariant::tikhonov_scaled, s, 10.0,
                           StepperConfig{}, sub);
  Trajectory b = integrate(p, params, beta, eps, SystemVariant::tikhonov_scaled, s, 10.0,
                           StepperConfig{}, sub);
  REQUIRE(a.node_count() == b.node_count());
  CHECK(a.stats().accepted == b.stats().accepted);
  for (std::size_t i = 0; i < a.node_count(); ++i) {
    CHECK(a.time(i) == b.time(i));
    const auto ya = a.state(i), yb = b.state(i);
    for (std::size_t j = 0; j < ya.size(); ++j) CHECK(ya[j] == yb[j]);
  }
}

TEST_CASE("accepted error stays within tolerance and grid times are exact") {
  const ConstrainedProblem p = generate_random_qp(6, 2, 11, QpMode::general);
  const ParameterSet params{15.0, 1.0 / 13.0, 1.0, 1.0};
  const PowerSchedule beta(1.0, 1.0), eps(1.0, -4.0);
  FlowState s;
  s.t = 1.0;
  s.x.assign(6, 1.0);
  s.lambda.assign(2, 1.0);
  s.vx.assign(6, 1.0);
  s.vlambda.assign(2, 1.0);
  const Vector grid = log_spaced_grid(1.0, 25.0, 40);
  Trajectory traj = integrate(p, params, beta, eps, SystemVariant::tikhonov_scaled, s, 25.0,
                              StepperConfig{}, std::span<const double>(grid).subspan(1));
  CHECK(traj.stats().max_accepted_err <= 1.0);
  for (double g : grid) CHECK(traj.time(traj.node_index_of(g)) == g);
  for (std::size_t i = 1; i < traj.node_count(); ++i)
    CHECK(traj.time(i) > traj.time(i - 1));
}

TEST_CASE("hermite interpolation is exact at nodes and fourth-order between them") {
  // synthetic exact nodes isolate the interpolant from integration error
  auto synthetic = [](double h) {
    Trajectory traj(1, 0, 1);
    for (double t = 1.0; t < 3.0 + 1e-12; t += h)
      traj.append_node(t, Vector{std::sin(t)}, Vector{std::cos(t)}, true);
    return traj;
  };
  auto interp_err = [](const Trajectory& traj) {
    double worst = 0.0;
    for (int k = 0; k <= 400; ++k) {
      const double t = 1.0 + (traj.t_back() - 1.0) * k / 400.0;
      worst = std::max(worst, std::fabs(traj.at(t)[0] - std::sin(t)));
    }
    return worst;
  };
  const Trajectory coarse = synthetic(0.2);
  for (std::size_t i = 0; i < coarse.node_count(); ++i)
    CHECK(coarse.at(coarse.time(i))[0] == coarse.state(i)[0]);
  const double e_coarse = interp_err(coarse);
  const double ratio = e_coarse / interp_err(synthetic(0.1));
  CHECK(e_coarse < 1e-5);
  // local error O(h^4): halving the spacing gains about 16x
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
  CHECK_THROWS_AS(coarse.at(0.5), std::out_of_range);
  CHECK_THROWS_AS(coarse.at(3.5), std::out_of_range);

  // on an integrated trajectory the interpolant tracks the true solution to
  // roughly the integration tolerance
  Field decay = [](double, const double* y, double* dy) { dy[0] = -y[0]; };
  Trajectory traj = integrate_adaptive(decay, Vector{1.0}, 1.0, 3.0, StepperConfig{}, {}, 1, 0);
  double worst = 0.0;
  for (int k = 0; k <= 400; ++k) {
    const double t = 1.0 + 2.0 * k / 400.0;
    worst = std::max(worst, std::fabs(traj.at(t)[0] - std::exp(-(t - 1.0))));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("tolerance robustness on the rank-one flow") {
  const ConstrainedProblem p = example2_problem(5.0, 1.0, 1.0);
  const ParameterSet params{13.0, 1.0 / 8.0, 1.0, 1.0};
  const PowerSchedule beta(1.0, 0.9), eps(2.8, -1.0);
  StepperConfig loose;
  StepperConfig tight;
  tight.rtol = 1e-8;
  tight.atol = 1e-11;
  Trajectory a = integrate(p, params, beta, eps, SystemVariant::tikhonov_scaled,
                           example2_start(), 100.0, loose);
  Trajectory b = integrate(p, params, beta, eps, SystemVariant::tikhonov_scaled,
                           example2_start(), 100.0, tight);
  const auto ya = a.state(a.node_count() - 1);
  const auto yb = b.state(b.node_count() - 1);
  Vector diff(ya.size());
  for (std::size_t i = 0; i < ya.size(); ++i) diff[i] = ya[i] - yb[i];
  // endpoint shift measured in the loose run's own tolerance norm
  CHECK(kernels::scaled_rms_error(diff.data(), yb.data(), diff.size(), loose.atol,
                                  loose.rtol) < 10.0);
}

TEST_CASE("failure modes") {
  Field decay = [](double, const double* y, double* dy) { dy[0] = -y[0]; };
  StepperConfig tiny;
  tiny.max_steps = 3;
  CHECK_THROWS_AS(integrate_adaptive(decay, Vector{1.0}, 1.0, 100.0, tiny, {}, 1, 0),
                  IntegrationError);
  try {
    integrate_adaptive(decay, Vector{1.0}, 1.0, 100.0, tiny, {}, 1, 0);
  } catch (const IntegrationError& e) {
    CHECK(e.kind() == IntegrationError::Kind::max_steps);
    CHECK(e.t_last() >= 1.0);
  }

  Field blows = [](double t, const double* y, double* dy) {
    dy[0] = t > 2.0 ? std::numeric_limits<double>::quiet_NaN() : y[0];
  };
  try {
    integrate_adaptive(blows, Vector{1.0}, 1.0, 5.0, StepperConfig{}, {}, 1, 0);
    CHECK(false);
  } catch (const IntegrationError& e) {
    CHECK(e.kind() == IntegrationError::Kind::non_finite);
    CHECK(e.t_last() <= 2.1);
  }

  // rapid discontinuous switching defeats the error controller entirely
  Field chatter = [](double t, const double*, double* dy) {
    dy[0] = std::sin(1e7 * t) > 0 ? 1e8 : -1e8;
  };
  try {
    integrate_adaptive(chatter, Vector{0.0}, 1.0, 2.0, StepperConfig{}, {}, 1, 0);
    CHECK(false);
  } catch (const IntegrationError& e) {
    const bool expected = e.kind() == IntegrationError::Kind::step_underflow ||
                          e.kind() == IntegrationError::Kind::max_steps;
    CHECK(expected);
  }

  CHECK_THROWS_AS(integrate_adaptive(decay, Vector{1.0}, -1.0, 2.0, StepperConfig{}, {}, 1, 0),
                  std::invalid_argument);
}

TEST_CASE("scalar kernel lane drives the integrator to the same attractor") {
  const ConstrainedProblem p = example2_problem(5.0, 1.0, 1.0);
  const ParameterSet params{13.0, 1.0 / 8.0, 1.0, 1.0};
  const PowerSchedule beta(1.0, 0.9), eps(2.8, -1.0);
  auto endpoint = [&](kernels::Backend b) {
    REQUIRE(kernels::select_backend(b));
    Trajectory traj = integrate(p, params, beta, eps, SystemVariant::tikhonov_scaled,
                                example2_start(), 60.0);
    const auto y = traj.state(traj.node_count() - 1);
    return Vector(y.begin(), y.end());
  };
  const kernels::Backend previous = kernels::active_backend();
  const Vector scalar_end = endpoint(kernels::Backend::scalar);
  CHECK(norm(std::span<const double>(scalar_end.data(), 3)) < 1e-6);
  if (kernels::backend_available(kernels::Backend::avx2)) {
    const Vector simd_end = endpoint(kernels::Backend::avx2);
    // different rounding, same attractor
    CHECK(distance(scalar_end, simd_end) < 1e-6);
  }
  kernels::select_backend(previous);
}

TEST_CASE("node budget thins interior nodes but keeps pinned ones") {
  Field osc = [](double, const double* y, double* dy) {
    dy[0] = y[1];
    dy[1] = -25.0 * y[0];
  };
  StepperConfig cfg;
  cfg.max_recorded_nodes = 32;
  const Vector grid{2.0, 4.0, 8.0, 16.0};
  Trajectory traj = integrate_adaptive(osc, Vector{1.0, 0.0}, 1.0, 20.0, cfg, grid, 1, 0);
  CHECK(traj.node_count() <= 33);
  for (double g : grid) CHECK_NOTHROW(traj.node_index_of(g));
  CHECK(traj.t_front() == 1.0);
  CHECK(traj.t_back() == 20.0);
}

TEST_SUITE_END();
