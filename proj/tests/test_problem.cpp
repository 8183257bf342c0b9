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

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "pdflow/kernels.hpp"
#include "pdflow/problem.hpp"

using namespace pdflow;

namespace {

// min 0.5|x|^2 s.t. x1 + x2 = 2; solution x* = (1,1), lambda* = -1.
ConstrainedProblem simple_qp() {
  Matrix A(1, 2);
  A(0, 0) = 1.0;
  A(0, 1) = 1.0;
  return ConstrainedProblem(QuadraticObjective(Matrix::identity(2), Vector(2, 0.0)),
                            std::move(A), Vector{2.0});
}

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace

TEST_SUITE_BEGIN("problem");

TEST_CASE("objective validation and Lipschitz constant") {
  Matrix bad = Matrix::identity(2);
  bad(0, 1) = 1e-6;
  CHECK_THROWS_AS(QuadraticObjective(bad, Vector(2, 0.0)), std::invalid_argument);

  Matrix indefinite = Matrix::identity(2);
  indefinite(1, 1) = -1e-6;
  CHECK_THROWS_AS(QuadraticObjective(indefinite, Vector(2, 0.0)), std::invalid_argument);

  CHECK(QuadraticObjective(Matrix::identity(3), Vector(3, 0.0)).lipschitz() ==
        doctest::Approx(1.0).epsilon(1e-12));
  // rank-one objective: L = 2|c|^2 = 6 for c = (1,1,1)
  CHECK(example2_problem(1.0, 1.0, 1.0).objective().lipschitz() ==
        doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("grad_f") {
  const ConstrainedProblem p = simple_qp();
  CHECK(grad_f(p, Vector{0.0, 0.0}) == Vector{0.0, 0.0});

  const ConstrainedProblem ex2 = example2_problem(5.0, 1.0, 1.0);
  const Vector g = grad_f(ex2, Vector{1.0, 0.0, -5.0});
  for (double gi : g) CHECK(gi == doctest::Approx(0.0).epsilon(1e-12));

  Matrix Q(2, 2);
  Q(0, 0) = 2.0;
  Q(1, 1) = 4.0;
  Matrix A(1, 2);
  A(0, 0) = 1.0;
  ConstrainedProblem p2(QuadraticObjective(std::move(Q), Vector{1.0, -1.0}), std::move(A),
                        Vector{0.0});
  CHECK(grad_f(p2, Vector{1.0, 1.0}) == Vector{3.0, 3.0});

  CHECK_THROWS_AS(grad_f(p, Vector{1.0}), std::invalid_argument);
}

TEST_CASE("lagrangian") {
  const ConstrainedProblem p = simple_qp();
  // feasible point: the constraint terms vanish for any lambda, rho
  const Vector feasible{0.5, 1.5};
  const double f = p.objective().value(feasible);
  for (double rho : {0.0, 1.0, 7.0})
    CHECK(lagrangian(p, feasible, Vector{3.3}, rho) == doctest::Approx(f).epsilon(1e-14));

  const ConstrainedProblem ex2 = example2_problem(5.0, 1.0, 1.0);
  CHECK(lagrangian(ex2, Vector{0.0, 0.0, 0.0}, Vector{1.0}, 1.0) == 0.0);

  // 0 + 1*(0-2) + 0.5*4 = 0
  CHECK(lagrangian(p, Vector{0.0, 0.0}, Vector{1.0}, 1.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(lagrangian(p, Vector{0.0, 0.0}, Vector{1.0, 2.0}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(lagrangian(p, Vector{0.0, 0.0}, Vector{1.0}, -1.0), std::invalid_argument);
}

TEST_CASE("value_difference avoids cancellation and matches direct form") {
  std::mt19937_64 rng(77);
  const ConstrainedProblem p = generate_random_qp(10, 4, 21, QpMode::general);
  std::normal_distribution<double> g;
  for (int i = 0; i < 20; ++i) {
    Vector a(10), b(10);
    for (auto& z : a) z = g(rng);
    for (auto& z : b) z = g(rng);
    const double direct = p.objective().value(a) - p.objective().value(b);
    CHECK(rel_err(p.objective().value_difference(a, b), direct) < 1e-12);
  }
  CHECK(p.objective().value_difference(Vector(10, 0.5), Vector(10, 0.5)) == 0.0);
}

TEST_CASE("grad_x_auglag") {
  const ConstrainedProblem ex2 = example2_problem(5.0, 1.0, 1.0);
  const Vector g = grad_x_auglag(ex2, Vector{1.0, 1.0, -1.0}, Vector{1.0}, 1.0);
  CHECK(g[0] == doctest::Approx(70.0).epsilon(1e-13));
  CHECK(g[1] == doctest::Approx(6.0).epsilon(1e-13));
  CHECK(g[2] == doctest::Approx(14.0).epsilon(1e-13));

  // at a saddle point the full gradient vanishes for any rho
  const ConstrainedProblem p = simple_qp();
  const SaddleCertificate cert = solve_saddle_point(p);
  for (double rho : {0.0, 1.0, 5.0}) {
    for (double gi : grad_x_auglag(p, cert.point.x, cert.point.lambda, rho))
      CHECK(std::fabs(gi) < 1e-10);
  }

  // zero problem
  Matrix zq(2, 2), za(1, 2);
  ConstrainedProblem zero(QuadraticObjective(std::move(zq), Vector(2, 0.0)), std::move(za),
                          Vector{0.0});
  CHECK(grad_x_auglag(zero, Vector{3.0, -4.0}, Vector{5.0}, 2.0) == Vector{0.0, 0.0});
}

TEST_CASE("grad_x_auglag matches finite differences of the lagrangian") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  const ConstrainedProblem p = generate_random_qp(8, 3, 19, QpMode::general);
  for (int trial = 0; trial < 5; ++trial) {
    Vector x(8), lam(3);
    for (auto& z : x) z = g(rng);
    for (auto& z : lam) z = g(rng);
    const double rho = 0.5 + trial;
    const Vector grad = grad_x_auglag(p, x, lam, rho);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double h = 2e-6 * std::max(1.0, std::fabs(x[i]));
      Vector xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (lagrangian(p, xp, lam, rho) - lagrangian(p, xm, lam, rho)) / (2 * h);
      CHECK(rel_err(grad[i], fd) < 1e-6);
    }
  }
}

TEST_CASE("kkt_residuals") {
  const ConstrainedProblem ex2 = example2_problem(5.0, 1.0, 1.0);
  auto [stat, feas] = kkt_residuals(ex2, {Vector{1.0, 0.0, -5.0}, Vector{0.0}});
  CHECK(stat == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(feas == doctest::Approx(0.0).epsilon(1e-12));

  const ConstrainedProblem p = simple_qp();
  auto [s2, f2] = kkt_residuals(p, {Vector{1.0, 1.0}, Vector{-1.0}});
  CHECK(s2 == doctest::Approx(0.0));
  CHECK(f2 == doctest::Approx(0.0));

  // lambda = 0 gives the raw gradient and constraint norms
  auto [s3, f3] = kkt_residuals(p, {Vector{3.0, 4.0}, Vector{0.0}});
  CHECK(s3 == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(f3 == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("solve_saddle_point") {
  const ConstrainedProblem p = simple_qp();
  const SaddleCertificate cert = solve_saddle_point(p);
  CHECK(cert.point.x[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(cert.point.x[1] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(cert.point.lambda[0] == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK_FALSE(cert.rank_deficient);

  // the certificate's residuals are recomputable
  auto [stat, feas] = kkt_residuals(p, cert.point);
  CHECK(stat == cert.stationarity_residual);
  CHECK(feas == cert.feasibility_residual);
  const double scale = 1e-8 * (1.0 + norm(p.objective().q()) + norm(p.b()));
  CHECK(cert.stationarity_residual <= scale);
  CHECK(cert.feasibility_residual <= scale);

  // singular KKT system: solution set is a line, flagged and resolved to a
  // point on it
  const ConstrainedProblem ex2 = example2_problem(5.0, 1.0, 1.0);
  const SaddleCertificate c2 = solve_saddle_point(ex2);
  CHECK(c2.rank_deficient);
  CHECK(std::fabs(c2.point.x[1]) < 1e-9);
  CHECK(c2.point.x[2] == doctest::Approx(-5.0 * c2.point.x[0]).epsilon(1e-9));
  CHECK(std::fabs(c2.point.lambda[0]) < 1e-9);
  CHECK(c2.stationarity_residual < 1e-8);
  CHECK(c2.feasibility_residual < 1e-8);

  // unconstrained strictly convex: x* = -q
  ConstrainedProblem unc(QuadraticObjective(Matrix::identity(3), Vector{1.0, -2.0, 0.5}),
                         Matrix(), Vector{});
  const SaddleCertificate c3 = solve_saddle_point(unc);
  CHECK(c3.point.x[0] == doctest::Approx(-1.0));
  CHECK(c3.point.x[1] == doctest::Approx(2.0));
  CHECK(c3.point.lambda.empty());

  // unconstrained linear objective has no stationary point
  Matrix zero2(2, 2);
  ConstrainedProblem bad(QuadraticObjective(std::move(zero2), Vector{1.0, 0.0}), Matrix(),
                         Vector{});
  CHECK_THROWS_WITH_AS(solve_saddle_point(bad),
                       doctest::Contains("stationarity"), std::runtime_error);
}

TEST_CASE("minimal_norm_solution") {
  CHECK(norm(minimal_norm_solution(example2_problem(5.0, 1.0, 1.0))) < 1e-6);
  CHECK(norm(minimal_norm_solution(example2_problem(1.0, 1.0, 1.0))) < 1e-6);
  CHECK(norm(minimal_norm_solution(example2_problem(120.0, 5.0, 25.0))) < 1e-6);

  // strictly convex: the unique solution
  const ConstrainedProblem qp = generate_random_qp(12, 5, 3, QpMode::general);
  const Vector mn = minimal_norm_solution(qp);
  const Vector xs = solve_saddle_point(qp).point.x;
  CHECK(distance(mn, xs) < 1e-6);
}

TEST_CASE("tikhonov_path_point") {
  const ConstrainedProblem p = simple_qp();
  const Vector lam{-1.0};
  const Vector x1 = tikhonov_path_point(p, 1.0, 1.0, lam);
  CHECK(x1[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(x1[1] == doctest::Approx(0.75).epsilon(1e-12));

  // closed form 3/(3+eps) per coordinate
  for (double eps : {1e-1, 1e-3, 1e-6}) {
    const Vector xe = tikhonov_path_point(p, 1.0, eps, lam);
    CHECK(xe[0] == doctest::Approx(3.0 / (3.0 + eps)).epsilon(1e-11));
  }

  // large eps pushes the point to the origin
  CHECK(norm(tikhonov_path_point(p, 1.0, 1e8, lam)) < 1e-7);

  CHECK_THROWS_AS(tikhonov_path_point(p, 1.0, 0.0, lam), std::invalid_argument);
  CHECK_THROWS_AS(tikhonov_path_point(p, 0.0, 1.0, lam), std::invalid_argument);

  // stationarity contract of the returned point
  const ConstrainedProblem qp = generate_random_qp(15, 6, 9, QpMode::general);
  const SaddleCertificate cert = solve_saddle_point(qp);
  for (double eps : {1.0, 1e-4, 1e-8}) {
    const Vector xe = tikhonov_path_point(qp, 1.0, eps, cert.point.lambda);
    Vector g = grad_x_auglag(qp, xe, cert.point.lambda, 1.0);
    kernels::axpy(eps, xe, g);
    CHECK(norm(g) <= 1e-10 * (1.0 + norm(qp.objective().q())));
  }
}

TEST_CASE("tikhonov path norm bound and monotone trend") {
  std::vector<ConstrainedProblem> problems;
  problems.push_back(example2_problem(5.0, 1.0, 1.0));
  problems.push_back(generate_random_qp(10, 4, 1, QpMode::general));
  problems.push_back(generate_random_qp(14, 6, 2, QpMode::general));
  problems.push_back(generate_random_qp(9, 9, 3, QpMode::orthogonal_square));

  for (const auto& p : problems) {
    const SaddleCertificate cert = solve_saddle_point(p);
    const Vector mn = minimal_norm_solution(p);
    const double mn_norm = norm(mn);
    double prev_dist = -1.0;
    for (double eps : {1.0, 1e-1, 1e-2, 1e-3, 1e-4}) {
      const Vector xe = tikhonov_path_point(p, 1.0, eps, cert.point.lambda);
      CHECK(norm(xe) <= mn_norm + 1e-9 * (1.0 + mn_norm));
      const double dist = distance(xe, mn);
      if (prev_dist >= 0.0) CHECK(dist <= prev_dist + 1e-9);
      prev_dist = dist;
    }
  }
}

TEST_CASE("generate_random_qp determinism and structure") {
  const ConstrainedProblem a = generate_random_qp(20, 8, 7, QpMode::general);
  const ConstrainedProblem b = generate_random_qp(20, 8, 7, QpMode::general);
  CHECK(a.objective().Q().storage() == b.objective().Q().storage());
  CHECK(a.objective().q() == b.objective().q());
  CHECK(a.A().storage() == b.A().storage());
  CHECK(a.b() == b.b());
  const ConstrainedProblem c = generate_random_qp(20, 8, 8, QpMode::general);
  CHECK(a.objective().q() != c.objective().q());

  // Q = H^T H + 0.01 I keeps eigenvalues above 0.01
  for (std::uint64_t seed : {1ull, 5ull, 9ull}) {
    const ConstrainedProblem p = generate_random_qp(16, 4, seed, QpMode::general);
    Eigen::SelfAdjointEigenSolver<oracles::EMat> es(oracles::mat(p.objective().Q()),
                                                    Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= 0.01 - 1e-9);
  }

  // orthogonal-square mode: A^T A = I
  const ConstrainedProblem o = generate_random_qp(12, 12, 4, QpMode::orthogonal_square);
  const oracles::EMat A = oracles::mat(o.A());
  CHECK((A.transpose() * A - oracles::EMat::Identity(12, 12)).norm() <= 1e-10);

  CHECK_THROWS_AS(generate_random_qp(3, 5, 1, QpMode::general), std::invalid_argument);
  CHECK_THROWS_AS(generate_random_qp(3, 2, 1, QpMode::orthogonal_square),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_random_qp(0, 0, 1, QpMode::general), std::invalid_argument);
}

TEST_CASE("example2 problem structure") {
  const ConstrainedProblem p = example2_problem(5.0, 1.0, 1.0);
  CHECK(p.objective().value(Vector{1.0, 0.0, -5.0}) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(p.constraint_residual(Vector{1.0, 0.0, -5.0})[0] == doctest::Approx(0.0));
  CHECK(p.A()(0, 1) == -1.0);
  CHECK_THROWS_AS(example2_problem(0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(example2_problem(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("infeasible constraint set is rejected") {
  Matrix A(2, 2);
  A(0, 0) = 1.0;
  A(0, 1) = 1.0;
  A(1, 0) = 1.0;
  A(1, 1) = 1.0;
  CHECK_THROWS_AS(ConstrainedProblem(QuadraticObjective(Matrix::identity(2), Vector(2, 0.0)),
                                     std::move(A), Vector{1.0, 2.0}),
                  std::invalid_argument);
}

TEST_CASE("lagrangian is convex in x") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  const ConstrainedProblem p = generate_random_qp(10, 4, 13, QpMode::general);
  const Vector lam{0.3, -0.7, 1.1, 0.0};
  for (int trial = 0; trial < 100; ++trial) {
    Vector a(10), b(10), mid(10);
    for (std::size_t i = 0; i < 10; ++i) {
      a[i] = g(rng);
      b[i] = g(rng);
      mid[i] = 0.5 * (a[i] + b[i]);
    }
    const double la = lagrangian(p, a, lam, 1.0);
    const double lb = lagrangian(p, b, lam, 1.0);
    const double lm = lagrangian(p, mid, lam, 1.0);
    CHECK(lm <= 0.5 * (la + lb) + 1e-9 * (1.0 + std::fabs(la) + std::fabs(lb)));
  }
}

TEST_CASE("json round trip") {
  const ConstrainedProblem p = generate_random_qp(7, 3, 42, QpMode::general);
  const std::string text = problem_to_json(p);
  const ConstrainedProblem q = problem_from_json(text);
  CHECK(q.primal_dim() == 7);
  CHECK(q.dual_dim() == 3);
  double worst = 0.0;
  for (std::size_t i = 0; i < p.objective().Q().storage().size(); ++i)
    worst = std::max(worst, rel_err(p.objective().Q().storage()[i],
                                    q.objective().Q().storage()[i]));
  for (std::size_t i = 0; i < p.b().size(); ++i)
    worst = std::max(worst, rel_err(p.b()[i], q.b()[i]));
  CHECK(worst <= 1e-15);
  CHECK(q.objective().lipschitz() ==
        doctest::Approx(p.objective().lipschitz()).epsilon(1e-12));
}

TEST_SUITE_END();
