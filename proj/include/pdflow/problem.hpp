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

#include <cstdint>
#include <string>
#include <utility>

#include "pdflow/linalg.hpp"

namespace pdflow {

/// Module tolerances. Defaults are the contract values; override per call
/// where a function takes a Tolerances argument.
struct Tolerances {
  double symmetry_rtol = 1e-12;       // |Q - Q^T| relative to max |Q_ij|
  double eigenvalue_floor = -1e-10;   // smallest admissible eigenvalue of Q
  double feasibility_rtol = 1e-8;     // b in range(A), relative to 1 + |b|
  double saddle_rtol = 1e-8;          // KKT residuals, relative to 1+|q|+|b|
  double tikhonov_grad_rtol = 1e-10;  // stationarity of the path point
  double min_norm_accept = 1e-7;      // successive-iterate acceptance
};

/// f(x) = 0.5 x^T Q x + q^T x with Q symmetric positive semidefinite.
/// Construction validates symmetry and the eigenvalue floor and computes the
/// gradient Lipschitz constant (largest eigenvalue of Q).
class QuadraticObjective {
 public:
  QuadraticObjective(Matrix Q, Vector q, const Tolerances& tol = {});

  std::size_t dim() const noexcept { return q_.size(); }
  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;  // Q x + q
  /// f(x) - f(xref), evaluated as 0.5 (x-xref)^T Q (x+xref) + q^T (x-xref);
  /// free of the cancellation that f(x) - f(xref) suffers near convergence.
  double value_difference(const Vector& x, const Vector& xref) const;
  double lipschitz() const noexcept { return lipschitz_; }

  const Matrix& Q() const noexcept { return Q_; }
  const Vector& q() const noexcept { return q_; }

 private:
  Matrix Q_;
  Vector q_;
  double lipschitz_ = 0.0;
};

/// min f(x) s.t. A x = b. Construction verifies the feasible set is
/// nonempty (b in range(A) to tolerance). m = 0 (no constraints) is legal.
class ConstrainedProblem {
 public:
  ConstrainedProblem(QuadraticObjective objective, Matrix A, Vector b,
                     const Tolerances& tol = {});

  const QuadraticObjective& objective() const noexcept { return objective_; }
  const Matrix& A() const noexcept { return A_; }
  const Vector& b() const noexcept { return b_; }
  std::size_t primal_dim() const noexcept { return objective_.dim(); }
  std::size_t dual_dim() const noexcept { return b_.size(); }

  Vector constraint_residual(const Vector& x) const;  // A x - b

 private:
  QuadraticObjective objective_;
  Matrix A_;
  Vector b_;
};

struct PrimalDualPoint {
  Vector x;
  Vector lambda;
};

struct SaddleCertificate {
  PrimalDualPoint point;
  double stationarity_residual = 0.0;  // |grad f(x*) + A^T lambda*|
  double feasibility_residual = 0.0;   // |A x* - b|
  bool rank_deficient = false;         // KKT matrix singular; least-norm solution returned
};

Vector grad_f(const ConstrainedProblem& p, const Vector& x);

/// f(x) + <lambda, Ax-b> + (rho/2)|Ax-b|^2; rho = 0 gives the plain
/// Lagrangian.
double lagrangian(const ConstrainedProblem& p, const Vector& x, const Vector& lambda,
                  double rho);

/// grad f(x) + A^T lambda + rho A^T (Ax-b). The lambda argument is whatever
/// multiplier the caller wants the gradient taken at.
Vector grad_x_auglag(const ConstrainedProblem& p, const Vector& x, const Vector& lambda,
                     double rho);

/// (|grad f(x) + A^T lambda|, |Ax - b|)
std::pair<double, double> kkt_residuals(const ConstrainedProblem& p,
                                        const PrimalDualPoint& point);

/// Solves the stacked system [[Q, A^T],[A, 0]](x;lambda) = (-q; b). Singular
/// but consistent systems return the least-norm solution with the
/// rank_deficient flag set; inconsistent systems throw std::runtime_error
/// naming the violated optimality condition.
SaddleCertificate solve_saddle_point(const ConstrainedProblem& p, const Tolerances& tol = {});

/// argmin { |x| : x solves the problem }, computed as the small-eps limit of
/// tikhonov_path_point with the dual from solve_saddle_point.
Vector minimal_norm_solution(const ConstrainedProblem& p, const Tolerances& tol = {});

/// Unique minimizer of f(x) + <lambda_star, Ax-b> + (rho/2)|Ax-b|^2 +
/// (eps/2)|x|^2, i.e. the solution of (Q + rho A^T A + eps I) x =
/// rho A^T b - q - A^T lambda_star. Requires eps > 0, rho > 0.
Vector tikhonov_path_point(const ConstrainedProblem& p, double rho, double eps,
                           const Vector& lambda_star, const Tolerances& tol = {});

enum class QpMode { general, orthogonal_square };

/// Seeded random test problem: Q = H^T H + 0.01 I with H standard Gaussian,
/// q standard Gaussian, b uniform on [0,1); A standard Gaussian (general) or
/// the orthogonal QR factor of a Gaussian square matrix (orthogonal_square,
/// requires n == m). Deterministic for a fixed seed.
ConstrainedProblem generate_random_qp(std::size_t n, std::size_t m, std::uint64_t seed,
                                      QpMode mode);

/// The 3-variable rank-one test problem f(x) = (d x1 + e x2 + v x3)^2 with
/// the single constraint d x1 - e x2 + v x3 = 0. Coefficients must be
/// nonzero. Its solution set is the line {(x1, 0, -(d/v) x1)} and the
/// minimal-norm solution is the origin.
ConstrainedProblem example2_problem(double d, double e, double v);

/// JSON object {n, m, Q (row-major), q, A (row-major), b, lipschitz}.
std::string problem_to_json(const ConstrainedProblem& p);
ConstrainedProblem problem_from_json(const std::string& text);

}  // namespace pdflow
