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

#include "pdflow/problem.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pdflow/kernels.hpp"

namespace pdflow {

namespace {

using EMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<const EMatrix>;
using EVec = Eigen::VectorXd;
using EVecMap = Eigen::Map<const Eigen::VectorXd>;

EMap as_eigen(const Matrix& m) { return EMap(m.data(), m.rows(), m.cols()); }
EVecMap as_eigen(const Vector& v) {
  return EVecMap(v.data(), static_cast<Eigen::Index>(v.size()));
}

Vector to_vector(const EVec& v) { return Vector(v.data(), v.data() + v.size()); }

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw std::invalid_argument(std::string("dimension mismatch: ") + what + " has size " +
                                std::to_string(got) + ", expected " + std::to_string(want));
}

}  // namespace

QuadraticObjective::QuadraticObjective(Matrix Q, Vector q, const Tolerances& tol)
    : Q_(std::move(Q)), q_(std::move(q)) {
  const std::size_t n = q_.size();
  if (Q_.rows() != n || Q_.cols() != n)
    throw std::invalid_argument("QuadraticObjective: Q must be n x n with n = dim(q)");
  if (n == 0) throw std::invalid_argument("QuadraticObjective: empty problem");

  double max_abs = 0.0;
  double max_asym = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      max_abs = std::max(max_abs, std::fabs(Q_(i, j)));
      if (j > i) max_asym = std::max(max_asym, std::fabs(Q_(i, j) - Q_(j, i)));
    }
  if (max_asym > tol.symmetry_rtol * std::max(1.0, max_abs))
    throw std::invalid_argument("QuadraticObjective: Q is not symmetric");

  Eigen::SelfAdjointEigenSolver<EMatrix> es(as_eigen(Q_), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("QuadraticObjective: eigenvalue computation failed");
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo < tol.eigenvalue_floor * std::max(1.0, std::fabs(hi)))
    throw std::invalid_argument("QuadraticObjective: Q has a negative eigenvalue (" +
                                std::to_string(lo) + ")");
  lipschitz_ = std::max(hi, 0.0);
}

double QuadraticObjective::value(const Vector& x) const {
  require_dim(x.size(), dim(), "x");
  Vector qx = Q_.apply(x);
  return 0.5 * dot(qx, x) + dot(q_, x);
}

Vector QuadraticObjective::gradient(const Vector& x) const {
  require_dim(x.size(), dim(), "x");
  Vector g = Q_.apply(x);
  kernels::axpy(1.0, q_, g);
  return g;
}

double QuadraticObjective::value_difference(const Vector& x, const Vector& xref) const {
  require_dim(x.size(), dim(), "x");
  require_dim(xref.size(), dim(), "xref");
  Vector diff = subtract(x, xref);
  Vector sum = add(x, xref);
  return 0.5 * dot(Q_.apply(diff), sum) + dot(q_, diff);
}

ConstrainedProblem::ConstrainedProblem(QuadraticObjective objective, Matrix A, Vector b,
                                       const Tolerances& tol)
    : objective_(std::move(objective)), A_(std::move(A)), b_(std::move(b)) {
  const std::size_t n = objective_.dim();
  const std::size_t m = b_.size();
  if (m == 0) {
    if (A_.rows() != 0) throw std::invalid_argument("ConstrainedProblem: A/b size mismatch");
    return;
  }
  if (A_.rows() != m || A_.cols() != n)
    throw std::invalid_argument("ConstrainedProblem: A must be m x n");

  // Feasibility: the least-squares residual of Ax = b must vanish.
  EMap a = as_eigen(A_);
  EVec r = a * a.completeOrthogonalDecomposition().solve(as_eigen(b_)) - as_eigen(b_);
  if (r.norm() > tol.feasibility_rtol * (1.0 + norm(b_)))
    throw std::invalid_argument("ConstrainedProblem: b is not in the range of A (empty feasible set)");
}

Vector ConstrainedProblem::constraint_residual(const Vector& x) const {
  require_dim(x.size(), primal_dim(), "x");
  Vector r = A_.apply(x);
  kernels::axpy(-1.0, b_, r);
  return r;
}

Vector grad_f(const ConstrainedProblem& p, const Vector& x) {
  return p.objective().gradient(x);
}

double lagrangian(const ConstrainedProblem& p, const Vector& x, const Vector& lambda,
                  double rho) {
  if (rho < 0.0) throw std::invalid_argument("lagrangian: rho must be >= 0");
  require_dim(lambda.size(), p.dual_dim(), "lambda");
  const Vector r = p.constraint_residual(x);
  const double rn = norm(r);
  return p.objective().value(x) + dot(lambda, r) + 0.5 * rho * rn * rn;
}

Vector grad_x_auglag(const ConstrainedProblem& p, const Vector& x, const Vector& lambda,
                     double rho) {
  if (rho < 0.0) throw std::invalid_argument("grad_x_auglag: rho must be >= 0");
  require_dim(lambda.size(), p.dual_dim(), "lambda");
  Vector g = p.objective().gradient(x);
  if (p.dual_dim() > 0) {
    Vector w = p.constraint_residual(x);  // Ax - b
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = lambda[i] + rho * w[i];
    kernels::matvec_t_acc(p.A().data(), p.A().rows(), p.A().cols(), w.data(), g.data());
  }
  return g;
}

std::pair<double, double> kkt_residuals(const ConstrainedProblem& p,
                                        const PrimalDualPoint& point) {
  Vector g = grad_x_auglag(p, point.x, point.lambda, 0.0);
  const Vector r = p.constraint_residual(point.x);
  return {norm(g), norm(r)};
}

SaddleCertificate solve_saddle_point(const ConstrainedProblem& p, const Tolerances& tol) {
  const std::size_t n = p.primal_dim();
  const std::size_t m = p.dual_dim();
  const Eigen::Index dim = static_cast<Eigen::Index>(n + m);

  EMatrix K = EMatrix::Zero(dim, dim);
  K.topLeftCorner(n, n) = as_eigen(p.objective().Q());
  if (m > 0) {
    K.topRightCorner(n, m) = as_eigen(p.A()).transpose();
    K.bottomLeftCorner(m, n) = as_eigen(p.A());
  }
  EVec rhs(dim);
  rhs.head(n) = -as_eigen(p.objective().q());
  if (m > 0) rhs.tail(m) = as_eigen(p.b());

  // Complete orthogonal decomposition: exact solve when K is regular,
  // least-norm least-squares solution when it is rank deficient.
  auto cod = K.completeOrthogonalDecomposition();
  EVec z = cod.solve(rhs);

  SaddleCertificate cert;
  cert.rank_deficient = cod.rank() < dim;
  cert.point.x = Vector(z.data(), z.data() + n);
  cert.point.lambda = Vector(z.data() + n, z.data() + n + m);
  auto [stat, feas] = kkt_residuals(p, cert.point);
  cert.stationarity_residual = stat;
  cert.feasibility_residual = feas;

  const double scale = 1.0 + norm(p.objective().q()) + norm(p.b());
  if (stat > tol.saddle_rtol * scale || feas > tol.saddle_rtol * scale) {
    throw std::runtime_error(
        std::string("solve_saddle_point: no saddle point; violated condition: ") +
        (stat > tol.saddle_rtol * scale ? "stationarity grad f(x*) + A^T lambda* = 0"
                                        : "feasibility A x* - b = 0"));
  }
  return cert;
}

Vector tikhonov_path_point(const ConstrainedProblem& p, double rho, double eps,
                           const Vector& lambda_star, const Tolerances& tol) {
  if (!(eps > 0.0)) throw std::invalid_argument("tikhonov_path_point: eps must be > 0");
  if (!(rho > 0.0)) throw std::invalid_argument("tikhonov_path_point: rho must be > 0");
  require_dim(lambda_star.size(), p.dual_dim(), "lambda_star");

  EMatrix M = as_eigen(p.objective().Q());
  EVec rhs = -as_eigen(p.objective().q());
  if (p.dual_dim() > 0) {
    EMap a = as_eigen(p.A());
    M += rho * a.transpose() * a;
    rhs += a.transpose() * (rho * as_eigen(p.b()) - as_eigen(lambda_star));
  }
  M.diagonal().array() += eps;

  Eigen::LLT<EMatrix> llt(M);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("tikhonov_path_point: factorization failed");
  EVec x = llt.solve(rhs);

  // Iterative refinement until the stationarity contract holds.
  const double target = tol.tikhonov_grad_rtol * (1.0 + norm(p.objective().q()));
  for (int pass = 0; pass < 4; ++pass) {
    EVec res = rhs - M * x;
    if (res.norm() <= target) break;
    x += llt.solve(res);
  }
  return to_vector(x);
}

Vector minimal_norm_solution(const ConstrainedProblem& p, const Tolerances& tol) {
  const SaddleCertificate cert = solve_saddle_point(p, tol);
  const double rho = 1.0;

  // Follow the regularization path downward and accept once it settles.
  constexpr double eps_seq[] = {1e-4, 1e-6, 1e-8};
  Vector prev = tikhonov_path_point(p, rho, eps_seq[0], cert.point.lambda, tol);
  Vector curr = prev;
  for (std::size_t k = 1; k < std::size(eps_seq); ++k) {
    prev = std::move(curr);
    curr = tikhonov_path_point(p, rho, eps_seq[k], cert.point.lambda, tol);
    if (distance(curr, prev) < tol.min_norm_accept) return curr;
  }

  // Path still moving: extrapolate linearly in eps from the last two points.
  const double e2 = eps_seq[1], e3 = eps_seq[2];
  Vector out(curr.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = curr[i] + (curr[i] - prev[i]) * (e3 / (e2 - e3));
  return out;
}

ConstrainedProblem generate_random_qp(std::size_t n, std::size_t m, std::uint64_t seed,
                                      QpMode mode) {
  if (n == 0 || m == 0) throw std::invalid_argument("generate_random_qp: n, m must be >= 1");
  if (mode == QpMode::general && n < m)
    throw std::invalid_argument("generate_random_qp: general mode requires n >= m");
  if (mode == QpMode::orthogonal_square && n != m)
    throw std::invalid_argument("generate_random_qp: orthogonal-square mode requires n == m");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  EMatrix H(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) H(i, j) = gauss(rng);
  EMatrix Qe = H.transpose() * H;
  Qe.diagonal().array() += 0.01;
  // Symmetrize exactly; the product can be off by rounding.
  Qe = (0.5 * (Qe + Qe.transpose())).eval();

  Matrix Q(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) Q(i, j) = Qe(i, j);

  Vector q(n);
  for (auto& z : q) z = gauss(rng);
  Vector b(m);
  for (auto& z : b) z = unif(rng);

  Matrix A(m, n);
  if (mode == QpMode::general) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) A(i, j) = gauss(rng);
  } else {
    EMatrix D(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) D(i, j) = gauss(rng);
    EMatrix Qf = Eigen::HouseholderQR<EMatrix>(D).householderQ();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) A(i, j) = Qf(i, j);
  }

  return ConstrainedProblem(QuadraticObjective(std::move(Q), std::move(q)), std::move(A),
                            std::move(b));
}

ConstrainedProblem example2_problem(double d, double e, double v) {
  if (d == 0.0 || e == 0.0 || v == 0.0)
    throw std::invalid_argument("example2_problem: coefficients must be nonzero");
  const Vector c{d, e, v};
  Matrix Q(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) Q(i, j) = 2.0 * c[i] * c[j];
  Matrix A(1, 3);
  A(0, 0) = d;
  A(0, 1) = -e;
  A(0, 2) = v;
  return ConstrainedProblem(QuadraticObjective(std::move(Q), Vector(3, 0.0)), std::move(A),
                            Vector{0.0});
}

std::string problem_to_json(const ConstrainedProblem& p) {
  nlohmann::ordered_json j;
  j["n"] = p.primal_dim();
  j["m"] = p.dual_dim();
  j["Q"] = p.objective().Q().storage();
  j["q"] = p.objective().q();
  j["A"] = p.A().storage();
  j["b"] = p.b();
  j["lipschitz"] = p.objective().lipschitz();
  return j.dump();
}

ConstrainedProblem problem_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const std::size_t n = j.at("n").get<std::size_t>();
  const std::size_t m = j.at("m").get<std::size_t>();
  Matrix Q(n, n);
  const auto qdata = j.at("Q").get<std::vector<double>>();
  if (qdata.size() != n * n) throw std::invalid_argument("problem_from_json: bad Q size");
  std::copy(qdata.begin(), qdata.end(), Q.data());
  Matrix A(m, n);
  const auto adata = j.at("A").get<std::vector<double>>();
  if (adata.size() != m * n) throw std::invalid_argument("problem_from_json: bad A size");
  std::copy(adata.begin(), adata.end(), A.data());
  return ConstrainedProblem(QuadraticObjective(std::move(Q), j.at("q").get<Vector>()),
                            std::move(A), j.at("b").get<Vector>());
}

}  // namespace pdflow
