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

#include "pdflow/linalg.hpp"

#include <cassert>
#include <cmath>

#include "pdflow/kernels.hpp"

namespace pdflow {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector Matrix::apply(const Vector& x) const {
  assert(x.size() == cols_);
  Vector y(rows_);
  kernels::matvec(data_.data(), rows_, cols_, x.data(), y.data());
  return y;
}

Vector Matrix::apply_transpose(const Vector& w) const {
  assert(w.size() == rows_);
  Vector y(cols_, 0.0);
  kernels::matvec_t_acc(data_.data(), rows_, cols_, w.data(), y.data());
  return y;
}

double norm(std::span<const double> v) { return kernels::nrm2(v); }

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return kernels::dot(a, b);
}

double distance(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Vector add(const Vector& a, const Vector& b) {
  assert(a.size() == b.size());
  Vector r(a);
  kernels::axpy(1.0, b, r);
  return r;
}

Vector subtract(const Vector& a, const Vector& b) {
  assert(a.size() == b.size());
  Vector r(a);
  kernels::axpy(-1.0, b, r);
  return r;
}

Vector scaled(const Vector& a, double s) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

Vector add_scaled(const Vector& a, double s, const Vector& b) {
  assert(a.size() == b.size());
  Vector r(a);
  kernels::axpy(s, b, r);
  return r;
}

}  // namespace pdflow
