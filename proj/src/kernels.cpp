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

#include "pdflow/kernels.hpp"

#include <cmath>

namespace pdflow::kernels {

#if defined(PDFLOW_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;  // defined in kernels_avx2.cpp
#endif

namespace {

// Scalar reference lane. Plain loops, kept deliberately simple: this is the
// implementation the SIMD lane is tested against.

double dot_scalar(const double* a, const double* b, std::size_t len) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < len; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t len) noexcept {
  for (std::size_t i = 0; i < len; ++i) y[i] += alpha * x[i];
}

void matvec_scalar(const double* m, std::size_t rows, std::size_t cols,
                   const double* x, double* y) noexcept {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(m + r * cols, x, cols);
}

void matvec2_scalar(const double* m, std::size_t rows, std::size_t cols,
                    const double* x0, const double* x1, double* y0, double* y1) noexcept {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = m + r * cols;
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < cols; ++i) {
      s0 += row[i] * x0[i];
      s1 += row[i] * x1[i];
    }
    y0[r] = s0;
    y1[r] = s1;
  }
}

void matvec_t_acc_scalar(const double* m, std::size_t rows, std::size_t cols,
                         const double* w, double* y) noexcept {
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(w[r], m + r * cols, y, cols);
}

double scaled_rms_error_scalar(const double* err, const double* y, std::size_t len,
                               double atol, double rtol) noexcept {
  if (len == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double q = err[i] / (atol + rtol * std::fabs(y[i]));
    s += q * q;
  }
  return std::sqrt(s / static_cast<double>(len));
}

void lincomb1_scalar(double* dst, const double* y, double a1, const double* k1,
                     std::size_t len) noexcept {
  for (std::size_t i = 0; i < len; ++i) dst[i] = y[i] + a1 * k1[i];
}

void lincomb3_scalar(double* dst, const double* y, double a1, const double* k1, double a2,
                     const double* k2, double a3, const double* k3,
                     std::size_t len) noexcept {
  for (std::size_t i = 0; i < len; ++i)
    dst[i] = y[i] + a1 * k1[i] + a2 * k2[i] + a3 * k3[i];
}

void weighted4_scalar(double* dst, double a1, const double* k1, double a2,
                      const double* k2, double a3, const double* k3, double a4,
                      const double* k4, std::size_t len) noexcept {
  for (std::size_t i = 0; i < len; ++i)
    dst[i] = a1 * k1[i] + a2 * k2[i] + a3 * k3[i] + a4 * k4[i];
}

constexpr KernelTable kScalarTable{
    dot_scalar,      axpy_scalar,         matvec_scalar,
    matvec2_scalar,  matvec_t_acc_scalar, scaled_rms_error_scalar,
    lincomb1_scalar, lincomb3_scalar,     weighted4_scalar,
};

bool cpu_has_avx2() noexcept {
#if defined(PDFLOW_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

struct Dispatch {
  const KernelTable* table;
  Backend backend;
};

Dispatch& dispatch() noexcept {
  static Dispatch d = [] {
    Dispatch init{&kScalarTable, Backend::scalar};
#if defined(PDFLOW_HAVE_AVX2)
    if (cpu_has_avx2()) {
      init.table = &avx2_table();
      init.backend = Backend::avx2;
    }
#endif
    return init;
  }();
  return d;
}

}  // namespace

Backend active_backend() noexcept { return dispatch().backend; }

std::string_view backend_name(Backend b) noexcept {
  switch (b) {
    case Backend::avx2: return "avx2";
    case Backend::scalar: return "scalar";
  }
  return "scalar";
}

bool backend_available(Backend b) noexcept {
  return b == Backend::scalar || (b == Backend::avx2 && cpu_has_avx2());
}

bool select_backend(Backend b) noexcept {
  if (!backend_available(b)) return false;
  if (b == Backend::scalar) {
    dispatch() = {&kScalarTable, Backend::scalar};
    return true;
  }
#if defined(PDFLOW_HAVE_AVX2)
  dispatch() = {&avx2_table(), Backend::avx2};
  return true;
#else
  return false;
#endif
}

double dot(const double* a, const double* b, std::size_t len) noexcept {
  return dispatch().table->dot(a, b, len);
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return dot(a.data(), b.data(), a.size());
}

double nrm2(std::span<const double> a) noexcept {
  return std::sqrt(dot(a.data(), a.data(), a.size()));
}

void axpy(double alpha, const double* x, double* y, std::size_t len) noexcept {
  dispatch().table->axpy(alpha, x, y, len);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  axpy(alpha, x.data(), y.data(), x.size());
}

void matvec(const double* m, std::size_t rows, std::size_t cols,
            const double* x, double* y) noexcept {
  dispatch().table->matvec(m, rows, cols, x, y);
}

void matvec2(const double* m, std::size_t rows, std::size_t cols,
             const double* x0, const double* x1, double* y0, double* y1) noexcept {
  dispatch().table->matvec2(m, rows, cols, x0, x1, y0, y1);
}

void matvec_t_acc(const double* m, std::size_t rows, std::size_t cols,
                  const double* w, double* y) noexcept {
  dispatch().table->matvec_t_acc(m, rows, cols, w, y);
}

double scaled_rms_error(const double* err, const double* y, std::size_t len,
                        double atol, double rtol) noexcept {
  return dispatch().table->scaled_rms_error(err, y, len, atol, rtol);
}

void lincomb1(double* dst, const double* y, double a1, const double* k1,
              std::size_t len) noexcept {
  dispatch().table->lincomb1(dst, y, a1, k1, len);
}

void lincomb3(double* dst, const double* y, double a1, const double* k1, double a2,
              const double* k2, double a3, const double* k3, std::size_t len) noexcept {
  dispatch().table->lincomb3(dst, y, a1, k1, a2, k2, a3, k3, len);
}

void weighted4(double* dst, double a1, const double* k1, double a2, const double* k2,
               double a3, const double* k3, double a4, const double* k4,
               std::size_t len) noexcept {
  dispatch().table->weighted4(dst, a1, k1, a2, k2, a3, k3, a4, k4, len);
}

}  // namespace pdflow::kernels
