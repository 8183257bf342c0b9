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

// AVX2+FMA kernel lane. This translation unit is compiled with
// -mavx2 -mfma and must only be reached through the runtime dispatch in
// kernels.cpp after a cpuid check.

#include <immintrin.h>

#include <cmath>

#include "pdflow/kernels.hpp"

namespace pdflow::kernels {

namespace {

inline double hsum(__m256d v) noexcept {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double dot_avx2(const double* a, const double* b, std::size_t len) noexcept {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= len) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < len; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t len) noexcept {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < len; ++i) y[i] += alpha * x[i];
}

// Rows are processed in pairs, four FMA chains live at once, which hides the
// FMA latency on short rows.
void matvec_avx2(const double* m, std::size_t rows, std::size_t cols,
                 const double* x, double* y) noexcept {
  std::size_t r = 0;
  for (; r + 2 <= rows; r += 2) {
    const double* row0 = m + r * cols;
    const double* row1 = row0 + cols;
    __m256d a00 = _mm256_setzero_pd(), a01 = _mm256_setzero_pd();
    __m256d a10 = _mm256_setzero_pd(), a11 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= cols; i += 8) {
      const __m256d x0 = _mm256_loadu_pd(x + i);
      const __m256d x1 = _mm256_loadu_pd(x + i + 4);
      a00 = _mm256_fmadd_pd(_mm256_loadu_pd(row0 + i), x0, a00);
      a01 = _mm256_fmadd_pd(_mm256_loadu_pd(row0 + i + 4), x1, a01);
      a10 = _mm256_fmadd_pd(_mm256_loadu_pd(row1 + i), x0, a10);
      a11 = _mm256_fmadd_pd(_mm256_loadu_pd(row1 + i + 4), x1, a11);
    }
    if (i + 4 <= cols) {
      const __m256d x0 = _mm256_loadu_pd(x + i);
      a00 = _mm256_fmadd_pd(_mm256_loadu_pd(row0 + i), x0, a00);
      a10 = _mm256_fmadd_pd(_mm256_loadu_pd(row1 + i), x0, a10);
      i += 4;
    }
    double s0 = hsum(_mm256_add_pd(a00, a01));
    double s1 = hsum(_mm256_add_pd(a10, a11));
    for (; i < cols; ++i) {
      s0 += row0[i] * x[i];
      s1 += row1[i] * x[i];
    }
    y[r] = s0;
    y[r + 1] = s1;
  }
  if (r < rows) y[r] = dot_avx2(m + r * cols, x, cols);
}

void matvec2_avx2(const double* m, std::size_t rows, std::size_t cols,
                  const double* x0, const double* x1, double* y0, double* y1) noexcept {
  // One pass over each row feeding two accumulator chains; per-output
  // rounding matches matvec_avx2 exactly.
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = m + r * cols;
    __m256d a00 = _mm256_setzero_pd(), a01 = _mm256_setzero_pd();
    __m256d a10 = _mm256_setzero_pd(), a11 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= cols; i += 8) {
      const __m256d r0 = _mm256_loadu_pd(row + i);
      const __m256d r1 = _mm256_loadu_pd(row + i + 4);
      a00 = _mm256_fmadd_pd(r0, _mm256_loadu_pd(x0 + i), a00);
      a01 = _mm256_fmadd_pd(r1, _mm256_loadu_pd(x0 + i + 4), a01);
      a10 = _mm256_fmadd_pd(r0, _mm256_loadu_pd(x1 + i), a10);
      a11 = _mm256_fmadd_pd(r1, _mm256_loadu_pd(x1 + i + 4), a11);
    }
    if (i + 4 <= cols) {
      const __m256d r0 = _mm256_loadu_pd(row + i);
      a00 = _mm256_fmadd_pd(r0, _mm256_loadu_pd(x0 + i), a00);
      a10 = _mm256_fmadd_pd(r0, _mm256_loadu_pd(x1 + i), a10);
      i += 4;
    }
    double s0 = hsum(_mm256_add_pd(a00, a01));
    double s1 = hsum(_mm256_add_pd(a10, a11));
    for (; i < cols; ++i) {
      s0 += row[i] * x0[i];
      s1 += row[i] * x1[i];
    }
    y0[r] = s0;
    y1[r] = s1;
  }
}

void matvec_t_acc_avx2(const double* m, std::size_t rows, std::size_t cols,
                       const double* w, double* y) noexcept {
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(w[r], m + r * cols, y, cols);
}

double scaled_rms_error_avx2(const double* err, const double* y, std::size_t len,
                             double atol, double rtol) noexcept {
  if (len == 0) return 0.0;
  const __m256d vatol = _mm256_set1_pd(atol);
  const __m256d vrtol = _mm256_set1_pd(rtol);
  const __m256d signmask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d ay = _mm256_andnot_pd(signmask, _mm256_loadu_pd(y + i));
    const __m256d denom = _mm256_fmadd_pd(vrtol, ay, vatol);
    const __m256d q = _mm256_div_pd(_mm256_loadu_pd(err + i), denom);
    acc = _mm256_fmadd_pd(q, q, acc);
  }
  double s = hsum(acc);
  for (; i < len; ++i) {
    const double q = err[i] / (atol + rtol * std::fabs(y[i]));
    s += q * q;
  }
  return std::sqrt(s / static_cast<double>(len));
}

void lincomb1_avx2(double* dst, const double* y, double a1, const double* k1,
                   std::size_t len) noexcept {
  const __m256d va = _mm256_set1_pd(a1);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4)
    _mm256_storeu_pd(dst + i,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(k1 + i), _mm256_loadu_pd(y + i)));
  for (; i < len; ++i) dst[i] = y[i] + a1 * k1[i];
}

void lincomb3_avx2(double* dst, const double* y, double a1, const double* k1, double a2,
                   const double* k2, double a3, const double* k3,
                   std::size_t len) noexcept {
  const __m256d v1 = _mm256_set1_pd(a1), v2 = _mm256_set1_pd(a2), v3 = _mm256_set1_pd(a3);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    __m256d acc = _mm256_fmadd_pd(v1, _mm256_loadu_pd(k1 + i), _mm256_loadu_pd(y + i));
    acc = _mm256_fmadd_pd(v2, _mm256_loadu_pd(k2 + i), acc);
    acc = _mm256_fmadd_pd(v3, _mm256_loadu_pd(k3 + i), acc);
    _mm256_storeu_pd(dst + i, acc);
  }
  for (; i < len; ++i) dst[i] = y[i] + a1 * k1[i] + a2 * k2[i] + a3 * k3[i];
}

void weighted4_avx2(double* dst, double a1, const double* k1, double a2, const double* k2,
                    double a3, const double* k3, double a4, const double* k4,
                    std::size_t len) noexcept {
  const __m256d v1 = _mm256_set1_pd(a1), v2 = _mm256_set1_pd(a2);
  const __m256d v3 = _mm256_set1_pd(a3), v4 = _mm256_set1_pd(a4);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    __m256d acc = _mm256_mul_pd(v1, _mm256_loadu_pd(k1 + i));
    acc = _mm256_fmadd_pd(v2, _mm256_loadu_pd(k2 + i), acc);
    acc = _mm256_fmadd_pd(v3, _mm256_loadu_pd(k3 + i), acc);
    acc = _mm256_fmadd_pd(v4, _mm256_loadu_pd(k4 + i), acc);
    _mm256_storeu_pd(dst + i, acc);
  }
  for (; i < len; ++i) dst[i] = a1 * k1[i] + a2 * k2[i] + a3 * k3[i] + a4 * k4[i];
}

}  // namespace

const KernelTable& avx2_table() noexcept {
  static constexpr KernelTable table{
      dot_avx2,      axpy_avx2,     matvec_avx2,
      matvec2_avx2,  matvec_t_acc_avx2, scaled_rms_error_avx2,
      lincomb1_avx2, lincomb3_avx2, weighted4_avx2,
  };
  return table;
}

}  // namespace pdflow::kernels
