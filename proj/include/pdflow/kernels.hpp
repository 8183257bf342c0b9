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

#include <cstddef>
#include <span>
#include <string_view>

namespace pdflow::kernels {

/// Dense double-precision primitives used by the vector-field and stepper
/// inner loops. Every entry point has a scalar reference implementation and
/// an AVX2+FMA variant; the active one is chosen at runtime from cpuid.
/// The two backends are equivalence-tested against each other (FMA changes
/// rounding, so agreement is to ~1e-14 relative, not bitwise). Within one
/// process the selected backend is fixed unless select_backend is called,
/// which keeps integrations bitwise reproducible.
enum class Backend { scalar, avx2 };

Backend active_backend() noexcept;
std::string_view backend_name(Backend b) noexcept;
bool backend_available(Backend b) noexcept;

/// Swaps the dispatch table. Returns false (and keeps the current backend)
/// if the requested one is not available on this CPU. Not thread safe; call
/// before spawning workers.
bool select_backend(Backend b) noexcept;

/// sum_i a[i]*b[i]
double dot(const double* a, const double* b, std::size_t len) noexcept;
double dot(std::span<const double> a, std::span<const double> b) noexcept;

/// Euclidean norm.
double nrm2(std::span<const double> a) noexcept;

/// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t len) noexcept;
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;

/// y = M x with M row-major (rows x cols).
void matvec(const double* m, std::size_t rows, std::size_t cols,
            const double* x, double* y) noexcept;

/// y0 = M x0 and y1 = M x1 in a single pass over M.
void matvec2(const double* m, std::size_t rows, std::size_t cols,
             const double* x0, const double* x1, double* y0, double* y1) noexcept;

/// y += M^T w, accumulating into y (length cols).
void matvec_t_acc(const double* m, std::size_t rows, std::size_t cols,
                  const double* w, double* y) noexcept;

/// sqrt( mean_i ( err[i] / (atol + rtol*|y[i]|) )^2 ), the mixed-tolerance
/// RMS norm used for step acceptance.
double scaled_rms_error(const double* err, const double* y, std::size_t len,
                        double atol, double rtol) noexcept;

/// dst = y + a1*k1 (stage predictor).
void lincomb1(double* dst, const double* y, double a1, const double* k1,
              std::size_t len) noexcept;

/// dst = y + a1*k1 + a2*k2 + a3*k3 (solution update).
void lincomb3(double* dst, const double* y, double a1, const double* k1, double a2,
              const double* k2, double a3, const double* k3, std::size_t len) noexcept;

/// dst = a1*k1 + a2*k2 + a3*k3 + a4*k4 (embedded error estimate).
void weighted4(double* dst, double a1, const double* k1, double a2, const double* k2,
               double a3, const double* k3, double a4, const double* k4,
               std::size_t len) noexcept;

/// Internal dispatch table. Exposed so the AVX2 translation unit can
/// register itself; not part of the public API surface.
struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t) noexcept;
  void (*axpy)(double, const double*, double*, std::size_t) noexcept;
  void (*matvec)(const double*, std::size_t, std::size_t, const double*, double*) noexcept;
  void (*matvec2)(const double*, std::size_t, std::size_t, const double*,
                  const double*, double*, double*) noexcept;
  void (*matvec_t_acc)(const double*, std::size_t, std::size_t, const double*, double*) noexcept;
  double (*scaled_rms_error)(const double*, const double*, std::size_t, double, double) noexcept;
  void (*lincomb1)(double*, const double*, double, const double*, std::size_t) noexcept;
  void (*lincomb3)(double*, const double*, double, const double*, double, const double*,
                   double, const double*, std::size_t) noexcept;
  void (*weighted4)(double*, double, const double*, double, const double*, double,
                    const double*, double, const double*, std::size_t) noexcept;
};

}  // namespace pdflow::kernels
