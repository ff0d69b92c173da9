// Copyright 2026 The sacdesk Authors.
//
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

#include "sacd/kernels.hpp"

#include <malloc.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sacd::kernels {
namespace {

// Keep large matrix buffers on the heap between gradient steps.
const bool kAllocatorTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return true;
}();

void check_gemm_tn_shapes(const Matrix& a, const Matrix& b, const Matrix& c) {
  if (a.rows() != b.rows() || c.rows() != a.cols() || c.cols() != b.cols()) {
    throw std::invalid_argument("gemm_tn: shape mismatch (" + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + ")^T * (" + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ") -> (" + std::to_string(c.rows()) + "x" +
                                std::to_string(c.cols()) + ")");
  }
}

void check_gemm_shapes(const Matrix& a, const Matrix& b, const Matrix& c) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols()) {
    throw std::invalid_argument("gemm: shape mismatch (" + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + ") * (" + std::to_string(b.rows()) +
                                "x" + std::to_string(b.cols()) + ") -> (" +
                                std::to_string(c.rows()) + "x" + std::to_string(c.cols()) + ")");
  }
}

// Same rounding in every kernel: fused where the target has it.
inline double madd(double a, double b, double c) {
#ifdef __FMA__
  return std::fma(a, b, c);
#else
  return a * b + c;
#endif
}

constexpr std::size_t kRowBlock = 6;
constexpr std::size_t kColBlock = 32;
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 16;

// Register tile: R rows of c by NB columns, held in `acc` across the whole
// shared dimension.
template <std::size_t R, std::size_t NB>
inline void tile(const double* a, std::size_t ars, std::size_t acs, const double* b, std::size_t ldb, double* c,
                 std::size_t ldc, std::size_t k) {
  double acc[R][NB];
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t j = 0; j < NB; ++j) acc[r][j] = c[r * ldc + j];
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = b + p * ldb;
    for (std::size_t r = 0; r < R; ++r) {
      const double av = a[r * ars + p * acs];
      for (std::size_t j = 0; j < NB; ++j) acc[r][j] = madd(av, brow[j], acc[r][j]);
    }
  }
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t j = 0; j < NB; ++j) c[r * ldc + j] = acc[r][j];
}

// Column remainder narrower than 8.
template <std::size_t R, std::size_t W>
inline void tile_narrow(const double* a, std::size_t ars, std::size_t acs, const double* b, std::size_t ldb,
                        double* c, std::size_t ldc, std::size_t k) {
  double acc[R][W];
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t j = 0; j < W; ++j) acc[r][j] = c[r * ldc + j];
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = b + p * ldb;
    for (std::size_t r = 0; r < R; ++r) {
      const double av = a[r * ars + p * acs];
      for (std::size_t j = 0; j < W; ++j) acc[r][j] = madd(av, brow[j], acc[r][j]);
    }
  }
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t j = 0; j < W; ++j) c[r * ldc + j] = acc[r][j];
}

template <std::size_t R>
void narrow_dispatch(const double* a, std::size_t ars, std::size_t acs, const double* b, std::size_t ldb, double* c,
                     std::size_t ldc, std::size_t k, std::size_t width) {
  switch (width) {
    case 7: tile_narrow<R, 7>(a, ars, acs, b, ldb, c, ldc, k); break;
    case 6: tile_narrow<R, 6>(a, ars, acs, b, ldb, c, ldc, k); break;
    case 5: tile_narrow<R, 5>(a, ars, acs, b, ldb, c, ldc, k); break;
    case 4: tile_narrow<R, 4>(a, ars, acs, b, ldb, c, ldc, k); break;
    case 3: tile_narrow<R, 3>(a, ars, acs, b, ldb, c, ldc, k); break;
    case 2: tile_narrow<R, 2>(a, ars, acs, b, ldb, c, ldc, k); break;
    case 1: tile_narrow<R, 1>(a, ars, acs, b, ldb, c, ldc, k); break;
    default: break;
  }
}

template <std::size_t R>
void row_block(const double* a, std::size_t ars, std::size_t acs, const double* b, std::size_t ldb, double* c,
               std::size_t ldc, std::size_t k, std::size_t n) {
  std::size_t j = 0;
  for (; j + kColBlock <= n; j += kColBlock) tile<R, kColBlock>(a, ars, acs, b + j, ldb, c + j, ldc, k);
  if (j + 16 <= n) {
    tile<R, 16>(a, ars, acs, b + j, ldb, c + j, ldc, k);
    j += 16;
  }
  if (j + 8 <= n) {
    tile<R, 8>(a, ars, acs, b + j, ldb, c + j, ldc, k);
    j += 8;
  }
  if (j < n) narrow_dispatch<R>(a, ars, acs, b + j, ldb, c + j, ldc, k, n - j);
}

void row_block_dispatch(std::size_t rows, const double* a, std::size_t ars, std::size_t acs, const double* b,
                        std::size_t ldb, double* c, std::size_t ldc, std::size_t k, std::size_t n) {
  switch (rows) {
    case 6: row_block<6>(a, ars, acs, b, ldb, c, ldc, k, n); break;
    case 5: row_block<5>(a, ars, acs, b, ldb, c, ldc, k, n); break;
    case 4: row_block<4>(a, ars, acs, b, ldb, c, ldc, k, n); break;
    case 3: row_block<3>(a, ars, acs, b, ldb, c, ldc, k, n); break;
    case 2: row_block<2>(a, ars, acs, b, ldb, c, ldc, k, n); break;
    case 1: row_block<1>(a, ars, acs, b, ldb, c, ldc, k, n); break;
    default: throw std::logic_error("row_block_dispatch: bad row count");
  }
}

// c (m x n) += op(a) * b with op(a)(i, p) at ap[i * ars + p * acs].
void gemm_driver(const double* ap, std::size_t ars, std::size_t acs, const double* bp, double* cp, std::size_t m,
                 std::size_t k, std::size_t n) {
  if (m == 0 || n == 0 || k == 0) return;
  const auto blocks = static_cast<std::ptrdiff_t>((m + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static) if (m * n * k >= kParallelWork)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t i = static_cast<std::size_t>(blk) * kRowBlock;
    row_block_dispatch(std::min(kRowBlock, m - i), ap + i * ars, ars, acs, bp, n, cp + i * n, n, k, n);
  }
}

}  // namespace

void gemm_accumulate(const Matrix& a, const Matrix& b, Matrix& c) {
  check_gemm_shapes(a, b, c);
  gemm_driver(a.data(), a.cols(), 1, b.data(), c.data(), a.rows(), a.cols(), b.cols());
}

void gemm_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& c) {
  check_gemm_tn_shapes(a, b, c);
  gemm_driver(a.data(), 1, a.cols(), b.data(), c.data(), a.cols(), a.rows(), b.cols());
}

Matrix transpose(const Matrix& m) {
  constexpr std::size_t kBlock = 8;
  Matrix out(m.cols(), m.rows());
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  const auto blocks = static_cast<std::ptrdiff_t>((cols + kBlock - 1) / kBlock);
  const double* src = m.data();
  double* dst = out.data();
  // Blocks of output rows; each 8x8 tile is read down and written across.
#pragma omp parallel for schedule(static) if (m.size() >= kParallelWork)
  for (std::ptrdiff_t bj = 0; bj < blocks; ++bj) {
    const std::size_t j0 = static_cast<std::size_t>(bj) * kBlock;
    const std::size_t j1 = std::min(j0 + kBlock, cols);
    std::size_t i0 = 0;
    if (j1 - j0 == kBlock) {
      for (; i0 + kBlock <= rows; i0 += kBlock)
        for (std::size_t j = 0; j < kBlock; ++j)
          for (std::size_t i = 0; i < kBlock; ++i) dst[(j0 + i) * rows + i0 + j] = src[(i0 + j) * cols + j0 + i];
    }
    for (std::size_t j = j0; j < j1; ++j)
      for (std::size_t i = i0; i < rows; ++i) dst[j * rows + i] = src[i * cols + j];
  }
  return out;
}

void broadcast_rows(std::span<const double> v, Matrix& out) {
  if (v.size() != out.cols()) throw std::invalid_argument("broadcast_rows: width mismatch");
  const auto rows = static_cast<std::ptrdiff_t>(out.rows());
#pragma omp parallel for schedule(static) if (out.size() >= kParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    auto r = out.row(static_cast<std::size_t>(i));
    std::copy(v.begin(), v.end(), r.begin());
  }
}

void relu_inplace(Matrix& m) {
  double* d = m.data();
  const auto n = static_cast<std::ptrdiff_t>(m.size());
#pragma omp parallel for simd schedule(static) if (m.size() >= kParallelWork)
  for (std::ptrdiff_t i = 0; i < n; ++i) d[i] = d[i] > 0.0 ? d[i] : 0.0;
}

void relu_mask(const Matrix& activated, Matrix& grad) {
  if (!activated.same_shape(grad)) throw std::invalid_argument("relu_mask: shape mismatch");
  const double* h = activated.data();
  double* g = grad.data();
  const auto n = static_cast<std::ptrdiff_t>(grad.size());
#pragma omp parallel for simd schedule(static) if (grad.size() >= kParallelWork)
  for (std::ptrdiff_t i = 0; i < n; ++i) g[i] = h[i] > 0.0 ? g[i] : 0.0;
}

void column_sums_accumulate(const Matrix& m, std::span<double> out) {
  if (out.size() != m.cols()) throw std::invalid_argument("column_sums: width mismatch");
  const auto cols = static_cast<std::ptrdiff_t>(m.cols());
  // Parallel over columns; each column still sums its rows in order.
#pragma omp parallel for schedule(static) if (m.size() >= kParallelWork)
  for (std::ptrdiff_t j = 0; j < cols; ++j) {
    double acc = out[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < m.rows(); ++i) acc += m(i, static_cast<std::size_t>(j));
    out[static_cast<std::size_t>(j)] = acc;
  }
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void gemm_accumulate(const Matrix& a, const Matrix& b, Matrix& c) {
  check_gemm_shapes(a, b, c);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = c(i, j);
      for (std::size_t p = 0; p < a.cols(); ++p) acc = madd(a(i, p), b(p, j), acc);
      c(i, j) = acc;
    }
}

void gemm_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& c) {
  check_gemm_tn_shapes(a, b, c);
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = c(i, j);
      for (std::size_t p = 0; p < a.rows(); ++p) acc = madd(a(p, i), b(p, j), acc);
      c(i, j) = acc;
    }
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

void broadcast_rows(std::span<const double> v, Matrix& out) {
  if (v.size() != out.cols()) throw std::invalid_argument("broadcast_rows: width mismatch");
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = v[j];
}

void relu_inplace(Matrix& m) {
  for (double& x : m.values()) x = x > 0.0 ? x : 0.0;
}

void relu_mask(const Matrix& activated, Matrix& grad) {
  if (!activated.same_shape(grad)) throw std::invalid_argument("relu_mask: shape mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(activated.values()[i] > 0.0)) grad.values()[i] = 0.0;
}

void column_sums_accumulate(const Matrix& m, std::span<double> out) {
  if (out.size() != m.cols()) throw std::invalid_argument("column_sums: width mismatch");
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += m(i, j);
}

}  // namespace serial
}  // namespace sacd::kernels
