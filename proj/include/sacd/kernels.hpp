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

#pragma once

#include <span>

#include "sacd/matrix.hpp"

// Dense kernels behind the network code. Every kernel has two builds: the
// OpenMP-parallel, register-blocked one used in training, and a plain serial
// loop nest in kernels::serial kept as the reference for tests and benchmarks.
//
// Both builds accumulate each output element in the same index order, so the
// parallel result does not depend on the thread count.
namespace sacd::kernels {

// c += a * b
void gemm_accumulate(const Matrix& a, const Matrix& b, Matrix& c);
// c += a^T * b without forming a^T
void gemm_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& c);

Matrix transpose(const Matrix& m);

// Sets every row of `out` to `v`.
void broadcast_rows(std::span<const double> v, Matrix& out);

void relu_inplace(Matrix& m);

// grad(i, j) = 0 wherever activated(i, j) <= 0.
void relu_mask(const Matrix& activated, Matrix& grad);

// out[j] += sum_i m(i, j), rows summed in order.
void column_sums_accumulate(const Matrix& m, std::span<double> out);

// Number of OpenMP threads the parallel kernels will use.
int thread_count();

namespace serial {

void gemm_accumulate(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& c);
Matrix transpose(const Matrix& m);
void broadcast_rows(std::span<const double> v, Matrix& out);
void relu_inplace(Matrix& m);
void relu_mask(const Matrix& activated, Matrix& grad);
void column_sums_accumulate(const Matrix& m, std::span<double> out);

}  // namespace serial
}  // namespace sacd::kernels
