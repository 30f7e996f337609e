// Copyright (c) 2026 The mrtts Authors
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

#ifndef MRTTS_KERNELS_KERNELS_H_
#define MRTTS_KERNELS_KERNELS_H_

#include <cstddef>

namespace mrtts::kernels {

// Dense double-precision primitives behind every tensor op. All matrices are
// row-major and contiguous. When `accumulate` is false the output is
// overwritten, otherwise the product is added into it.
//
//   gemm_nn: C[m x n] (+)= A[m x k] * B[k x n]
//   gemm_nt: C[m x n] (+)= A[m x k] * B[n x k]^T
//   gemm_tn: C[m x n] (+)= A[k x m]^T * B[k x n]
struct KernelTable {
  const char* name;
  void (*gemm_nn)(int m, int n, int k, const double* a, const double* b,
                  double* c, bool accumulate);
  void (*gemm_nt)(int m, int n, int k, const double* a, const double* b,
                  double* c, bool accumulate);
  void (*gemm_tn)(int m, int n, int k, const double* a, const double* b,
                  double* c, bool accumulate);
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = x * y (elementwise); out may alias x or y
  void (*mul)(const double* x, const double* y, double* out, std::size_t n);
  // out += x * y (elementwise)
  void (*mul_add)(const double* x, const double* y, double* out,
                  std::size_t n);
  double (*sum)(const double* x, std::size_t n);
};

const KernelTable& scalar_table();

// nullptr when the AVX2 variants were not compiled in or the CPU lacks
// AVX2+FMA.
const KernelTable* avx2_table();

// The table selected at first use: AVX2 when available, unless the
// MRTTS_KERNELS environment variable is set to "scalar".
const KernelTable& active();

// Overrides the runtime selection (tests and benchmarks).
void set_active(const KernelTable& table);

bool cpu_supports_avx2_fma();

}  // namespace mrtts::kernels

#endif  // MRTTS_KERNELS_KERNELS_H_
