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

// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// is only reached through avx2_table(), which checks the CPU first. Keep it
// free of inline library templates (std::fill and friends) so no AVX2-encoded
// copy of a shared inline function can leak into scalar code at link time.

#include <immintrin.h>

#include <cstddef>

#include "mrtts/kernels/kernels.h"

namespace mrtts::kernels {
namespace {

using std::size_t;

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// C[i, j] (+)= sum_p A(i, p) * B[p, j] with A(i, p) = a[i * rs + p * cs].
// Covers gemm_nn (rs = k, cs = 1) and gemm_tn (rs = 1, cs = m).
template <int kRows>
inline void row_block(int n, int k, const double* a, size_t rs, size_t cs,
                      const double* b, double* c, bool accumulate) {
  int j = 0;
  for (; j + 8 <= n; j += 8) {
    __m256d acc0[kRows];
    __m256d acc1[kRows];
    for (int r = 0; r < kRows; ++r) {
      acc0[r] = _mm256_setzero_pd();
      acc1[r] = _mm256_setzero_pd();
    }
    for (int p = 0; p < k; ++p) {
      const double* b_row = b + static_cast<size_t>(p) * n + j;
      const __m256d b0 = _mm256_loadu_pd(b_row);
      const __m256d b1 = _mm256_loadu_pd(b_row + 4);
      for (int r = 0; r < kRows; ++r) {
        const __m256d av = _mm256_broadcast_sd(a + r * rs + p * cs);
        acc0[r] = _mm256_fmadd_pd(av, b0, acc0[r]);
        acc1[r] = _mm256_fmadd_pd(av, b1, acc1[r]);
      }
    }
    for (int r = 0; r < kRows; ++r) {
      double* c_row = c + static_cast<size_t>(r) * n + j;
      if (accumulate) {
        acc0[r] = _mm256_add_pd(acc0[r], _mm256_loadu_pd(c_row));
        acc1[r] = _mm256_add_pd(acc1[r], _mm256_loadu_pd(c_row + 4));
      }
      _mm256_storeu_pd(c_row, acc0[r]);
      _mm256_storeu_pd(c_row + 4, acc1[r]);
    }
  }
  for (; j + 4 <= n; j += 4) {
    __m256d acc[kRows];
    for (int r = 0; r < kRows; ++r) acc[r] = _mm256_setzero_pd();
    for (int p = 0; p < k; ++p) {
      const __m256d bv = _mm256_loadu_pd(b + static_cast<size_t>(p) * n + j);
      for (int r = 0; r < kRows; ++r) {
        const __m256d av = _mm256_broadcast_sd(a + r * rs + p * cs);
        acc[r] = _mm256_fmadd_pd(av, bv, acc[r]);
      }
    }
    for (int r = 0; r < kRows; ++r) {
      double* c_row = c + static_cast<size_t>(r) * n + j;
      if (accumulate) acc[r] = _mm256_add_pd(acc[r], _mm256_loadu_pd(c_row));
      _mm256_storeu_pd(c_row, acc[r]);
    }
  }
  for (; j < n; ++j) {
    for (int r = 0; r < kRows; ++r) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) {
        acc += a[r * rs + p * cs] * b[static_cast<size_t>(p) * n + j];
      }
      double& out = c[static_cast<size_t>(r) * n + j];
      out = accumulate ? out + acc : acc;
    }
  }
}

inline void gemm_strided(int m, int n, int k, const double* a, size_t rs,
                         size_t cs, const double* b, double* c,
                         bool accumulate) {
  int i = 0;
  for (; i + 4 <= m; i += 4) {
    row_block<4>(n, k, a + i * rs, rs, cs, b, c + static_cast<size_t>(i) * n,
                 accumulate);
  }
  for (; i < m; ++i) {
    row_block<1>(n, k, a + i * rs, rs, cs, b, c + static_cast<size_t>(i) * n,
                 accumulate);
  }
}

void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c,
             bool accumulate) {
  gemm_strided(m, n, k, a, static_cast<size_t>(k), 1, b, c, accumulate);
}

void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c,
             bool accumulate) {
  gemm_strided(m, n, k, a, 1, static_cast<size_t>(m), b, c, accumulate);
}

void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c,
             bool accumulate) {
  const int k4 = k & ~3;
  for (int i = 0; i < m; ++i) {
    const double* a_row = a + static_cast<size_t>(i) * k;
    double* c_row = c + static_cast<size_t>(i) * n;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + static_cast<size_t>(j) * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      __m256d s0 = _mm256_setzero_pd();
      __m256d s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd();
      __m256d s3 = _mm256_setzero_pd();
      for (int p = 0; p < k4; p += 4) {
        const __m256d av = _mm256_loadu_pd(a_row + p);
        s0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b0 + p), s0);
        s1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b1 + p), s1);
        s2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b2 + p), s2);
        s3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b3 + p), s3);
      }
      double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
      for (int p = k4; p < k; ++p) {
        r0 += a_row[p] * b0[p];
        r1 += a_row[p] * b1[p];
        r2 += a_row[p] * b2[p];
        r3 += a_row[p] * b3[p];
      }
      if (accumulate) {
        c_row[j] += r0;
        c_row[j + 1] += r1;
        c_row[j + 2] += r2;
        c_row[j + 3] += r3;
      } else {
        c_row[j] = r0;
        c_row[j + 1] = r1;
        c_row[j + 2] = r2;
        c_row[j + 3] = r3;
      }
    }
    for (; j < n; ++j) {
      const double* b_row = b + static_cast<size_t>(j) * k;
      __m256d s = _mm256_setzero_pd();
      for (int p = 0; p < k4; p += 4) {
        s = _mm256_fmadd_pd(_mm256_loadu_pd(a_row + p),
                            _mm256_loadu_pd(b_row + p), s);
      }
      double r = hsum(s);
      for (int p = k4; p < k; ++p) r += a_row[p] * b_row[p];
      c_row[j] = accumulate ? c_row[j] + r : r;
    }
  }
}

double dot(const double* x, const double* y, size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4),
                         _mm256_loadu_pd(y + i + 4), s1);
  }
  for (; i + 4 <= n; i += 4) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
  }
  double r = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) r += x[i] * y[i];
  return r;
}

void axpy(double alpha, const double* x, double* y, size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void mul(const double* x, const double* y, double* out, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void mul_add(const double* x, const double* y, double* out, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(_mm256_loadu_pd(x + i),
                                              _mm256_loadu_pd(y + i),
                                              _mm256_loadu_pd(out + i)));
  }
  for (; i < n; ++i) out[i] += x[i] * y[i];
}

double sum(const double* x, size_t n) {
  __m256d s = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) s = _mm256_add_pd(s, _mm256_loadu_pd(x + i));
  double r = hsum(s);
  for (; i < n; ++i) r += x[i];
  return r;
}

}  // namespace

const KernelTable& avx2_table_unchecked() {
  static const KernelTable table{"avx2", gemm_nn, gemm_nt, gemm_tn, dot,
                                 axpy,   mul,     mul_add, sum};
  return table;
}

}  // namespace mrtts::kernels
