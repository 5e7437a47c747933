#include "mgnet/kernels.hpp"

#ifdef MGNET_HAVE_AVX2_BUILD

#include <immintrin.h>

#include <cstring>

namespace mgnet::kern::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(a + i + 4));
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i];
  return acc;
}

double sq_diff_sum(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_fmadd_pd(d, d, acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void vadd(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void vmul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void relu_fwd(const double* x, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd(const double* x, const double* g, double* gx, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    __m256d add = _mm256_and_pd(mask, _mm256_loadu_pd(g + i));
    _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), add));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0) gx[i] += g[i];
}

// 4x8 register-tiled microkernel; edge strips fall back to the scalar path.
void gemm(bool accumulate, std::size_t M, std::size_t K, std::size_t N,
          const double* A, std::size_t lda, const double* B, std::size_t ldb,
          double* C, std::size_t ldc) {
  const std::size_t M4 = M - M % 4;
  const std::size_t N8 = N - N % 8;
  for (std::size_t i = 0; i < M4; i += 4) {
    for (std::size_t j = 0; j < N8; j += 8) {
      __m256d c00, c01, c10, c11, c20, c21, c30, c31;
      if (accumulate) {
        c00 = _mm256_loadu_pd(C + (i + 0) * ldc + j);
        c01 = _mm256_loadu_pd(C + (i + 0) * ldc + j + 4);
        c10 = _mm256_loadu_pd(C + (i + 1) * ldc + j);
        c11 = _mm256_loadu_pd(C + (i + 1) * ldc + j + 4);
        c20 = _mm256_loadu_pd(C + (i + 2) * ldc + j);
        c21 = _mm256_loadu_pd(C + (i + 2) * ldc + j + 4);
        c30 = _mm256_loadu_pd(C + (i + 3) * ldc + j);
        c31 = _mm256_loadu_pd(C + (i + 3) * ldc + j + 4);
      } else {
        c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm256_setzero_pd();
      }
      for (std::size_t k = 0; k < K; ++k) {
        const __m256d b0 = _mm256_loadu_pd(B + k * ldb + j);
        const __m256d b1 = _mm256_loadu_pd(B + k * ldb + j + 4);
        __m256d a = _mm256_set1_pd(A[(i + 0) * lda + k]);
        c00 = _mm256_fmadd_pd(a, b0, c00);
        c01 = _mm256_fmadd_pd(a, b1, c01);
        a = _mm256_set1_pd(A[(i + 1) * lda + k]);
        c10 = _mm256_fmadd_pd(a, b0, c10);
        c11 = _mm256_fmadd_pd(a, b1, c11);
        a = _mm256_set1_pd(A[(i + 2) * lda + k]);
        c20 = _mm256_fmadd_pd(a, b0, c20);
        c21 = _mm256_fmadd_pd(a, b1, c21);
        a = _mm256_set1_pd(A[(i + 3) * lda + k]);
        c30 = _mm256_fmadd_pd(a, b0, c30);
        c31 = _mm256_fmadd_pd(a, b1, c31);
      }
      _mm256_storeu_pd(C + (i + 0) * ldc + j, c00);
      _mm256_storeu_pd(C + (i + 0) * ldc + j + 4, c01);
      _mm256_storeu_pd(C + (i + 1) * ldc + j, c10);
      _mm256_storeu_pd(C + (i + 1) * ldc + j + 4, c11);
      _mm256_storeu_pd(C + (i + 2) * ldc + j, c20);
      _mm256_storeu_pd(C + (i + 2) * ldc + j + 4, c21);
      _mm256_storeu_pd(C + (i + 3) * ldc + j, c30);
      _mm256_storeu_pd(C + (i + 3) * ldc + j + 4, c31);
    }
  }
  if (N8 < N && M4 > 0)
    scalar::gemm(accumulate, M4, K, N - N8, A, lda, B + N8, ldb, C + N8, ldc);
  if (M4 < M)
    scalar::gemm(accumulate, M - M4, K, N, A + M4 * lda, lda, B, ldb,
                 C + M4 * ldc, ldc);
}

}  // namespace mgnet::kern::avx2

#endif  // MGNET_HAVE_AVX2_BUILD
