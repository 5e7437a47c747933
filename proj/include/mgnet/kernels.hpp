#pragma once

// Dense double-precision kernels used by the training and embedding inner
// loops. Every kernel has a scalar reference implementation and, on x86-64
// with AVX2+FMA, a vectorized variant. The active backend is chosen once at
// startup from CPUID and can be overridden with set_backend() or the
// MGNET_KERNELS environment variable ("scalar" or "avx2").
//
// Contract: elementwise kernels (vadd, vmul, axpy, relu_*) produce
// bit-identical results across backends. Reduction kernels (dot, sum,
// sq_diff_sum) and gemm may differ in summation order; they agree with the
// scalar reference to tight relative tolerance and are equivalence-tested.

#include <cstddef>

namespace mgnet::kern {

enum class Backend { scalar, avx2 };

Backend active_backend();
void set_backend(Backend b);

// True if the CPU (and build) can run the AVX2 variants.
bool avx2_available();

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
// sum of (a[i] - b[i])^2
double sq_diff_sum(const double* a, const double* b, std::size_t n);

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);
void vadd(const double* a, const double* b, double* out, std::size_t n);
void vmul(const double* a, const double* b, double* out, std::size_t n);

void relu_fwd(const double* x, double* out, std::size_t n);
// gx[i] += g[i] where x[i] > 0
void relu_bwd(const double* x, const double* g, double* gx, std::size_t n);

// Row-major C[M x N] = (accumulate ? C : 0) + A[M x K] * B[K x N].
// lda/ldb/ldc are row strides in elements.
void gemm(bool accumulate, std::size_t M, std::size_t K, std::size_t N,
          const double* A, std::size_t lda, const double* B, std::size_t ldb,
          double* C, std::size_t ldc);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sq_diff_sum(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void vadd(const double* a, const double* b, double* out, std::size_t n);
void vmul(const double* a, const double* b, double* out, std::size_t n);
void relu_fwd(const double* x, double* out, std::size_t n);
void relu_bwd(const double* x, const double* g, double* gx, std::size_t n);
void gemm(bool accumulate, std::size_t M, std::size_t K, std::size_t N,
          const double* A, std::size_t lda, const double* B, std::size_t ldb,
          double* C, std::size_t ldc);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define MGNET_HAVE_AVX2_BUILD 1
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sq_diff_sum(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void vadd(const double* a, const double* b, double* out, std::size_t n);
void vmul(const double* a, const double* b, double* out, std::size_t n);
void relu_fwd(const double* x, double* out, std::size_t n);
void relu_bwd(const double* x, const double* g, double* gx, std::size_t n);
void gemm(bool accumulate, std::size_t M, std::size_t K, std::size_t N,
          const double* A, std::size_t lda, const double* B, std::size_t ldb,
          double* C, std::size_t ldc);
}  // namespace avx2
#endif

}  // namespace mgnet::kern
