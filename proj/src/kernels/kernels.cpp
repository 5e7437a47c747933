#include "mgnet/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace mgnet::kern {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double sq_diff_sum(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void vadd(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void vmul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void relu_fwd(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd(const double* x, const double* g, double* gx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > 0.0) gx[i] += g[i];
}

void gemm(bool accumulate, std::size_t M, std::size_t K, std::size_t N,
          const double* A, std::size_t lda, const double* B, std::size_t ldb,
          double* C, std::size_t ldc) {
  for (std::size_t i = 0; i < M; ++i) {
    double* crow = C + i * ldc;
    if (!accumulate) std::memset(crow, 0, N * sizeof(double));
    for (std::size_t k = 0; k < K; ++k) {
      const double a = A[i * lda + k];
      if (a == 0.0) continue;
      const double* brow = B + k * ldb;
      for (std::size_t j = 0; j < N; ++j) crow[j] += a * brow[j];
    }
  }
}

}  // namespace scalar

namespace {

struct Dispatch {
  Backend backend;
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*sq_diff_sum)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*vadd)(const double*, const double*, double*, std::size_t);
  void (*vmul)(const double*, const double*, double*, std::size_t);
  void (*relu_fwd)(const double*, double*, std::size_t);
  void (*relu_bwd)(const double*, const double*, double*, std::size_t);
  void (*gemm)(bool, std::size_t, std::size_t, std::size_t, const double*,
               std::size_t, const double*, std::size_t, double*, std::size_t);
};

constexpr Dispatch kScalar = {
    Backend::scalar,    scalar::dot,  scalar::sum,  scalar::sq_diff_sum,
    scalar::axpy,       scalar::vadd, scalar::vmul, scalar::relu_fwd,
    scalar::relu_bwd,   scalar::gemm};

#ifdef MGNET_HAVE_AVX2_BUILD
constexpr Dispatch kAvx2 = {
    Backend::avx2,    avx2::dot,  avx2::sum,  avx2::sq_diff_sum,
    avx2::axpy,       avx2::vadd, avx2::vmul, avx2::relu_fwd,
    avx2::relu_bwd,   avx2::gemm};
#endif

bool cpu_has_avx2() {
#ifdef MGNET_HAVE_AVX2_BUILD
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Dispatch* select_initial() {
  if (const char* env = std::getenv("MGNET_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &kScalar;
#ifdef MGNET_HAVE_AVX2_BUILD
    if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return &kAvx2;
#endif
  }
#ifdef MGNET_HAVE_AVX2_BUILD
  if (cpu_has_avx2()) return &kAvx2;
#endif
  return &kScalar;
}

const Dispatch* g_dispatch = select_initial();

}  // namespace

bool avx2_available() { return cpu_has_avx2(); }

Backend active_backend() { return g_dispatch->backend; }

void set_backend(Backend b) {
  if (b == Backend::scalar) {
    g_dispatch = &kScalar;
    return;
  }
#ifdef MGNET_HAVE_AVX2_BUILD
  if (b == Backend::avx2 && cpu_has_avx2()) {
    g_dispatch = &kAvx2;
    return;
  }
#endif
  g_dispatch = &kScalar;
}

double dot(const double* a, const double* b, std::size_t n) {
  return g_dispatch->dot(a, b, n);
}
double sum(const double* a, std::size_t n) { return g_dispatch->sum(a, n); }
double sq_diff_sum(const double* a, const double* b, std::size_t n) {
  return g_dispatch->sq_diff_sum(a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  g_dispatch->axpy(alpha, x, y, n);
}
void vadd(const double* a, const double* b, double* out, std::size_t n) {
  g_dispatch->vadd(a, b, out, n);
}
void vmul(const double* a, const double* b, double* out, std::size_t n) {
  g_dispatch->vmul(a, b, out, n);
}
void relu_fwd(const double* x, double* out, std::size_t n) {
  g_dispatch->relu_fwd(x, out, n);
}
void relu_bwd(const double* x, const double* g, double* gx, std::size_t n) {
  g_dispatch->relu_bwd(x, g, gx, n);
}
void gemm(bool accumulate, std::size_t M, std::size_t K, std::size_t N,
          const double* A, std::size_t lda, const double* B, std::size_t ldb,
          double* C, std::size_t ldc) {
  g_dispatch->gemm(accumulate, M, K, N, A, lda, B, ldb, C, ldc);
}

}  // namespace mgnet::kern
