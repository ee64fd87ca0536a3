// AVX2/FMA kernel variant. This translation unit is compiled with
// -mavx2 -mfma and must only be entered after the cpuid check below passes.
#include "aegcn/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cstring>

namespace aegcn::kernels {
namespace {

// Column tile so the B panel stays cache resident across row blocks, and a k
// chunk bounding the panel height. C tiles accumulate across k chunks.
constexpr std::size_t kColTile = 1024;
constexpr std::size_t kKChunk = 128;

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  lo = _mm_add_sd(lo, sh);
  return _mm_cvtsd_f64(lo);
}

void axpy_avx2(std::size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
    y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), acc3);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

// 4x8 register tile over one (rows x cols) panel of C; broadcast element comes
// from `a_elem(r, p)` so the nn and tn walks share the body.
template <typename AElem>
inline void panel_rows(std::size_t rows, std::size_t cols, std::size_t k,
                       AElem a_elem, const double* b, std::size_t ldb,
                       double* c, std::size_t ldc, bool accumulate) {
  const std::size_t c8 = cols & ~std::size_t(7);
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) {
    for (std::size_t j = 0; j < c8; j += 8) {
      __m256d c00, c01, c10, c11, c20, c21, c30, c31;
      if (accumulate) {
        c00 = _mm256_loadu_pd(c + (i + 0) * ldc + j);
        c01 = _mm256_loadu_pd(c + (i + 0) * ldc + j + 4);
        c10 = _mm256_loadu_pd(c + (i + 1) * ldc + j);
        c11 = _mm256_loadu_pd(c + (i + 1) * ldc + j + 4);
        c20 = _mm256_loadu_pd(c + (i + 2) * ldc + j);
        c21 = _mm256_loadu_pd(c + (i + 2) * ldc + j + 4);
        c30 = _mm256_loadu_pd(c + (i + 3) * ldc + j);
        c31 = _mm256_loadu_pd(c + (i + 3) * ldc + j + 4);
      } else {
        c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm256_setzero_pd();
      }
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d b0 = _mm256_loadu_pd(b + p * ldb + j);
        const __m256d b1 = _mm256_loadu_pd(b + p * ldb + j + 4);
        __m256d ar = _mm256_set1_pd(a_elem(i + 0, p));
        c00 = _mm256_fmadd_pd(ar, b0, c00);
        c01 = _mm256_fmadd_pd(ar, b1, c01);
        ar = _mm256_set1_pd(a_elem(i + 1, p));
        c10 = _mm256_fmadd_pd(ar, b0, c10);
        c11 = _mm256_fmadd_pd(ar, b1, c11);
        ar = _mm256_set1_pd(a_elem(i + 2, p));
        c20 = _mm256_fmadd_pd(ar, b0, c20);
        c21 = _mm256_fmadd_pd(ar, b1, c21);
        ar = _mm256_set1_pd(a_elem(i + 3, p));
        c30 = _mm256_fmadd_pd(ar, b0, c30);
        c31 = _mm256_fmadd_pd(ar, b1, c31);
      }
      _mm256_storeu_pd(c + (i + 0) * ldc + j, c00);
      _mm256_storeu_pd(c + (i + 0) * ldc + j + 4, c01);
      _mm256_storeu_pd(c + (i + 1) * ldc + j, c10);
      _mm256_storeu_pd(c + (i + 1) * ldc + j + 4, c11);
      _mm256_storeu_pd(c + (i + 2) * ldc + j, c20);
      _mm256_storeu_pd(c + (i + 2) * ldc + j + 4, c21);
      _mm256_storeu_pd(c + (i + 3) * ldc + j, c30);
      _mm256_storeu_pd(c + (i + 3) * ldc + j + 4, c31);
    }
    for (std::size_t j = c8; j < cols; ++j) {
      for (std::size_t r = 0; r < 4; ++r) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += a_elem(i + r, p) * b[p * ldb + j];
        double* cp = c + (i + r) * ldc + j;
        *cp = accumulate ? *cp + s : s;
      }
    }
  }
  for (; i < rows; ++i) {
    for (std::size_t j = 0; j < c8; j += 8) {
      __m256d c0, c1;
      if (accumulate) {
        c0 = _mm256_loadu_pd(c + i * ldc + j);
        c1 = _mm256_loadu_pd(c + i * ldc + j + 4);
      } else {
        c0 = c1 = _mm256_setzero_pd();
      }
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d ar = _mm256_set1_pd(a_elem(i, p));
        c0 = _mm256_fmadd_pd(ar, _mm256_loadu_pd(b + p * ldb + j), c0);
        c1 = _mm256_fmadd_pd(ar, _mm256_loadu_pd(b + p * ldb + j + 4), c1);
      }
      _mm256_storeu_pd(c + i * ldc + j, c0);
      _mm256_storeu_pd(c + i * ldc + j + 4, c1);
    }
    for (std::size_t j = c8; j < cols; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a_elem(i, p) * b[p * ldb + j];
      double* cp = c + i * ldc + j;
      *cp = accumulate ? *cp + s : s;
    }
  }
}

template <typename AElem>
void gemm_broadcast(std::size_t m, std::size_t n, std::size_t k, AElem a_elem,
                    const double* b, std::size_t ldb, double* c, std::size_t ldc,
                    bool accumulate) {
  if (k == 0) {
    if (!accumulate)
      for (std::size_t i = 0; i < m; ++i) std::memset(c + i * ldc, 0, n * sizeof(double));
    return;
  }
  for (std::size_t j0 = 0; j0 < n; j0 += kColTile) {
    const std::size_t jn = (n - j0 < kColTile) ? n - j0 : kColTile;
    for (std::size_t p0 = 0; p0 < k; p0 += kKChunk) {
      const std::size_t kn = (k - p0 < kKChunk) ? k - p0 : kKChunk;
      auto a_sub = [&](std::size_t r, std::size_t p) { return a_elem(r, p0 + p); };
      panel_rows(m, jn, kn, a_sub, b + p0 * ldb + j0, ldb, c + j0, ldc,
                 accumulate || p0 > 0);
    }
  }
}

void gemm_nn_avx2(std::size_t m, std::size_t n, std::size_t k,
                  const double* a, std::size_t lda,
                  const double* b, std::size_t ldb,
                  double* c, std::size_t ldc, bool accumulate) {
  gemm_broadcast(m, n, k,
                 [a, lda](std::size_t r, std::size_t p) { return a[r * lda + p]; },
                 b, ldb, c, ldc, accumulate);
}

void gemm_tn_avx2(std::size_t m, std::size_t n, std::size_t k,
                  const double* a, std::size_t lda,
                  const double* b, std::size_t ldb,
                  double* c, std::size_t ldc, bool accumulate) {
  gemm_broadcast(m, n, k,
                 [a, lda](std::size_t r, std::size_t p) { return a[p * lda + r]; },
                 b, ldb, c, ldc, accumulate);
}

void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t k,
                  const double* a, std::size_t lda,
                  const double* b, std::size_t ldb,
                  double* c, std::size_t ldc, bool accumulate) {
  const std::size_t n4 = n & ~std::size_t(3);
  const std::size_t k4 = k & ~std::size_t(3);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * lda;
    double* ci = c + i * ldc;
    std::size_t j = 0;
    for (; j < n4; j += 4) {
      __m256d acc0 = _mm256_setzero_pd();
      __m256d acc1 = _mm256_setzero_pd();
      __m256d acc2 = _mm256_setzero_pd();
      __m256d acc3 = _mm256_setzero_pd();
      const double* b0 = b + (j + 0) * ldb;
      const double* b1 = b + (j + 1) * ldb;
      const double* b2 = b + (j + 2) * ldb;
      const double* b3 = b + (j + 3) * ldb;
      for (std::size_t p = 0; p < k4; p += 4) {
        const __m256d va = _mm256_loadu_pd(ai + p);
        acc0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b0 + p), acc0);
        acc1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b1 + p), acc1);
        acc2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b2 + p), acc2);
        acc3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b3 + p), acc3);
      }
      double s[4] = {hsum(acc0), hsum(acc1), hsum(acc2), hsum(acc3)};
      for (std::size_t p = k4; p < k; ++p) {
        s[0] += ai[p] * b0[p];
        s[1] += ai[p] * b1[p];
        s[2] += ai[p] * b2[p];
        s[3] += ai[p] * b3[p];
      }
      for (std::size_t jj = 0; jj < 4; ++jj)
        ci[j + jj] = accumulate ? ci[j + jj] + s[jj] : s[jj];
    }
    for (; j < n; ++j) {
      const double s = dot_avx2(k, ai, b + j * ldb);
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
}

const KernelTable kAvx2 = {
    "avx2", axpy_avx2, dot_avx2,
    gemm_nn_avx2, gemm_tn_avx2, gemm_nt_avx2,
};

}  // namespace

const KernelTable& avx2_table() { return kAvx2; }

bool avx2_supported() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

}  // namespace aegcn::kernels

#endif  // x86-64
