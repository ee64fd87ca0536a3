// NEON kernel variant for aarch64, mirroring the AVX2 structure with 128-bit
// lanes. NEON is baseline on aarch64, so no runtime feature check is needed.
#include "aegcn/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cstring>

namespace aegcn::kernels {
namespace {

constexpr std::size_t kColTile = 1024;
constexpr std::size_t kKChunk = 128;

inline double hsum(float64x2_t v) { return vgetq_lane_f64(v, 0) + vgetq_lane_f64(v, 1); }

void axpy_neon(std::size_t n, double a, const double* x, double* y) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float64x2_t y0 = vld1q_f64(y + i);
    float64x2_t y1 = vld1q_f64(y + i + 2);
    y0 = vfmaq_f64(y0, va, vld1q_f64(x + i));
    y1 = vfmaq_f64(y1, va, vld1q_f64(x + i + 2));
    vst1q_f64(y + i, y0);
    vst1q_f64(y + i + 2, y1);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

double dot_neon(std::size_t n, const double* x, const double* y) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  float64x2_t acc2 = vdupq_n_f64(0.0);
  float64x2_t acc3 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    acc2 = vfmaq_f64(acc2, vld1q_f64(x + i + 4), vld1q_f64(y + i + 4));
    acc3 = vfmaq_f64(acc3, vld1q_f64(x + i + 6), vld1q_f64(y + i + 6));
  }
  double s = hsum(vaddq_f64(vaddq_f64(acc0, acc1), vaddq_f64(acc2, acc3)));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

// 4x4 register tile; broadcast element comes from `a_elem(r, p)` so the nn and
// tn walks share the body.
template <typename AElem>
inline void panel_rows(std::size_t rows, std::size_t cols, std::size_t k,
                       AElem a_elem, const double* b, std::size_t ldb,
                       double* c, std::size_t ldc, bool accumulate) {
  const std::size_t c4 = cols & ~std::size_t(3);
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) {
    for (std::size_t j = 0; j < c4; j += 4) {
      float64x2_t t[4][2];
      for (std::size_t r = 0; r < 4; ++r) {
        if (accumulate) {
          t[r][0] = vld1q_f64(c + (i + r) * ldc + j);
          t[r][1] = vld1q_f64(c + (i + r) * ldc + j + 2);
        } else {
          t[r][0] = vdupq_n_f64(0.0);
          t[r][1] = vdupq_n_f64(0.0);
        }
      }
      for (std::size_t p = 0; p < k; ++p) {
        const float64x2_t b0 = vld1q_f64(b + p * ldb + j);
        const float64x2_t b1 = vld1q_f64(b + p * ldb + j + 2);
        for (std::size_t r = 0; r < 4; ++r) {
          const float64x2_t ar = vdupq_n_f64(a_elem(i + r, p));
          t[r][0] = vfmaq_f64(t[r][0], ar, b0);
          t[r][1] = vfmaq_f64(t[r][1], ar, b1);
        }
      }
      for (std::size_t r = 0; r < 4; ++r) {
        vst1q_f64(c + (i + r) * ldc + j, t[r][0]);
        vst1q_f64(c + (i + r) * ldc + j + 2, t[r][1]);
      }
    }
    for (std::size_t j = c4; j < cols; ++j) {
      for (std::size_t r = 0; r < 4; ++r) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += a_elem(i + r, p) * b[p * ldb + j];
        double* cp = c + (i + r) * ldc + j;
        *cp = accumulate ? *cp + s : s;
      }
    }
  }
  for (; i < rows; ++i) {
    for (std::size_t j = 0; j < c4; j += 4) {
      float64x2_t c0, c1;
      if (accumulate) {
        c0 = vld1q_f64(c + i * ldc + j);
        c1 = vld1q_f64(c + i * ldc + j + 2);
      } else {
        c0 = vdupq_n_f64(0.0);
        c1 = vdupq_n_f64(0.0);
      }
      for (std::size_t p = 0; p < k; ++p) {
        const float64x2_t ar = vdupq_n_f64(a_elem(i, p));
        c0 = vfmaq_f64(c0, ar, vld1q_f64(b + p * ldb + j));
        c1 = vfmaq_f64(c1, ar, vld1q_f64(b + p * ldb + j + 2));
      }
      vst1q_f64(c + i * ldc + j, c0);
      vst1q_f64(c + i * ldc + j + 2, c1);
    }
    for (std::size_t j = c4; j < cols; ++j) {
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

void gemm_nn_neon(std::size_t m, std::size_t n, std::size_t k,
                  const double* a, std::size_t lda,
                  const double* b, std::size_t ldb,
                  double* c, std::size_t ldc, bool accumulate) {
  gemm_broadcast(m, n, k,
                 [a, lda](std::size_t r, std::size_t p) { return a[r * lda + p]; },
                 b, ldb, c, ldc, accumulate);
}

void gemm_tn_neon(std::size_t m, std::size_t n, std::size_t k,
                  const double* a, std::size_t lda,
                  const double* b, std::size_t ldb,
                  double* c, std::size_t ldc, bool accumulate) {
  gemm_broadcast(m, n, k,
                 [a, lda](std::size_t r, std::size_t p) { return a[p * lda + r]; },
                 b, ldb, c, ldc, accumulate);
}

void gemm_nt_neon(std::size_t m, std::size_t n, std::size_t k,
                  const double* a, std::size_t lda,
                  const double* b, std::size_t ldb,
                  double* c, std::size_t ldc, bool accumulate) {
  const std::size_t n4 = n & ~std::size_t(3);
  const std::size_t k2 = k & ~std::size_t(1);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * lda;
    double* ci = c + i * ldc;
    std::size_t j = 0;
    for (; j < n4; j += 4) {
      float64x2_t acc0 = vdupq_n_f64(0.0);
      float64x2_t acc1 = vdupq_n_f64(0.0);
      float64x2_t acc2 = vdupq_n_f64(0.0);
      float64x2_t acc3 = vdupq_n_f64(0.0);
      const double* b0 = b + (j + 0) * ldb;
      const double* b1 = b + (j + 1) * ldb;
      const double* b2 = b + (j + 2) * ldb;
      const double* b3 = b + (j + 3) * ldb;
      for (std::size_t p = 0; p < k2; p += 2) {
        const float64x2_t va = vld1q_f64(ai + p);
        acc0 = vfmaq_f64(acc0, va, vld1q_f64(b0 + p));
        acc1 = vfmaq_f64(acc1, va, vld1q_f64(b1 + p));
        acc2 = vfmaq_f64(acc2, va, vld1q_f64(b2 + p));
        acc3 = vfmaq_f64(acc3, va, vld1q_f64(b3 + p));
      }
      double s[4] = {hsum(acc0), hsum(acc1), hsum(acc2), hsum(acc3)};
      for (std::size_t p = k2; p < k; ++p) {
        s[0] += ai[p] * b0[p];
        s[1] += ai[p] * b1[p];
        s[2] += ai[p] * b2[p];
        s[3] += ai[p] * b3[p];
      }
      for (std::size_t jj = 0; jj < 4; ++jj)
        ci[j + jj] = accumulate ? ci[j + jj] + s[jj] : s[jj];
    }
    for (; j < n; ++j) {
      const double s = dot_neon(k, ai, b + j * ldb);
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
}

const KernelTable kNeon = {
    "neon", axpy_neon, dot_neon,
    gemm_nn_neon, gemm_tn_neon, gemm_nt_neon,
};

}  // namespace

const KernelTable& neon_table() { return kNeon; }

}  // namespace aegcn::kernels

#endif  // aarch64
