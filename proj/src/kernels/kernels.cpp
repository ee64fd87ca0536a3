// Scalar reference kernels and the runtime dispatcher.
#include "aegcn/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <string>

#include "aegcn/errors.hpp"

namespace aegcn::kernels {
namespace {

void axpy_scalar(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void zero_rows(std::size_t m, std::size_t n, double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i)
    std::memset(c + i * ldc, 0, n * sizeof(double));
}

void gemm_nn_scalar(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, std::size_t lda,
                    const double* b, std::size_t ldb,
                    double* c, std::size_t ldc, bool accumulate) {
  if (!accumulate) zero_rows(m, n, c, ldc);
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    const double* ai = a + i * lda;
    for (std::size_t p = 0; p < k; ++p) axpy_scalar(n, ai[p], b + p * ldb, ci);
  }
}

void gemm_tn_scalar(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, std::size_t lda,
                    const double* b, std::size_t ldb,
                    double* c, std::size_t ldc, bool accumulate) {
  if (!accumulate) zero_rows(m, n, c, ldc);
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    for (std::size_t p = 0; p < k; ++p) axpy_scalar(n, a[p * lda + i], b + p * ldb, ci);
  }
}

void gemm_nt_scalar(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, std::size_t lda,
                    const double* b, std::size_t ldb,
                    double* c, std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    const double* ai = a + i * lda;
    for (std::size_t j = 0; j < n; ++j) {
      const double s = dot_scalar(k, ai, b + j * ldb);
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
}

const KernelTable kScalar = {
    "scalar", axpy_scalar, dot_scalar,
    gemm_nn_scalar, gemm_tn_scalar, gemm_nt_scalar,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();  // defined in kernels_avx2.cpp
bool avx2_supported();
#endif
#if defined(__aarch64__)
const KernelTable& neon_table();  // defined in kernels_neon.cpp
#endif

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> tables{&kScalar};
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_supported()) tables.push_back(&avx2_table());
#endif
#if defined(__aarch64__)
  tables.push_back(&neon_table());
#endif
  return tables;
}

const KernelTable* table_by_name(std::string_view name) {
  for (const KernelTable* t : available_tables())
    if (name == t->name) return t;
  return nullptr;
}

const KernelTable& active() {
  static const KernelTable* chosen = [] {
    if (const char* env = std::getenv("AEGCN_KERNELS")) {
      const KernelTable* t = table_by_name(env);
      if (t == nullptr)
        throw ArgumentError("AEGCN_KERNELS names an unavailable kernel variant: " +
                            std::string(env));
      return t;
    }
    return available_tables().back();  // best supported variant
  }();
  return *chosen;
}

}  // namespace aegcn::kernels
