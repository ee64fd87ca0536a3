#pragma once
// Runtime-dispatched arithmetic kernels: a scalar reference implementation plus
// SIMD variants (AVX2/FMA on x86-64, NEON on aarch64) selected once per
// process. Each variant uses a fixed reduction order, so results are
// deterministic for a given variant; variants are cross-checked against the
// scalar reference in tests at tolerance level (SIMD reassociates sums).
//
// Dispatch picks the best variant the CPU supports; the environment variable
// AEGCN_KERNELS=scalar|avx2|neon forces a specific one.
#include <cstddef>
#include <string_view>
#include <vector>

namespace aegcn::kernels {

struct KernelTable {
  const char* name;

  // y[0..n) += a * x[0..n)
  void (*axpy)(std::size_t n, double a, const double* x, double* y);

  // sum_i x[i] * y[i]
  double (*dot)(std::size_t n, const double* x, const double* y);

  // Row-major GEMM; C is m x n with leading dimension ldc. When accumulate is
  // false C is overwritten, otherwise the product is added to it.
  // nn: C (+)= A[m x k] * B[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k,
                  const double* a, std::size_t lda,
                  const double* b, std::size_t ldb,
                  double* c, std::size_t ldc, bool accumulate);
  // tn: C (+)= A[k x m]^T * B[k x n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k,
                  const double* a, std::size_t lda,
                  const double* b, std::size_t ldb,
                  double* c, std::size_t ldc, bool accumulate);
  // nt: C (+)= A[m x k] * B[n x k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k,
                  const double* a, std::size_t lda,
                  const double* b, std::size_t ldb,
                  double* c, std::size_t ldc, bool accumulate);
};

const KernelTable& scalar_table();

// Variants usable on this machine, scalar first. For equivalence tests.
std::vector<const KernelTable*> available_tables();

// Look up a variant by name among the available ones; nullptr if absent.
const KernelTable* table_by_name(std::string_view name);

// The table every module routes through. Resolved on first use.
const KernelTable& active();

}  // namespace aegcn::kernels
