#pragma once
// Dense row-major and CSR sparse matrix types shared by every module, plus
// dense products routed through the active kernel table.
//
// CSR invariants (checked by validate_csr): row_ptr has rows+1 monotonically
// non-decreasing offsets starting at 0 and ending at nnz; within each row
// col_idx is strictly increasing and in [0, cols). Explicit zeros are legal
// structural entries and several graph operations deliberately retain them so
// sparsity patterns stay fixed while values change.
#include <cstdint>
#include <vector>

#include "aegcn/errors.hpp"

namespace aegcn {

using index_t = std::int64_t;

struct DenseMatrix {
  index_t rows = 0;
  index_t cols = 0;
  std::vector<double> v;  // row-major, size rows*cols

  DenseMatrix() = default;
  DenseMatrix(index_t r, index_t c, double fill = 0.0)
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  double& operator()(index_t i, index_t j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(index_t i, index_t j) const { return v[static_cast<std::size_t>(i) * cols + j]; }
  double* row(index_t i) { return v.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(index_t i) const { return v.data() + static_cast<std::size_t>(i) * cols; }
  bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  static DenseMatrix identity(index_t n);
};

struct SparseMatrix {
  index_t rows = 0;
  index_t cols = 0;
  std::vector<index_t> row_ptr;  // size rows+1
  std::vector<index_t> col_idx;  // size nnz
  std::vector<double> values;    // size nnz

  SparseMatrix() = default;
  SparseMatrix(index_t r, index_t c) : rows(r), cols(c), row_ptr(static_cast<std::size_t>(r) + 1, 0) {}
  index_t nnz() const { return static_cast<index_t>(col_idx.size()); }
};

// Throws DimensionError or ArgumentError when a CSR invariant is violated.
void validate_csr(const SparseMatrix& m);

struct Triplet {
  index_t row;
  index_t col;
  double value;
};

// Build CSR from unordered triplets; duplicate (row, col) pairs are summed.
SparseMatrix csr_from_triplets(index_t rows, index_t cols, std::vector<Triplet> entries);

DenseMatrix to_dense(const SparseMatrix& m);
SparseMatrix transpose(const SparseMatrix& m);

bool all_finite(const DenseMatrix& m);

// Dense products via the active kernels. Shapes are checked; *_acc variants
// add into a preallocated result.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);     // a * b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);  // a^T * b
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);  // a * b^T
void matmul_acc(DenseMatrix& c, const DenseMatrix& a, const DenseMatrix& b);
void matmul_tn_acc(DenseMatrix& c, const DenseMatrix& a, const DenseMatrix& b);
void matmul_nt_acc(DenseMatrix& c, const DenseMatrix& a, const DenseMatrix& b);

}  // namespace aegcn
