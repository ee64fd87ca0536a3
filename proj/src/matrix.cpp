#include "aegcn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aegcn/kernels.hpp"

namespace aegcn {

DenseMatrix DenseMatrix::identity(index_t n) {
  DenseMatrix m(n, n);
  for (index_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void validate_csr(const SparseMatrix& m) {
  if (m.rows < 0 || m.cols < 0) throw DimensionError("csr: negative shape");
  if (m.row_ptr.size() != static_cast<std::size_t>(m.rows) + 1)
    throw DimensionError("csr: row_ptr length " + std::to_string(m.row_ptr.size()) +
                         " does not match rows " + std::to_string(m.rows));
  if (m.col_idx.size() != m.values.size())
    throw DimensionError("csr: col_idx and values lengths differ");
  if (m.row_ptr.front() != 0)
    throw ArgumentError("csr: row_ptr must start at 0");
  if (m.row_ptr.back() != m.nnz())
    throw ArgumentError("csr: row_ptr must end at nnz");
  for (index_t i = 0; i < m.rows; ++i) {
    const index_t begin = m.row_ptr[i];
    const index_t end = m.row_ptr[i + 1];
    if (end < begin)
      throw ArgumentError("csr: row_ptr decreases at row " + std::to_string(i));
    for (index_t p = begin; p < end; ++p) {
      const index_t c = m.col_idx[p];
      if (c < 0 || c >= m.cols)
        throw ArgumentError("csr: column " + std::to_string(c) + " out of range in row " +
                            std::to_string(i));
      if (p > begin && m.col_idx[p - 1] >= c)
        throw ArgumentError("csr: columns not strictly increasing in row " + std::to_string(i));
    }
  }
}

SparseMatrix csr_from_triplets(index_t rows, index_t cols, std::vector<Triplet> entries) {
  for (const Triplet& t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw ArgumentError("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                          ") out of range for " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m(rows, cols);
  m.col_idx.reserve(entries.size());
  m.values.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < entries.size() && entries[j].row == entries[i].row &&
           entries[j].col == entries[i].col) {
      sum += entries[j].value;
      ++j;
    }
    m.col_idx.push_back(entries[i].col);
    m.values.push_back(sum);
    m.row_ptr[entries[i].row + 1] = m.nnz();
    i = j;
  }
  for (index_t r = 0; r < rows; ++r)
    if (m.row_ptr[r + 1] < m.row_ptr[r]) m.row_ptr[r + 1] = m.row_ptr[r];
  return m;
}

DenseMatrix to_dense(const SparseMatrix& m) {
  DenseMatrix d(m.rows, m.cols);
  for (index_t i = 0; i < m.rows; ++i)
    for (index_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p)
      d(i, m.col_idx[p]) = m.values[p];
  return d;
}

SparseMatrix transpose(const SparseMatrix& m) {
  SparseMatrix t(m.cols, m.rows);
  t.col_idx.resize(m.col_idx.size());
  t.values.resize(m.values.size());
  std::vector<index_t> count(static_cast<std::size_t>(m.cols) + 1, 0);
  for (index_t c : m.col_idx) ++count[c + 1];
  for (index_t c = 0; c < m.cols; ++c) count[c + 1] += count[c];
  t.row_ptr.assign(count.begin(), count.end());
  std::vector<index_t> next(count.begin(), count.end() - 1);
  for (index_t i = 0; i < m.rows; ++i) {
    for (index_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) {
      const index_t dst = next[m.col_idx[p]]++;
      t.col_idx[dst] = i;
      t.values[dst] = m.values[p];
    }
  }
  return t;
}

bool all_finite(const DenseMatrix& m) {
  for (double x : m.v)
    if (!std::isfinite(x)) return false;
  return true;
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols == b.rows, "matmul: inner dimensions differ");
  DenseMatrix c(a.rows, b.cols);
  kernels::active().gemm_nn(a.rows, b.cols, a.cols, a.v.data(), a.cols, b.v.data(), b.cols,
                            c.v.data(), c.cols, false);
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows == b.rows, "matmul_tn: inner dimensions differ");
  DenseMatrix c(a.cols, b.cols);
  kernels::active().gemm_tn(a.cols, b.cols, a.rows, a.v.data(), a.cols, b.v.data(), b.cols,
                            c.v.data(), c.cols, false);
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols == b.cols, "matmul_nt: inner dimensions differ");
  DenseMatrix c(a.rows, b.rows);
  kernels::active().gemm_nt(a.rows, b.rows, a.cols, a.v.data(), a.cols, b.v.data(), b.cols,
                            c.v.data(), c.cols, false);
  return c;
}

void matmul_acc(DenseMatrix& c, const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols, "matmul_acc: shape mismatch");
  kernels::active().gemm_nn(a.rows, b.cols, a.cols, a.v.data(), a.cols, b.v.data(), b.cols,
                            c.v.data(), c.cols, true);
}

void matmul_tn_acc(DenseMatrix& c, const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols,
          "matmul_tn_acc: shape mismatch");
  kernels::active().gemm_tn(a.cols, b.cols, a.rows, a.v.data(), a.cols, b.v.data(), b.cols,
                            c.v.data(), c.cols, true);
}

void matmul_nt_acc(DenseMatrix& c, const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows,
          "matmul_nt_acc: shape mismatch");
  kernels::active().gemm_nt(a.rows, b.rows, a.cols, a.v.data(), a.cols, b.v.data(), b.cols,
                            c.v.data(), c.cols, true);
}

}  // namespace aegcn
