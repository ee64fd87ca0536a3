#include "aegcn/sparse_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "aegcn/kernels.hpp"

namespace aegcn {
namespace {

void require_same_shape(const SparseMatrix& a, const SparseMatrix& b, const char* what) {
  if (a.rows != b.rows || a.cols != b.cols) throw DimensionError(what);
}

std::vector<double> positive_row_sums(const SparseMatrix& a, const char* what) {
  std::vector<double> rs = row_sums(a);
  for (index_t i = 0; i < a.rows; ++i) {
    if (rs[i] <= 0.0)
      throw DegenerateDegreeError(std::string(what) + ": row " + std::to_string(i) +
                                  " has non-positive sum " + std::to_string(rs[i]));
  }
  return rs;
}

}  // namespace

SparseMatrix add_self_loops(const SparseMatrix& a) {
  if (a.rows != a.cols) throw DimensionError("add_self_loops: matrix must be square");
  SparseMatrix out(a.rows, a.cols);
  out.col_idx.reserve(a.col_idx.size() + a.rows);
  out.values.reserve(a.values.size() + a.rows);
  for (index_t i = 0; i < a.rows; ++i) {
    bool placed = false;
    for (index_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      const index_t c = a.col_idx[p];
      if (!placed && c >= i) {
        const bool merge = (c == i);
        out.col_idx.push_back(i);
        out.values.push_back(1.0 + (merge ? a.values[p] : 0.0));
        placed = true;
        if (merge) continue;
      }
      out.col_idx.push_back(c);
      out.values.push_back(a.values[p]);
    }
    if (!placed) {
      out.col_idx.push_back(i);
      out.values.push_back(1.0);
    }
    out.row_ptr[i + 1] = out.nnz();
  }
  return out;
}

std::vector<double> row_sums(const SparseMatrix& a) {
  std::vector<double> rs(static_cast<std::size_t>(a.rows), 0.0);
  for (index_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (index_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) s += a.values[p];
    rs[i] = s;
  }
  return rs;
}

SparseMatrix sym_normalize(const SparseMatrix& a) {
  if (a.rows != a.cols) throw DimensionError("sym_normalize: matrix must be square");
  const std::vector<double> rs = positive_row_sums(a, "sym_normalize");
  std::vector<double> inv_sqrt(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) inv_sqrt[i] = 1.0 / std::sqrt(rs[i]);
  SparseMatrix out = a;
  for (index_t i = 0; i < a.rows; ++i)
    for (index_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
      out.values[p] = a.values[p] * inv_sqrt[i] * inv_sqrt[a.col_idx[p]];
  return out;
}

SparseMatrix row_normalize(const SparseMatrix& a) {
  const std::vector<double> rs = positive_row_sums(a, "row_normalize");
  SparseMatrix out = a;
  for (index_t i = 0; i < a.rows; ++i)
    for (index_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
      out.values[p] = a.values[p] / rs[i];
  return out;
}

DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& h) {
  DenseMatrix out(s.rows, h.cols);
  spmm_into(s, h, out);
  return out;
}

void spmm_into(const SparseMatrix& s, const DenseMatrix& h, DenseMatrix& out) {
  if (s.cols != h.rows) throw DimensionError("spmm: inner dimensions differ");
  if (out.rows != s.rows || out.cols != h.cols) throw DimensionError("spmm: bad output shape");
  const auto& axpy = kernels::active().axpy;
  const std::size_t width = static_cast<std::size_t>(h.cols);
  for (index_t i = 0; i < s.rows; ++i) {
    double* oi = out.row(i);
    std::memset(oi, 0, width * sizeof(double));
    for (index_t p = s.row_ptr[i]; p < s.row_ptr[i + 1]; ++p)
      axpy(width, s.values[p], h.row(s.col_idx[p]), oi);
  }
}

void spmm_transpose_into(const SparseMatrix& s, const DenseMatrix& h, DenseMatrix& out,
                         bool accumulate) {
  if (s.rows != h.rows) throw DimensionError("spmm_transpose: inner dimensions differ");
  if (out.rows != s.cols || out.cols != h.cols)
    throw DimensionError("spmm_transpose: bad output shape");
  if (!accumulate) out.fill(0.0);
  const auto& axpy = kernels::active().axpy;
  const std::size_t width = static_cast<std::size_t>(h.cols);
  for (index_t i = 0; i < s.rows; ++i) {
    const double* hi = h.row(i);
    for (index_t p = s.row_ptr[i]; p < s.row_ptr[i + 1]; ++p)
      axpy(width, s.values[p], hi, out.row(s.col_idx[p]));
  }
}

SparseMatrix sp_sp_matmul(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols != b.rows) throw DimensionError("sp_sp_matmul: inner dimensions differ");
  SparseMatrix out(a.rows, b.cols);
  std::vector<double> scratch(static_cast<std::size_t>(b.cols), 0.0);
  std::vector<index_t> stamp(static_cast<std::size_t>(b.cols), -1);
  std::vector<index_t> touched;
  for (index_t i = 0; i < a.rows; ++i) {
    touched.clear();
    for (index_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      const index_t mid = a.col_idx[p];
      const double av = a.values[p];
      for (index_t q = b.row_ptr[mid]; q < b.row_ptr[mid + 1]; ++q) {
        const index_t c = b.col_idx[q];
        if (stamp[c] != i) {
          stamp[c] = i;
          scratch[c] = 0.0;
          touched.push_back(c);
        }
        scratch[c] += av * b.values[q];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (index_t c : touched) {
      out.col_idx.push_back(c);
      out.values.push_back(scratch[c]);
    }
    out.row_ptr[i + 1] = out.nnz();
  }
  return out;
}

SparseMatrix weighted_sum(const std::vector<const SparseMatrix*>& mats,
                          const std::vector<double>& w) {
  if (mats.empty()) throw ArgumentError("weighted_sum: empty matrix list");
  if (mats.size() != w.size())
    throw ArgumentError("weighted_sum: weight count does not match matrix count");
  for (const SparseMatrix* m : mats) require_same_shape(*mats.front(), *m, "weighted_sum: shape mismatch");
  const SparseMatrix& first = *mats.front();
  SparseMatrix out(first.rows, first.cols);
  std::vector<double> scratch(static_cast<std::size_t>(first.cols), 0.0);
  std::vector<index_t> stamp(static_cast<std::size_t>(first.cols), -1);
  std::vector<index_t> touched;
  for (index_t i = 0; i < first.rows; ++i) {
    touched.clear();
    for (std::size_t k = 0; k < mats.size(); ++k) {
      const SparseMatrix& m = *mats[k];
      for (index_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) {
        const index_t c = m.col_idx[p];
        if (stamp[c] != i) {
          stamp[c] = i;
          scratch[c] = 0.0;
          touched.push_back(c);
        }
        scratch[c] += w[k] * m.values[p];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (index_t c : touched) {
      out.col_idx.push_back(c);
      out.values.push_back(scratch[c]);
    }
    out.row_ptr[i + 1] = out.nnz();
  }
  return out;
}

SparseMatrix weighted_sum(const std::vector<SparseMatrix>& mats, const std::vector<double>& w) {
  std::vector<const SparseMatrix*> ptrs;
  ptrs.reserve(mats.size());
  for (const SparseMatrix& m : mats) ptrs.push_back(&m);
  return weighted_sum(ptrs, w);
}

SparseMatrix sampled_rowrow_dot(const SparseMatrix& pattern, const DenseMatrix& a,
                                const DenseMatrix& b) {
  if (pattern.rows != a.rows || pattern.cols != b.rows || a.cols != b.cols)
    throw DimensionError("sampled_rowrow_dot: shape mismatch");
  const auto& dot = kernels::active().dot;
  SparseMatrix out = pattern;
  const std::size_t width = static_cast<std::size_t>(a.cols);
  for (index_t i = 0; i < pattern.rows; ++i) {
    const double* ai = a.row(i);
    for (index_t p = pattern.row_ptr[i]; p < pattern.row_ptr[i + 1]; ++p)
      out.values[p] = dot(width, ai, b.row(pattern.col_idx[p]));
  }
  return out;
}

double pattern_dot(const SparseMatrix& a, const SparseMatrix& b) {
  require_same_shape(a, b, "pattern_dot: shape mismatch");
  double total = 0.0;
  for (index_t i = 0; i < a.rows; ++i) {
    index_t pa = a.row_ptr[i];
    const index_t pa_end = a.row_ptr[i + 1];
    for (index_t pb = b.row_ptr[i]; pb < b.row_ptr[i + 1]; ++pb) {
      const index_t c = b.col_idx[pb];
      while (pa < pa_end && a.col_idx[pa] < c) ++pa;
      if (pa < pa_end && a.col_idx[pa] == c) total += a.values[pa] * b.values[pb];
    }
  }
  return total;
}

SparseMatrix row_normalize_backward(const SparseMatrix& grad_p, const SparseMatrix& p,
                                    const std::vector<double>& rowsum) {
  require_same_shape(grad_p, p, "row_normalize_backward: shape mismatch");
  if (grad_p.row_ptr != p.row_ptr || grad_p.col_idx != p.col_idx)
    throw ArgumentError("row_normalize_backward: operands must share one sparsity pattern");
  if (rowsum.size() != static_cast<std::size_t>(p.rows))
    throw DimensionError("row_normalize_backward: rowsum length mismatch");
  SparseMatrix out = grad_p;
  for (index_t i = 0; i < p.rows; ++i) {
    double s = 0.0;
    for (index_t q = p.row_ptr[i]; q < p.row_ptr[i + 1]; ++q)
      s += grad_p.values[q] * p.values[q];
    const double inv_r = 1.0 / rowsum[i];
    for (index_t q = p.row_ptr[i]; q < p.row_ptr[i + 1]; ++q)
      out.values[q] = (grad_p.values[q] - s) * inv_r;
  }
  return out;
}

SparseMatrix pattern_add(const SparseMatrix& a, const SparseMatrix& b) {
  require_same_shape(a, b, "pattern_add: shape mismatch");
  if (a.row_ptr != b.row_ptr || a.col_idx != b.col_idx)
    throw ArgumentError("pattern_add: operands must share one sparsity pattern");
  SparseMatrix out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
  return out;
}

}  // namespace aegcn
