#pragma once
// Graph-operator algebra on CSR matrices: self-loops, degree normalizations,
// sparse-dense and sparse-sparse products, weighted sums, and the sampled
// products the backward passes need.
//
// Pattern discipline: weighted_sum produces the structural union of its inputs
// and sp_sp_matmul the structural product pattern, both retaining entries even
// when values cancel to zero. With strictly positive mixing weights this makes
// every derived pattern independent of the numeric weights, so gradients can
// be bookkept on fixed patterns across training.
#include <vector>

#include "aegcn/matrix.hpp"

namespace aegcn {

// A + I on a square matrix; the diagonal entry becomes structural everywhere.
SparseMatrix add_self_loops(const SparseMatrix& a);

// D^{-1/2} A D^{-1/2} with D the diagonal of row sums. Any row sum <= 0
// raises DegenerateDegreeError.
SparseMatrix sym_normalize(const SparseMatrix& a);

// D^{-1} A with D the diagonal of row sums; same degeneracy rule.
SparseMatrix row_normalize(const SparseMatrix& a);

std::vector<double> row_sums(const SparseMatrix& a);

// Dense result of sparse * dense.
DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& h);
void spmm_into(const SparseMatrix& s, const DenseMatrix& h, DenseMatrix& out);
// out (+)= s^T * h without materializing the transpose.
void spmm_transpose_into(const SparseMatrix& s, const DenseMatrix& h, DenseMatrix& out,
                         bool accumulate);

// Sparse * sparse with the structural product pattern (an output entry exists
// whenever some structural pair meets, even if the values cancel).
SparseMatrix sp_sp_matmul(const SparseMatrix& a, const SparseMatrix& b);

// sum_k w[k] * mats[k] over the structural union pattern. Shapes must agree
// and the list must be non-empty.
SparseMatrix weighted_sum(const std::vector<const SparseMatrix*>& mats,
                          const std::vector<double>& w);
SparseMatrix weighted_sum(const std::vector<SparseMatrix>& mats, const std::vector<double>& w);

// G with pattern's structure and G_ij = a.row(i) . b.row(j). Used to sample a
// dense gradient product at a sparse pattern.
SparseMatrix sampled_rowrow_dot(const SparseMatrix& pattern, const DenseMatrix& a,
                                const DenseMatrix& b);

// Frobenius inner product iterated over b's pattern; a entries outside b's
// pattern contribute nothing, b entries structurally absent from a read as 0.
double pattern_dot(const SparseMatrix& a, const SparseMatrix& b);

// Backward of P = D^{-1} M through the row normalization. Given G = dL/dP on
// M's pattern, returns dL/dM with entries (G_ij - s_i) / r_i where
// s_i = sum_j G_ij P_ij and r the row sums of M.
SparseMatrix row_normalize_backward(const SparseMatrix& grad_p, const SparseMatrix& p,
                                    const std::vector<double>& rowsum);

// Entrywise sum sharing one pattern (used to merge gradient contributions).
SparseMatrix pattern_add(const SparseMatrix& a, const SparseMatrix& b);

}  // namespace aegcn
