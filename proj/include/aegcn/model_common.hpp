#pragma once
// Pieces shared by the homogeneous and heterogeneous models: the
// reconstruction-variant tag and the row-blocked decoder evaluator.
#include <string>
#include <string_view>

#include "aegcn/matrix.hpp"

namespace aegcn {

// What the autoencoder reconstructs.
//   FeatureTarget   the input feature matrix (n x d)
//   HybridAdjacency the row-normalized learned hybrid adjacency (n x n)
//   SummedAdjacency row-normalized summed adjacency with self loops (n x n)
//   SplitAdjacency  one row-normalized per-type adjacency with self loops each
enum class VariantKind { FeatureTarget, HybridAdjacency, SummedAdjacency, SplitAdjacency };

VariantKind variant_from_string(std::string_view s);
std::string variant_to_string(VariantKind v);

// One reconstruction target: exactly one of the two pointers is set. The loss
// scale is 1/(rows*cols) of the target.
struct ReconSpec {
  const SparseMatrix* sparse = nullptr;
  const DenseMatrix* dense = nullptr;
};

// Row-blocked evaluation of pred = sigmoid(V * W) against a target, without
// materializing the full prediction. Returns the loss (not scaled by gamma).
//
// When gradient sinks are non-null and gamma != 0, accumulates
//   grad_w += gamma * dL/dW,   grad_v += gamma * dL/dV,
// with the sigmoid fused into the cross-entropy so gradients stay finite.
// For a sparse target, sampled_neglog (same pattern as the target) receives
// gamma * scale * (-log pred) per structural cell: the loss derivative with
// respect to the target values, needed when the target itself is learned.
// Processing the rows in blocks is algebraically exact: block and monolithic
// evaluation agree to rounding.
double decoder_pass(const DenseMatrix& v, const DenseMatrix& w, const ReconSpec& target,
                    bool full_bce, double gamma, index_t block_rows,
                    DenseMatrix* grad_w, DenseMatrix* grad_v, SparseMatrix* sampled_neglog);

}  // namespace aegcn
