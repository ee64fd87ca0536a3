#pragma once
// Heterogeneous model. Typed adjacencies are mixed into per-channel learned
// adjacencies by softmax channel weights, aggregated into one hybrid operator,
// and a feature- or adjacency-reconstructing decoder constrains the first
// hidden layer. No dropout anywhere in this model.
//
// Forward (channel i of C, K edge types, in-degree normalization):
//   Q1 = sum_k softmax(cw1_i)_k A_k        Q2 likewise with cw2_i
//   A^i = Q1 Q2,  At^i = A^i + I,  P^i = rownorm(At^i)
//   At_H = sum_i At^i,               P_H = rownorm(At_H)
//   H0 = ||_i ReLU(P^i X Waggre)     (Waggre shared; block width d0/C)
//   H1 = ReLU(P_H H0 W0)
//   H2 = rowsoftmax(H1 W1 + b)       (plain dense head, no graph conv)
//   decoder input U = P_H H0; pred = sigmoid(U Wa) against the variant target
//   (two-layer: sigmoid(P_H ReLU(U Wa1) Wa2))
//   loss = class + gamma * recon
//
// Backward is exact for the total loss, including through the softmax channel
// weights, the sparse products Q1 Q2, the row normalizations, and, for the
// hybrid-adjacency variant, the dependence of the reconstruction target
// itself on the channel weights.
#include <vector>

#include "aegcn/data.hpp"
#include "aegcn/model_common.hpp"
#include "aegcn/optim.hpp"

namespace aegcn {

struct HeteroParams {
  std::vector<DenseMatrix> channel_w1;  // C entries, each 1 x K (raw, pre-softmax)
  std::vector<DenseMatrix> channel_w2;
  DenseMatrix waggre;  // d x (d0 / C)
  DenseMatrix w0;      // d0 x d1
  DenseMatrix w1;      // d1 x f
  DenseMatrix b;       // 1 x f, zero-initialized, excluded from weight decay
  std::vector<DenseMatrix> wa;  // decoder stack, see decoder_stack_shapes
};

struct HeteroGrads {
  std::vector<DenseMatrix> channel_w1, channel_w2;
  DenseMatrix waggre, w0, w1, b;
  std::vector<DenseMatrix> wa;
};

// Decoder stack shapes for a variant and depth. Depth 1 maps d0 straight to
// the target width (n, or d for the feature target; one matrix per edge type
// for the split variant). Depth 2 inserts a shared graph-conv layer of width
// d1 first.
std::vector<std::pair<index_t, index_t>> decoder_stack_shapes(VariantKind v, int decoder_layers,
                                                              index_t n, index_t d, index_t d0,
                                                              index_t d1, index_t k);

// Draw order: cw1_1, cw2_1, ..., cw1_C, cw2_C, waggre, w0, w1, then the
// decoder stack; b is zeros and consumes no draws. d0 must be divisible by
// the channel count.
HeteroParams init_hetero_params(const HeteroGraph& g, index_t d0, index_t d1, int channels,
                                VariantKind v, int decoder_layers, RandomStream& stream);

std::vector<ParamSlot> hetero_param_slots(HeteroParams& p, const HeteroGrads& g);

struct HeteroOptions {
  VariantKind variant = VariantKind::FeatureTarget;
  double gamma = 1.0;
  int decoder_layers = 1;
  bool full_bce = false;
  index_t recon_block = 256;
  bool training = false;
};

// Weight-independent precomputation: the K^2 pairwise products A_k A_l that
// carry channel-weight gradients, and the constant reconstruction targets.
struct PreparedHetero {
  const HeteroGraph* graph = nullptr;
  std::vector<SparseMatrix> pair_products;  // row-major K x K
  std::vector<SparseMatrix> fixed_targets;  // summed: 1 target, split: K, else empty
};
PreparedHetero prepare_hetero(const HeteroGraph& g, VariantKind v);

struct HeteroChannelTape {
  std::vector<double> w1hat, w2hat;  // softmaxed mixing weights
  SparseMatrix p;                    // rownorm(At^i)
  std::vector<double> rowsum;        // row sums of At^i
  DenseMatrix z;                     // pre-ReLU P^i X Waggre
};

struct HeteroForwardResult {
  DenseMatrix h1;
  DenseMatrix h2;
  double class_loss = 0.0;
  double recon_loss = 0.0;
  double total_loss = 0.0;

  // Training tape; decoder gradients are finalized during the forward sweep.
  std::vector<HeteroChannelTape> channels;
  SparseMatrix ph;
  std::vector<double> ph_rowsum;
  DenseMatrix f_agg;  // X Waggre
  DenseMatrix h0, u, z1;
  DenseMatrix dlogits;
  std::vector<DenseMatrix> dec_grad_wa;
  DenseMatrix dec_grad_u;
  SparseMatrix dec_grad_ph;  // extra dL/dP_H terms (moving target, depth-2); empty if none
};

HeteroForwardResult hetero_forward(const PreparedHetero& prep, const HeteroParams& p,
                                   const HeteroOptions& opt);

// Requires a result produced with training = true.
HeteroGrads hetero_backward(const PreparedHetero& prep, const HeteroParams& p,
                            const HeteroOptions& opt, const HeteroForwardResult& fr);

// Classifier-only inference: transform, aggregate, dense head; no decoder.
DenseMatrix hetero_predict(const PreparedHetero& prep, const HeteroParams& p);

// Spec-surface building blocks, also used by the model internals.
struct HeteroTransformResult {
  std::vector<SparseMatrix> channel_adj;  // At^i = Q1 Q2 + I per channel
  SparseMatrix hybrid;                    // At_H = sum_i At^i
};
HeteroTransformResult hetero_transform(const std::vector<SparseMatrix>& adjs,
                                       const std::vector<DenseMatrix>& channel_w1,
                                       const std::vector<DenseMatrix>& channel_w2);

// H0 = ||_i ReLU(rownorm(channel_adj[i]) X Waggre).
DenseMatrix hetero_aggregate(const std::vector<SparseMatrix>& channel_adj, const DenseMatrix& x,
                             const DenseMatrix& waggre);

// Materialized reconstruction targets for a variant. The feature target
// aliases g.features; hybrid derives from the given At_H.
struct ReconTargets {
  std::vector<SparseMatrix> sparse;
  const DenseMatrix* dense = nullptr;
};
ReconTargets recon_target(const HeteroGraph& g, VariantKind v, const SparseMatrix& hybrid);

}  // namespace aegcn
