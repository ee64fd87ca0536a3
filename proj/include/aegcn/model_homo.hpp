#pragma once
// Homogeneous model: a two-layer graph convolutional classifier whose hidden
// layer is constrained by a graph-convolutional decoder reconstructing the
// normalized adjacency. Forward and backward passes are hand-derived; with
// gamma = 0 the model degenerates bitwise to the plain two-layer classifier.
//
// Forward (training):
//   X' = dropout(X)            H1 = ReLU(S X' W0)      (S symmetric-normalized)
//   H1' = dropout(H1)          U = S H1'
//   H2 = rowsoftmax(U W1)
//   one-layer decoder:  pred = sigmoid(U Wa),            target S
//   two-layer decoder:  pred = sigmoid(S ReLU(U Wa1) Wa2)
//   loss = class(H2) + gamma * recon(pred)
// The dropped H1 is shared by the classifier and decoder branches (one draw),
// and the stream is consumed in that fixed order: X mask then H1 mask.
#include <optional>
#include <vector>

#include "aegcn/data.hpp"
#include "aegcn/model_common.hpp"
#include "aegcn/optim.hpp"

namespace aegcn {

struct HomoParams {
  DenseMatrix w0;                // d x d1
  DenseMatrix w1;                // d1 x f
  std::vector<DenseMatrix> wa;   // one-layer {d1 x n}; two-layer {d1 x d1, d1 x n}
};

// Draw order: W0, W1, then the decoder stack. The two-layer hidden width
// equals d1.
HomoParams init_homo_params(index_t d, index_t d1, index_t f, index_t n, int decoder_layers,
                            RandomStream& stream);

std::vector<ParamSlot> homo_param_slots(HomoParams& p, const struct HomoGrads& g);

struct HomoGrads {
  DenseMatrix w0, w1;
  std::vector<DenseMatrix> wa;
};

struct HomoOptions {
  double gamma = 10.0;
  double dropout = 0.5;
  int decoder_layers = 1;
  bool full_bce = false;       // reconstruct with both target terms
  index_t recon_block = 256;   // decoder row-block size
  bool training = false;
};

struct HomoForwardResult {
  DenseMatrix h1;  // post-ReLU hidden layer, before dropout
  DenseMatrix h2;  // row-stochastic class predictions
  double class_loss = 0.0;
  double recon_loss = 0.0;
  double total_loss = 0.0;  // class + gamma * recon

  // Training tape. Decoder gradients are finalized during the forward pass,
  // inside the same row-blocked sweep that evaluates the loss.
  DenseMatrix t1, z1, u;
  std::vector<std::uint8_t> mask_x, mask_h;
  DenseMatrix dlogits;
  std::vector<DenseMatrix> dec_grad_wa;
  DenseMatrix dec_grad_u;
};

// S must be the symmetric-normalized adjacency with self loops of g. The
// stream is only consumed when training with dropout > 0.
HomoForwardResult homo_forward(const HomoGraph& g, const SparseMatrix& s, const HomoParams& p,
                               const HomoOptions& opt, RandomStream* stream);

// Requires a result produced with training = true.
HomoGrads homo_backward(const SparseMatrix& s, const HomoParams& p, const HomoOptions& opt,
                        const HomoForwardResult& fr);

// Classifier-only inference: no dropout, no decoder. Matches the training
// graph path exactly at dropout = 0.
DenseMatrix homo_predict(const HomoGraph& g, const SparseMatrix& s, const HomoParams& p);

// Symmetric-normalized adjacency with self loops; computed once per dataset.
SparseMatrix homo_operator(const HomoGraph& g);

}  // namespace aegcn
