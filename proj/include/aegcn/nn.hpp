#pragma once
// Layer and loss primitives with hand-derived backward passes, plus the
// central-difference gradient checker used to certify them.
//
// Convention: RowSoftmax is treated as fused with the cross-entropy loss, so
// layer backward passes leave a softmax output's gradient untouched and the
// loss functions return gradients at the logit level.
#include <functional>
#include <vector>

#include "aegcn/matrix.hpp"
#include "aegcn/rng.hpp"

namespace aegcn {

enum class Activation { None, ReLU, Sigmoid, RowSoftmax };

// Out-of-place activation application.
DenseMatrix apply_activation(Activation act, const DenseMatrix& pre);
void relu_inplace(DenseMatrix& m);
void sigmoid_inplace(DenseMatrix& m);
// Max-subtracted row softmax; every output row sums to 1.
void row_softmax_inplace(DenseMatrix& m);

// Inverted dropout. Draws one keep decision per entry in row-major order from
// the stream, zeroes dropped entries, and scales kept ones by 1/(1 - rate).
// keep_mask records the decisions for the backward pass.
void dropout_inplace(DenseMatrix& m, double rate, RandomStream& stream,
                     std::vector<std::uint8_t>& keep_mask);
void dropout_backward_inplace(DenseMatrix& grad, double rate,
                              const std::vector<std::uint8_t>& keep_mask);

struct LayerCache {
  DenseMatrix propagated;     // input after propagation: S*H for gcn, H for dense
  DenseMatrix pre;            // pre-activation propagated*W (+ bias)
  Activation act = Activation::None;
};

struct LayerForward {
  DenseMatrix out;
  LayerCache cache;
};

struct LayerGrads {
  DenseMatrix grad_input;
  DenseMatrix grad_weight;
  DenseMatrix grad_bias;  // dense layer with bias only
};

// One graph convolution: out = act(S * H * W).
LayerForward gcn_layer_forward(const SparseMatrix& s, const DenseMatrix& h,
                               const DenseMatrix& w, Activation act);
// grad_out arrives at the output (logit level for RowSoftmax). Set
// need_grad_input = false to skip the input gradient at the first layer.
LayerGrads gcn_layer_backward(const SparseMatrix& s, const LayerCache& cache,
                              const DenseMatrix& w, const DenseMatrix& grad_out,
                              bool need_grad_input);

// Plain dense layer: out = act(H * W + b), bias optional (may be null).
LayerForward dense_layer_forward(const DenseMatrix& h, const DenseMatrix& w,
                                 const DenseMatrix* bias, Activation act);
LayerGrads dense_layer_backward(const LayerCache& cache, const DenseMatrix& w,
                                const DenseMatrix& grad_out, bool need_grad_input,
                                bool has_bias);

struct LossResult {
  double loss = 0.0;
  DenseMatrix grad;  // gradient at the logit level (class) or prediction level (recon)
};

// Mean cross-entropy over the masked rows of a row-stochastic prediction.
// labels[i] must be a valid class for every masked i. The gradient is at the
// logit level: (probs - onehot)/|mask| on masked rows, zero elsewhere.
LossResult masked_class_loss(const DenseMatrix& probs, const std::vector<index_t>& labels,
                             const std::vector<index_t>& mask);

// Reconstruction losses, averaged over every matrix cell. One-sided form
// -(1/N) sum target_ij * log pred_ij by default; full_bce adds the complement
// term at zero-target cells. Gradients are with respect to pred.
LossResult recon_loss_adjacency(const SparseMatrix& target, const DenseMatrix& pred,
                                bool full_bce = false);
LossResult recon_loss_feature(const DenseMatrix& target, const DenseMatrix& pred,
                              bool full_bce = false);

// Max over entries of |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
// with central differences of f at param. Mutates a copy, not param.
double finite_diff_check(const std::function<double(const DenseMatrix&)>& f,
                         const DenseMatrix& param, const DenseMatrix& analytic,
                         double step = 1e-5);

// Floor used inside log() so losses and gradients stay finite.
inline constexpr double kLogFloor = 1e-12;

}  // namespace aegcn
