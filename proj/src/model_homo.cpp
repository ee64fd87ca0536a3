#include "aegcn/model_homo.hpp"

#include <string>

#include "aegcn/nn.hpp"
#include "aegcn/sparse_ops.hpp"

namespace aegcn {
namespace {

void check_params(const HomoGraph& g, const HomoParams& p, int decoder_layers) {
  if (p.w0.rows != g.d || p.w0.cols <= 0)
    throw DimensionError("homo: W0 must be d x d1");
  const index_t d1 = p.w0.cols;
  if (p.w1.rows != d1 || p.w1.cols != g.f)
    throw DimensionError("homo: W1 must be d1 x f");
  if (decoder_layers == 1) {
    if (p.wa.size() != 1 || p.wa[0].rows != d1 || p.wa[0].cols != g.n)
      throw DimensionError("homo: one-layer decoder needs Wa of shape d1 x n");
  } else if (decoder_layers == 2) {
    if (p.wa.size() != 2 || p.wa[0].rows != d1 || p.wa[1].rows != p.wa[0].cols ||
        p.wa[1].cols != g.n)
      throw DimensionError("homo: two-layer decoder needs Wa1 d1 x da and Wa2 da x n");
  } else {
    throw ArgumentError("homo: decoder_layers must be 1 or 2, got " +
                        std::to_string(decoder_layers));
  }
}

void relu_backward_inplace(DenseMatrix& grad, const DenseMatrix& pre) {
  for (std::size_t i = 0; i < grad.v.size(); ++i)
    if (pre.v[i] <= 0.0) grad.v[i] = 0.0;
}

}  // namespace

SparseMatrix homo_operator(const HomoGraph& g) {
  return sym_normalize(add_self_loops(g.adjacency));
}

HomoParams init_homo_params(index_t d, index_t d1, index_t f, index_t n, int decoder_layers,
                            RandomStream& stream) {
  HomoParams p;
  p.w0 = glorot_init(d, d1, stream);
  p.w1 = glorot_init(d1, f, stream);
  if (decoder_layers == 1) {
    p.wa.push_back(glorot_init(d1, n, stream));
  } else if (decoder_layers == 2) {
    p.wa.push_back(glorot_init(d1, d1, stream));
    p.wa.push_back(glorot_init(d1, n, stream));
  } else {
    throw ArgumentError("homo: decoder_layers must be 1 or 2");
  }
  return p;
}

std::vector<ParamSlot> homo_param_slots(HomoParams& p, const HomoGrads& g) {
  std::vector<ParamSlot> slots;
  slots.push_back({"w0", &p.w0, &g.w0, true});
  slots.push_back({"w1", &p.w1, &g.w1, true});
  for (std::size_t i = 0; i < p.wa.size(); ++i)
    slots.push_back({"wa" + std::to_string(i + 1), &p.wa[i], &g.wa[i], true});
  return slots;
}

HomoForwardResult homo_forward(const HomoGraph& g, const SparseMatrix& s, const HomoParams& p,
                               const HomoOptions& opt, RandomStream* stream) {
  check_params(g, p, opt.decoder_layers);
  if (s.rows != g.n || s.cols != g.n) throw DimensionError("homo: operator must be n x n");
  const bool use_dropout = opt.training && opt.dropout > 0.0;
  if (use_dropout && stream == nullptr)
    throw ArgumentError("homo: training with dropout needs a random stream");

  HomoForwardResult fr;

  // Encoder. The stream is consumed in a fixed order: X mask, then H1 mask.
  if (use_dropout) {
    DenseMatrix xd = g.features;
    dropout_inplace(xd, opt.dropout, *stream, fr.mask_x);
    fr.t1 = spmm(s, xd);
  } else {
    fr.t1 = spmm(s, g.features);
  }
  fr.z1 = matmul(fr.t1, p.w0);
  fr.h1 = apply_activation(Activation::ReLU, fr.z1);
  DenseMatrix h1d = fr.h1;
  if (use_dropout) dropout_inplace(h1d, opt.dropout, *stream, fr.mask_h);
  fr.u = spmm(s, h1d);

  // Classifier head.
  DenseMatrix logits = matmul(fr.u, p.w1);
  row_softmax_inplace(logits);
  fr.h2 = std::move(logits);
  {
    LossResult cls = masked_class_loss(fr.h2, g.labels, g.train_mask);
    fr.class_loss = cls.loss;
    if (opt.training) fr.dlogits = std::move(cls.grad);
  }

  // Decoder branch against the propagation operator itself.
  const ReconSpec target{&s, nullptr};
  const bool want_grads = opt.training && opt.gamma != 0.0;
  if (want_grads) {
    fr.dec_grad_wa.clear();
    for (const DenseMatrix& wa : p.wa) fr.dec_grad_wa.emplace_back(wa.rows, wa.cols);
  }
  if (opt.decoder_layers == 1) {
    if (want_grads) fr.dec_grad_u = DenseMatrix(fr.u.rows, fr.u.cols);
    fr.recon_loss = decoder_pass(fr.u, p.wa[0], target, opt.full_bce, opt.gamma, opt.recon_block,
                                 want_grads ? &fr.dec_grad_wa[0] : nullptr,
                                 want_grads ? &fr.dec_grad_u : nullptr, nullptr);
  } else {
    DenseMatrix zd1 = matmul(fr.u, p.wa[0]);
    DenseMatrix d1 = apply_activation(Activation::ReLU, zd1);
    DenseMatrix td = spmm(s, d1);
    DenseMatrix grad_td;
    if (want_grads) grad_td = DenseMatrix(td.rows, td.cols);
    fr.recon_loss = decoder_pass(td, p.wa[1], target, opt.full_bce, opt.gamma, opt.recon_block,
                                 want_grads ? &fr.dec_grad_wa[1] : nullptr,
                                 want_grads ? &grad_td : nullptr, nullptr);
    if (want_grads) {
      DenseMatrix grad_d1(d1.rows, d1.cols);
      spmm_transpose_into(s, grad_td, grad_d1, false);
      relu_backward_inplace(grad_d1, zd1);
      matmul_tn_acc(fr.dec_grad_wa[0], fr.u, grad_d1);
      fr.dec_grad_u = matmul_nt(grad_d1, p.wa[0]);
    }
  }
  fr.total_loss = fr.class_loss + opt.gamma * fr.recon_loss;

  if (!opt.training) {
    fr.t1 = DenseMatrix();
    fr.z1 = DenseMatrix();
    fr.u = DenseMatrix();
  }
  return fr;
}

HomoGrads homo_backward(const SparseMatrix& s, const HomoParams& p, const HomoOptions& opt,
                        const HomoForwardResult& fr) {
  if (fr.dlogits.rows == 0)
    throw ArgumentError("homo_backward: result was not produced with training = true");
  HomoGrads g;

  // Classifier head, then merge the decoder's share of the U gradient.
  g.w1 = matmul_tn(fr.u, fr.dlogits);
  DenseMatrix grad_u = matmul_nt(fr.dlogits, p.w1);
  const bool has_dec = opt.gamma != 0.0;
  if (has_dec) {
    for (std::size_t i = 0; i < grad_u.v.size(); ++i) grad_u.v[i] += fr.dec_grad_u.v[i];
    g.wa = fr.dec_grad_wa;
  } else {
    for (const DenseMatrix& wa : p.wa) g.wa.emplace_back(wa.rows, wa.cols);
  }

  // Through U = S H1', the shared dropout, and the first layer.
  DenseMatrix grad_h1d(grad_u.rows, grad_u.cols);
  spmm_transpose_into(s, grad_u, grad_h1d, false);
  if (!fr.mask_h.empty()) dropout_backward_inplace(grad_h1d, opt.dropout, fr.mask_h);
  relu_backward_inplace(grad_h1d, fr.z1);
  g.w0 = matmul_tn(fr.t1, grad_h1d);
  return g;
}

DenseMatrix homo_predict(const HomoGraph& g, const SparseMatrix& s, const HomoParams& p) {
  DenseMatrix h1 = spmm(s, g.features);
  h1 = matmul(h1, p.w0);
  relu_inplace(h1);
  DenseMatrix logits = matmul(spmm(s, h1), p.w1);
  row_softmax_inplace(logits);
  return logits;
}

}  // namespace aegcn
