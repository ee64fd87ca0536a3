#include "aegcn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aegcn/sparse_ops.hpp"

namespace aegcn {
namespace {

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double clamped_log(double x) { return std::log(std::max(x, kLogFloor)); }

// grad *= act'(pre), elementwise. RowSoftmax is fused with its loss and None
// is the identity; neither touches the gradient.
void scale_by_activation_derivative(DenseMatrix& grad, const DenseMatrix& pre, Activation act) {
  switch (act) {
    case Activation::None:
    case Activation::RowSoftmax:
      return;
    case Activation::ReLU:
      for (std::size_t i = 0; i < grad.v.size(); ++i)
        if (pre.v[i] <= 0.0) grad.v[i] = 0.0;
      return;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < grad.v.size(); ++i) {
        const double s = stable_sigmoid(pre.v[i]);
        grad.v[i] *= s * (1.0 - s);
      }
      return;
  }
}

}  // namespace

void relu_inplace(DenseMatrix& m) {
  for (double& x : m.v) x = x > 0.0 ? x : 0.0;
}

void sigmoid_inplace(DenseMatrix& m) {
  for (double& x : m.v) x = stable_sigmoid(x);
}

void row_softmax_inplace(DenseMatrix& m) {
  for (index_t i = 0; i < m.rows; ++i) {
    double* r = m.row(i);
    double mx = r[0];
    for (index_t j = 1; j < m.cols; ++j) mx = std::max(mx, r[j]);
    double sum = 0.0;
    for (index_t j = 0; j < m.cols; ++j) {
      r[j] = std::exp(r[j] - mx);
      sum += r[j];
    }
    const double inv = 1.0 / sum;
    for (index_t j = 0; j < m.cols; ++j) r[j] *= inv;
  }
}

DenseMatrix apply_activation(Activation act, const DenseMatrix& pre) {
  DenseMatrix out = pre;
  switch (act) {
    case Activation::None: break;
    case Activation::ReLU: relu_inplace(out); break;
    case Activation::Sigmoid: sigmoid_inplace(out); break;
    case Activation::RowSoftmax: row_softmax_inplace(out); break;
  }
  return out;
}

void dropout_inplace(DenseMatrix& m, double rate, RandomStream& stream,
                     std::vector<std::uint8_t>& keep_mask) {
  if (rate < 0.0 || rate >= 1.0)
    throw ArgumentError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  keep_mask.assign(m.v.size(), 1);
  if (rate == 0.0) return;
  const double scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < m.v.size(); ++i) {
    if (stream.uniform() < rate) {
      keep_mask[i] = 0;
      m.v[i] = 0.0;
    } else {
      m.v[i] *= scale;
    }
  }
}

void dropout_backward_inplace(DenseMatrix& grad, double rate,
                              const std::vector<std::uint8_t>& keep_mask) {
  if (keep_mask.size() != grad.v.size())
    throw DimensionError("dropout_backward: mask length mismatch");
  if (rate == 0.0) return;
  const double scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < grad.v.size(); ++i)
    grad.v[i] = keep_mask[i] ? grad.v[i] * scale : 0.0;
}

LayerForward gcn_layer_forward(const SparseMatrix& s, const DenseMatrix& h,
                               const DenseMatrix& w, Activation act) {
  LayerForward r;
  r.cache.propagated = spmm(s, h);
  r.cache.pre = matmul(r.cache.propagated, w);
  r.cache.act = act;
  r.out = apply_activation(act, r.cache.pre);
  return r;
}

LayerGrads gcn_layer_backward(const SparseMatrix& s, const LayerCache& cache,
                              const DenseMatrix& w, const DenseMatrix& grad_out,
                              bool need_grad_input) {
  if (!grad_out.same_shape(cache.pre)) throw DimensionError("gcn_layer_backward: gradient shape");
  DenseMatrix dpre = grad_out;
  scale_by_activation_derivative(dpre, cache.pre, cache.act);
  LayerGrads g;
  g.grad_weight = matmul_tn(cache.propagated, dpre);
  if (need_grad_input) {
    const DenseMatrix grad_propagated = matmul_nt(dpre, w);
    g.grad_input = DenseMatrix(s.cols, grad_propagated.cols);
    spmm_transpose_into(s, grad_propagated, g.grad_input, false);
  }
  return g;
}

LayerForward dense_layer_forward(const DenseMatrix& h, const DenseMatrix& w,
                                 const DenseMatrix* bias, Activation act) {
  LayerForward r;
  r.cache.propagated = h;
  r.cache.pre = matmul(h, w);
  if (bias != nullptr) {
    if (bias->rows != 1 || bias->cols != w.cols)
      throw DimensionError("dense_layer_forward: bias must be 1 x out_width");
    for (index_t i = 0; i < r.cache.pre.rows; ++i) {
      double* row = r.cache.pre.row(i);
      for (index_t j = 0; j < r.cache.pre.cols; ++j) row[j] += bias->v[j];
    }
  }
  r.cache.act = act;
  r.out = apply_activation(act, r.cache.pre);
  return r;
}

LayerGrads dense_layer_backward(const LayerCache& cache, const DenseMatrix& w,
                                const DenseMatrix& grad_out, bool need_grad_input,
                                bool has_bias) {
  if (!grad_out.same_shape(cache.pre)) throw DimensionError("dense_layer_backward: gradient shape");
  DenseMatrix dpre = grad_out;
  scale_by_activation_derivative(dpre, cache.pre, cache.act);
  LayerGrads g;
  g.grad_weight = matmul_tn(cache.propagated, dpre);
  if (has_bias) {
    g.grad_bias = DenseMatrix(1, dpre.cols);
    for (index_t i = 0; i < dpre.rows; ++i)
      for (index_t j = 0; j < dpre.cols; ++j) g.grad_bias.v[j] += dpre(i, j);
  }
  if (need_grad_input) g.grad_input = matmul_nt(dpre, w);
  return g;
}

LossResult masked_class_loss(const DenseMatrix& probs, const std::vector<index_t>& labels,
                             const std::vector<index_t>& mask) {
  if (mask.empty()) throw ArgumentError("masked_class_loss: empty mask");
  if (labels.size() != static_cast<std::size_t>(probs.rows))
    throw DimensionError("masked_class_loss: labels length mismatch");
  for (index_t i : mask) {
    if (i < 0 || i >= probs.rows)
      throw ArgumentError("masked_class_loss: mask index " + std::to_string(i) + " out of range");
    const index_t y = labels[i];
    if (y < 0 || y >= probs.cols)
      throw ArgumentError("masked_class_loss: node " + std::to_string(i) + " has label " +
                          std::to_string(y) + " outside [0, " + std::to_string(probs.cols) + ")");
    double row_sum = 0.0;
    for (index_t j = 0; j < probs.cols; ++j) row_sum += probs(i, j);
    if (std::abs(row_sum - 1.0) > 1e-6)
      throw ArgumentError("masked_class_loss: row " + std::to_string(i) +
                          " is not a probability distribution (sum " + std::to_string(row_sum) +
                          ")");
  }
  LossResult r;
  r.grad = DenseMatrix(probs.rows, probs.cols);
  const double inv_m = 1.0 / static_cast<double>(mask.size());
  for (index_t i : mask) {
    r.loss -= clamped_log(probs(i, labels[i]));
    for (index_t j = 0; j < probs.cols; ++j) r.grad(i, j) = probs(i, j) * inv_m;
    r.grad(i, labels[i]) -= inv_m;
  }
  r.loss *= inv_m;
  return r;
}

LossResult recon_loss_adjacency(const SparseMatrix& target, const DenseMatrix& pred,
                                bool full_bce) {
  if (target.rows != pred.rows || target.cols != pred.cols)
    throw DimensionError("recon_loss_adjacency: shape mismatch");
  LossResult r;
  r.grad = DenseMatrix(pred.rows, pred.cols);
  const double scale = 1.0 / (static_cast<double>(pred.rows) * static_cast<double>(pred.cols));
  if (full_bce) {
    const DenseMatrix dense_target = to_dense(target);
    for (std::size_t i = 0; i < pred.v.size(); ++i) {
      const double t = dense_target.v[i];
      const double p = pred.v[i];
      r.loss -= t * clamped_log(p) + (1.0 - t) * clamped_log(1.0 - p);
      r.grad.v[i] = scale * (-t / std::max(p, kLogFloor) +
                             (1.0 - t) / std::max(1.0 - p, kLogFloor));
    }
  } else {
    for (index_t i = 0; i < target.rows; ++i) {
      for (index_t q = target.row_ptr[i]; q < target.row_ptr[i + 1]; ++q) {
        const double t = target.values[q];
        const double p = pred(i, target.col_idx[q]);
        r.loss -= t * clamped_log(p);
        r.grad(i, target.col_idx[q]) = -scale * t / std::max(p, kLogFloor);
      }
    }
  }
  r.loss *= scale;
  return r;
}

LossResult recon_loss_feature(const DenseMatrix& target, const DenseMatrix& pred, bool full_bce) {
  if (!target.same_shape(pred)) throw DimensionError("recon_loss_feature: shape mismatch");
  LossResult r;
  r.grad = DenseMatrix(pred.rows, pred.cols);
  const double scale = 1.0 / (static_cast<double>(pred.rows) * static_cast<double>(pred.cols));
  for (std::size_t i = 0; i < pred.v.size(); ++i) {
    const double t = target.v[i];
    const double p = pred.v[i];
    if (full_bce) {
      r.loss -= t * clamped_log(p) + (1.0 - t) * clamped_log(1.0 - p);
      r.grad.v[i] = scale * (-t / std::max(p, kLogFloor) +
                             (1.0 - t) / std::max(1.0 - p, kLogFloor));
    } else if (t != 0.0) {
      r.loss -= t * clamped_log(p);
      r.grad.v[i] = -scale * t / std::max(p, kLogFloor);
    }
  }
  r.loss *= scale;
  return r;
}

double finite_diff_check(const std::function<double(const DenseMatrix&)>& f,
                         const DenseMatrix& param, const DenseMatrix& analytic,
                         double step) {
  if (!param.same_shape(analytic)) throw DimensionError("finite_diff_check: shape mismatch");
  DenseMatrix probe = param;
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.v.size(); ++i) {
    const double saved = probe.v[i];
    probe.v[i] = saved + step;
    const double up = f(probe);
    probe.v[i] = saved - step;
    const double down = f(probe);
    probe.v[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic.v[i];
    const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace aegcn
