#include "aegcn/model_hetero.hpp"

#include <cmath>
#include <utility>

#include "aegcn/errors.hpp"
#include "aegcn/nn.hpp"
#include "aegcn/sparse_ops.hpp"

namespace aegcn {
namespace {

std::vector<double> softmax_row(const DenseMatrix& raw) {
  DenseMatrix m = raw;
  row_softmax_inplace(m);
  return m.v;
}

DenseMatrix relu_of(const DenseMatrix& m) {
  DenseMatrix out = m;
  relu_inplace(out);
  return out;
}

void relu_backward_inplace(DenseMatrix& grad, const DenseMatrix& pre) {
  for (std::size_t i = 0; i < grad.v.size(); ++i) {
    if (pre.v[i] <= 0.0) grad.v[i] = 0.0;
  }
}

bool same_pattern(const SparseMatrix& a, const SparseMatrix& b) {
  return a.rows == b.rows && a.cols == b.cols && a.row_ptr == b.row_ptr && a.col_idx == b.col_idx;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ArgumentError(what);
}

// Shared shape validation for forward, backward, and predict.
struct Dims {
  index_t n, d, f, k, c, dc, d0, d1;
};

Dims check_hetero(const HeteroGraph& g, const HeteroParams& p, VariantKind variant,
                  int decoder_layers) {
  require(!g.adjacencies.empty(), "heterogeneous graph needs at least one edge type");
  const index_t k = static_cast<index_t>(g.adjacencies.size());
  for (const SparseMatrix& a : g.adjacencies) {
    require(a.rows == g.n && a.cols == g.n, "typed adjacency shape mismatch");
  }
  require(!p.channel_w1.empty() && p.channel_w1.size() == p.channel_w2.size(),
          "channel weight lists must be non-empty and equally sized");
  const index_t c = static_cast<index_t>(p.channel_w1.size());
  for (index_t i = 0; i < c; ++i) {
    require(p.channel_w1[i].rows == 1 && p.channel_w1[i].cols == k &&
                p.channel_w2[i].rows == 1 && p.channel_w2[i].cols == k,
            "channel weight vectors must be 1 x edge-type-count");
  }
  require(p.waggre.rows == g.d && p.waggre.cols >= 1, "waggre must map feature width");
  const index_t dc = p.waggre.cols;
  const index_t d0 = dc * c;
  require(p.w0.rows == d0 && p.w0.cols >= 1, "w0 must map the concatenated width");
  const index_t d1 = p.w0.cols;
  require(g.f >= 1, "graph carries no classes");
  require(p.w1.rows == d1 && p.w1.cols == g.f, "w1 shape mismatch");
  require(p.b.rows == 1 && p.b.cols == g.f, "bias shape mismatch");
  require(decoder_layers == 1 || decoder_layers == 2, "decoder depth must be 1 or 2");
  const auto shapes = decoder_stack_shapes(variant, decoder_layers, g.n, g.d, d0, d1, k);
  require(p.wa.size() == shapes.size(), "decoder stack has wrong depth for this variant");
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    require(p.wa[i].rows == shapes[i].first && p.wa[i].cols == shapes[i].second,
            "decoder weight shape mismatch");
  }
  return Dims{g.n, g.d, g.f, k, c, dc, d0, d1};
}

void add_row_broadcast(DenseMatrix& m, const DenseMatrix& b) {
  for (index_t r = 0; r < m.rows; ++r) {
    double* row = m.row(r);
    for (index_t c = 0; c < m.cols; ++c) row[c] += b.v[static_cast<std::size_t>(c)];
  }
}

DenseMatrix column_sums(const DenseMatrix& m) {
  DenseMatrix out(1, m.cols);
  for (index_t r = 0; r < m.rows; ++r) {
    const double* row = m.row(r);
    for (index_t c = 0; c < m.cols; ++c) out.v[static_cast<std::size_t>(c)] += row[c];
  }
  return out;
}

}  // namespace

std::vector<std::pair<index_t, index_t>> decoder_stack_shapes(VariantKind v, int decoder_layers,
                                                              index_t n, index_t d, index_t d0,
                                                              index_t d1, index_t k) {
  require(decoder_layers == 1 || decoder_layers == 2, "decoder depth must be 1 or 2");
  const index_t target_cols = (v == VariantKind::FeatureTarget) ? d : n;
  const index_t heads = (v == VariantKind::SplitAdjacency) ? k : 1;
  std::vector<std::pair<index_t, index_t>> shapes;
  index_t in = d0;
  if (decoder_layers == 2) {
    shapes.emplace_back(d0, d1);
    in = d1;
  }
  for (index_t h = 0; h < heads; ++h) shapes.emplace_back(in, target_cols);
  return shapes;
}

HeteroParams init_hetero_params(const HeteroGraph& g, index_t d0, index_t d1, int channels,
                                VariantKind v, int decoder_layers, RandomStream& stream) {
  require(d0 >= 1 && d1 >= 1 && channels >= 1, "hidden widths and channel count must be positive");
  require(d0 % channels == 0, "concatenated width must be divisible by the channel count");
  require(!g.adjacencies.empty(), "heterogeneous graph needs at least one edge type");
  require(g.f >= 1, "graph carries no classes");
  const index_t k = static_cast<index_t>(g.adjacencies.size());
  const index_t dc = d0 / channels;
  HeteroParams p;
  for (int i = 0; i < channels; ++i) {
    p.channel_w1.push_back(glorot_init(1, k, stream));
    p.channel_w2.push_back(glorot_init(1, k, stream));
  }
  p.waggre = glorot_init(g.d, dc, stream);
  p.w0 = glorot_init(d0, d1, stream);
  p.w1 = glorot_init(d1, g.f, stream);
  p.b = DenseMatrix(1, g.f);
  for (const auto& [rows, cols] : decoder_stack_shapes(v, decoder_layers, g.n, g.d, d0, d1, k)) {
    p.wa.push_back(glorot_init(rows, cols, stream));
  }
  return p;
}

std::vector<ParamSlot> hetero_param_slots(HeteroParams& p, const HeteroGrads& g) {
  require(p.channel_w1.size() == g.channel_w1.size() && p.channel_w2.size() == g.channel_w2.size() &&
              p.wa.size() == g.wa.size(),
          "parameter and gradient containers disagree");
  std::vector<ParamSlot> slots;
  for (std::size_t i = 0; i < p.channel_w1.size(); ++i) {
    const std::string tag = std::to_string(i + 1);
    slots.push_back({"cw1_" + tag, &p.channel_w1[i], &g.channel_w1[i], true});
    slots.push_back({"cw2_" + tag, &p.channel_w2[i], &g.channel_w2[i], true});
  }
  slots.push_back({"waggre", &p.waggre, &g.waggre, true});
  slots.push_back({"w0", &p.w0, &g.w0, true});
  slots.push_back({"w1", &p.w1, &g.w1, true});
  slots.push_back({"b", &p.b, &g.b, false});
  for (std::size_t i = 0; i < p.wa.size(); ++i) {
    slots.push_back({"wa" + std::to_string(i + 1), &p.wa[i], &g.wa[i], true});
  }
  return slots;
}

PreparedHetero prepare_hetero(const HeteroGraph& g, VariantKind v) {
  require(!g.adjacencies.empty(), "heterogeneous graph needs at least one edge type");
  const index_t k = static_cast<index_t>(g.adjacencies.size());
  PreparedHetero prep;
  prep.graph = &g;
  prep.pair_products.reserve(static_cast<std::size_t>(k * k));
  for (index_t a = 0; a < k; ++a) {
    for (index_t b = 0; b < k; ++b) {
      prep.pair_products.push_back(sp_sp_matmul(g.adjacencies[a], g.adjacencies[b]));
    }
  }
  if (v == VariantKind::SummedAdjacency) {
    std::vector<double> ones(static_cast<std::size_t>(k), 1.0);
    prep.fixed_targets.push_back(row_normalize(add_self_loops(weighted_sum(g.adjacencies, ones))));
  } else if (v == VariantKind::SplitAdjacency) {
    for (const SparseMatrix& a : g.adjacencies) {
      prep.fixed_targets.push_back(row_normalize(add_self_loops(a)));
    }
  }
  return prep;
}

HeteroTransformResult hetero_transform(const std::vector<SparseMatrix>& adjs,
                                       const std::vector<DenseMatrix>& channel_w1,
                                       const std::vector<DenseMatrix>& channel_w2) {
  require(!adjs.empty(), "no typed adjacencies");
  require(!channel_w1.empty() && channel_w1.size() == channel_w2.size(),
          "channel weight lists must be non-empty and equally sized");
  HeteroTransformResult out;
  for (std::size_t i = 0; i < channel_w1.size(); ++i) {
    const SparseMatrix q1 = weighted_sum(adjs, softmax_row(channel_w1[i]));
    const SparseMatrix q2 = weighted_sum(adjs, softmax_row(channel_w2[i]));
    out.channel_adj.push_back(add_self_loops(sp_sp_matmul(q1, q2)));
  }
  std::vector<double> ones(channel_w1.size(), 1.0);
  out.hybrid = weighted_sum(out.channel_adj, ones);
  return out;
}

DenseMatrix hetero_aggregate(const std::vector<SparseMatrix>& channel_adj, const DenseMatrix& x,
                             const DenseMatrix& waggre) {
  require(!channel_adj.empty(), "no channel operators");
  require(x.cols == waggre.rows, "feature width does not match waggre");
  const index_t c = static_cast<index_t>(channel_adj.size());
  const index_t dc = waggre.cols;
  const DenseMatrix f = matmul(x, waggre);
  DenseMatrix h0(x.rows, c * dc);
  for (index_t i = 0; i < c; ++i) {
    const DenseMatrix z = spmm(row_normalize(channel_adj[static_cast<std::size_t>(i)]), f);
    for (index_t r = 0; r < z.rows; ++r) {
      const double* src = z.row(r);
      double* dst = h0.row(r) + i * dc;
      for (index_t j = 0; j < dc; ++j) dst[j] = src[j] > 0.0 ? src[j] : 0.0;
    }
  }
  return h0;
}

ReconTargets recon_target(const HeteroGraph& g, VariantKind v, const SparseMatrix& hybrid) {
  ReconTargets t;
  switch (v) {
    case VariantKind::FeatureTarget:
      t.dense = &g.features;
      break;
    case VariantKind::HybridAdjacency:
      t.sparse.push_back(row_normalize(hybrid));
      break;
    case VariantKind::SummedAdjacency: {
      std::vector<double> ones(g.adjacencies.size(), 1.0);
      t.sparse.push_back(row_normalize(add_self_loops(weighted_sum(g.adjacencies, ones))));
      break;
    }
    case VariantKind::SplitAdjacency:
      for (const SparseMatrix& a : g.adjacencies) {
        t.sparse.push_back(row_normalize(add_self_loops(a)));
      }
      break;
  }
  return t;
}

HeteroForwardResult hetero_forward(const PreparedHetero& prep, const HeteroParams& p,
                                   const HeteroOptions& opt) {
  require(prep.graph != nullptr, "prepared state has no graph");
  const HeteroGraph& g = *prep.graph;
  const Dims dm = check_hetero(g, p, opt.variant, opt.decoder_layers);
  require(prep.pair_products.size() == static_cast<std::size_t>(dm.k * dm.k),
          "prepared state does not match the graph's edge types");
  require(opt.recon_block >= 1, "reconstruction block size must be positive");

  HeteroForwardResult fr;

  // Per-channel operators; the raw At matrices are only needed to form At_H.
  std::vector<SparseMatrix> at(static_cast<std::size_t>(dm.c));
  fr.channels.resize(static_cast<std::size_t>(dm.c));
  for (index_t i = 0; i < dm.c; ++i) {
    HeteroChannelTape& tape = fr.channels[static_cast<std::size_t>(i)];
    tape.w1hat = softmax_row(p.channel_w1[static_cast<std::size_t>(i)]);
    tape.w2hat = softmax_row(p.channel_w2[static_cast<std::size_t>(i)]);
    const SparseMatrix q1 = weighted_sum(g.adjacencies, tape.w1hat);
    const SparseMatrix q2 = weighted_sum(g.adjacencies, tape.w2hat);
    at[static_cast<std::size_t>(i)] = add_self_loops(sp_sp_matmul(q1, q2));
    tape.rowsum = row_sums(at[static_cast<std::size_t>(i)]);
    tape.p = row_normalize(at[static_cast<std::size_t>(i)]);
    if (i > 0 && !same_pattern(at[static_cast<std::size_t>(i)], at[0])) {
      throw Error("internal invariant violated: channel operator patterns diverged");
    }
  }
  std::vector<double> ones(static_cast<std::size_t>(dm.c), 1.0);
  const SparseMatrix at_h = weighted_sum(at, ones);
  at.clear();
  fr.ph_rowsum = row_sums(at_h);
  fr.ph = row_normalize(at_h);

  // Aggregation into the concatenated hidden layer.
  fr.f_agg = matmul(g.features, p.waggre);
  fr.h0 = DenseMatrix(dm.n, dm.d0);
  for (index_t i = 0; i < dm.c; ++i) {
    HeteroChannelTape& tape = fr.channels[static_cast<std::size_t>(i)];
    tape.z = spmm(tape.p, fr.f_agg);
    for (index_t r = 0; r < dm.n; ++r) {
      const double* src = tape.z.row(r);
      double* dst = fr.h0.row(r) + i * dm.dc;
      for (index_t j = 0; j < dm.dc; ++j) dst[j] = src[j] > 0.0 ? src[j] : 0.0;
    }
  }

  // Encoder and dense classifier head.
  fr.u = spmm(fr.ph, fr.h0);
  fr.z1 = matmul(fr.u, p.w0);
  fr.h1 = relu_of(fr.z1);
  DenseMatrix logits = matmul(fr.h1, p.w1);
  add_row_broadcast(logits, p.b);
  fr.h2 = logits;
  row_softmax_inplace(fr.h2);

  LossResult cls = masked_class_loss(fr.h2, g.labels, g.train_mask);
  fr.class_loss = cls.loss;
  if (opt.training) fr.dlogits = std::move(cls.grad);

  // Decoder. Gradients are finalized here so backward never repeats the
  // blocked sweep; sinks stay empty in eval mode or at gamma = 0.
  const bool want_grads = opt.training && opt.gamma != 0.0;
  const bool two_layer = opt.decoder_layers == 2;
  DenseMatrix zd1, d1m, td;
  const DenseMatrix* dec_in = &fr.u;
  if (two_layer) {
    zd1 = matmul(fr.u, p.wa[0]);
    d1m = relu_of(zd1);
    td = spmm(fr.ph, d1m);
    dec_in = &td;
  }
  DenseMatrix grad_v;
  if (want_grads) {
    fr.dec_grad_wa.assign(p.wa.size(), DenseMatrix());
    for (std::size_t i = 0; i < p.wa.size(); ++i) {
      fr.dec_grad_wa[i] = DenseMatrix(p.wa[i].rows, p.wa[i].cols);
    }
    grad_v = DenseMatrix(dec_in->rows, dec_in->cols);
  }
  const std::size_t head0 = two_layer ? 1 : 0;
  SparseMatrix moving_neglog;
  fr.recon_loss = 0.0;
  switch (opt.variant) {
    case VariantKind::FeatureTarget: {
      ReconSpec spec{nullptr, &g.features};
      fr.recon_loss = decoder_pass(*dec_in, p.wa[head0], spec, opt.full_bce, opt.gamma,
                                   opt.recon_block, want_grads ? &fr.dec_grad_wa[head0] : nullptr,
                                   want_grads ? &grad_v : nullptr, nullptr);
      break;
    }
    case VariantKind::HybridAdjacency: {
      ReconSpec spec{&fr.ph, nullptr};
      fr.recon_loss = decoder_pass(*dec_in, p.wa[head0], spec, opt.full_bce, opt.gamma,
                                   opt.recon_block, want_grads ? &fr.dec_grad_wa[head0] : nullptr,
                                   want_grads ? &grad_v : nullptr,
                                   want_grads ? &moving_neglog : nullptr);
      break;
    }
    case VariantKind::SummedAdjacency: {
      ReconSpec spec{&prep.fixed_targets[0], nullptr};
      fr.recon_loss = decoder_pass(*dec_in, p.wa[head0], spec, opt.full_bce, opt.gamma,
                                   opt.recon_block, want_grads ? &fr.dec_grad_wa[head0] : nullptr,
                                   want_grads ? &grad_v : nullptr, nullptr);
      break;
    }
    case VariantKind::SplitAdjacency: {
      require(prep.fixed_targets.size() == static_cast<std::size_t>(dm.k),
              "prepared state lacks the per-type targets");
      for (index_t t = 0; t < dm.k; ++t) {
        ReconSpec spec{&prep.fixed_targets[static_cast<std::size_t>(t)], nullptr};
        fr.recon_loss += decoder_pass(
            *dec_in, p.wa[head0 + static_cast<std::size_t>(t)], spec, opt.full_bce, opt.gamma,
            opt.recon_block, want_grads ? &fr.dec_grad_wa[head0 + static_cast<std::size_t>(t)] : nullptr,
            want_grads ? &grad_v : nullptr, nullptr);
      }
      break;
    }
  }
  if (want_grads) {
    SparseMatrix dec_ph_from_td;
    if (two_layer) {
      // grad_v holds dL/dTd; push it through Td = P_H * relu(U Wa1).
      dec_ph_from_td = sampled_rowrow_dot(fr.ph, grad_v, d1m);
      DenseMatrix grad_d1(dm.n, p.wa[0].cols);
      spmm_transpose_into(fr.ph, grad_v, grad_d1, false);
      relu_backward_inplace(grad_d1, zd1);
      matmul_tn_acc(fr.dec_grad_wa[0], fr.u, grad_d1);
      fr.dec_grad_u = matmul_nt(grad_d1, p.wa[0]);
    } else {
      fr.dec_grad_u = std::move(grad_v);
    }
    if (moving_neglog.rows > 0 && dec_ph_from_td.rows > 0) {
      fr.dec_grad_ph = pattern_add(moving_neglog, dec_ph_from_td);
    } else if (moving_neglog.rows > 0) {
      fr.dec_grad_ph = std::move(moving_neglog);
    } else if (dec_ph_from_td.rows > 0) {
      fr.dec_grad_ph = std::move(dec_ph_from_td);
    }
  }

  fr.total_loss = fr.class_loss + opt.gamma * fr.recon_loss;

  if (!opt.training) {
    fr.channels.clear();
    fr.ph = SparseMatrix();
    fr.ph_rowsum.clear();
    fr.f_agg = DenseMatrix();
    fr.h0 = DenseMatrix();
    fr.u = DenseMatrix();
    fr.z1 = DenseMatrix();
  }
  return fr;
}

HeteroGrads hetero_backward(const PreparedHetero& prep, const HeteroParams& p,
                            const HeteroOptions& opt, const HeteroForwardResult& fr) {
  require(prep.graph != nullptr, "prepared state has no graph");
  const HeteroGraph& g = *prep.graph;
  const Dims dm = check_hetero(g, p, opt.variant, opt.decoder_layers);
  require(fr.dlogits.rows == dm.n && !fr.channels.empty(),
          "backward requires a forward result computed with training enabled");

  HeteroGrads grads;

  // Classifier head and encoder layer.
  grads.w1 = matmul_tn(fr.h1, fr.dlogits);
  grads.b = column_sums(fr.dlogits);
  DenseMatrix dz1 = matmul_nt(fr.dlogits, p.w1);
  relu_backward_inplace(dz1, fr.z1);
  grads.w0 = matmul_tn(fr.u, dz1);
  DenseMatrix grad_u = matmul_nt(dz1, p.w0);

  if (opt.gamma != 0.0) {
    require(fr.dec_grad_u.rows == grad_u.rows && fr.dec_grad_u.cols == grad_u.cols,
            "forward result lacks decoder gradients");
    for (std::size_t i = 0; i < grad_u.v.size(); ++i) grad_u.v[i] += fr.dec_grad_u.v[i];
    grads.wa = fr.dec_grad_wa;
  } else {
    for (const DenseMatrix& w : p.wa) grads.wa.emplace_back(w.rows, w.cols);
  }

  // Through U = P_H H0: the dense gradient sampled at P_H's pattern plus any
  // decoder terms that touch P_H directly, then back through the row
  // normalization to At_H, which distributes unchanged to every channel.
  SparseMatrix g_ph = sampled_rowrow_dot(fr.ph, grad_u, fr.h0);
  if (fr.dec_grad_ph.rows > 0) g_ph = pattern_add(g_ph, fr.dec_grad_ph);
  const SparseMatrix d_at_h = row_normalize_backward(g_ph, fr.ph, fr.ph_rowsum);

  DenseMatrix grad_h0(dm.n, dm.d0);
  spmm_transpose_into(fr.ph, grad_u, grad_h0, false);

  DenseMatrix grad_f(dm.n, dm.dc);
  grads.channel_w1.resize(static_cast<std::size_t>(dm.c));
  grads.channel_w2.resize(static_cast<std::size_t>(dm.c));
  for (index_t i = 0; i < dm.c; ++i) {
    const HeteroChannelTape& tape = fr.channels[static_cast<std::size_t>(i)];

    // Slice this channel's block of grad_h0 and gate it by the ReLU.
    DenseMatrix dz(dm.n, dm.dc);
    for (index_t r = 0; r < dm.n; ++r) {
      const double* src = grad_h0.row(r) + i * dm.dc;
      const double* pre = tape.z.row(r);
      double* dst = dz.row(r);
      for (index_t j = 0; j < dm.dc; ++j) dst[j] = pre[j] > 0.0 ? src[j] : 0.0;
    }
    spmm_transpose_into(tape.p, dz, grad_f, true);

    // Channel-weight gradients through At^i = Q1 Q2 + I. The loss reaches
    // At^i both via its own normalization P^i and via the At_H sum.
    const SparseMatrix g_pi = sampled_rowrow_dot(tape.p, dz, fr.f_agg);
    SparseMatrix d_at = row_normalize_backward(g_pi, tape.p, tape.rowsum);
    d_at = pattern_add(d_at, d_at_h);

    const std::size_t k = static_cast<std::size_t>(dm.k);
    std::vector<double> t(k * k);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        t[a * k + b] = pattern_dot(d_at, prep.pair_products[a * k + b]);
      }
    }
    std::vector<double> g1(k, 0.0), g2(k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        g1[a] += tape.w2hat[b] * t[a * k + b];
        g2[b] += tape.w1hat[a] * t[a * k + b];
      }
    }
    auto softmax_backward = [](const std::vector<double>& what, const std::vector<double>& gv) {
      double inner = 0.0;
      for (std::size_t j = 0; j < gv.size(); ++j) inner += gv[j] * what[j];
      DenseMatrix out(1, static_cast<index_t>(gv.size()));
      for (std::size_t j = 0; j < gv.size(); ++j) out.v[j] = what[j] * (gv[j] - inner);
      return out;
    };
    grads.channel_w1[static_cast<std::size_t>(i)] = softmax_backward(tape.w1hat, g1);
    grads.channel_w2[static_cast<std::size_t>(i)] = softmax_backward(tape.w2hat, g2);
  }

  grads.waggre = matmul_tn(g.features, grad_f);
  return grads;
}

DenseMatrix hetero_predict(const PreparedHetero& prep, const HeteroParams& p) {
  require(prep.graph != nullptr, "prepared state has no graph");
  const HeteroGraph& g = *prep.graph;
  const HeteroTransformResult tr = hetero_transform(g.adjacencies, p.channel_w1, p.channel_w2);
  const DenseMatrix h0 = hetero_aggregate(tr.channel_adj, g.features, p.waggre);
  const DenseMatrix u = spmm(row_normalize(tr.hybrid), h0);
  DenseMatrix h1 = matmul(u, p.w0);
  relu_inplace(h1);
  DenseMatrix logits = matmul(h1, p.w1);
  add_row_broadcast(logits, p.b);
  row_softmax_inplace(logits);
  return logits;
}

}  // namespace aegcn
