// Layer and loss primitives: pinned analytic examples, dense-composition
// oracles, and central-difference certification of every backward pass.
#include <doctest.h>

#include <cmath>
#include <vector>

#include "aegcn/nn.hpp"
#include "aegcn/sparse_ops.hpp"
#include "support/dense_ref.hpp"

using namespace aegcn;
using testref::max_abs_diff;
using testref::random_dense;

namespace {

SparseMatrix identity_sparse(index_t n) {
  std::vector<Triplet> t;
  for (index_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return csr_from_triplets(n, n, std::move(t));
}

SparseMatrix toy_operator(index_t n, RandomStream& rs) {
  return sym_normalize(add_self_loops(testref::random_adjacency(n, 0.3, rs)));
}

// Scalar functional sum(C .* out) used to exercise a layer's backward pass:
// its gradient at the output is exactly C.
double weighted_output_sum(const DenseMatrix& out, const DenseMatrix& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.v.size(); ++i) s += c.v[i] * out.v[i];
  return s;
}

}  // namespace

TEST_SUITE("nn-ops") {

TEST_CASE("activations: ranges, stability, identity") {
  RandomStream rs(41);
  DenseMatrix m = random_dense(4, 5, rs, -50.0, 50.0);

  DenseMatrix relu = apply_activation(Activation::ReLU, m);
  for (std::size_t i = 0; i < m.v.size(); ++i) {
    CHECK(relu.v[i] >= 0.0);
    CHECK(relu.v[i] == (m.v[i] > 0.0 ? m.v[i] : 0.0));
  }

  // Saturated logits round to the closed endpoints in double precision.
  DenseMatrix sig = apply_activation(Activation::Sigmoid, m);
  for (double v : sig.v) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  DenseMatrix mild = random_dense(4, 5, rs, -4.0, 4.0);
  DenseMatrix sig_mild = apply_activation(Activation::Sigmoid, mild);
  for (double v : sig_mild.v) {
    CHECK(v > 0.01);
    CHECK(v < 0.99);
  }

  // Row softmax stays normalized even for extreme logits.
  DenseMatrix soft = apply_activation(Activation::RowSoftmax, m);
  for (index_t i = 0; i < soft.rows; ++i) {
    double s = 0.0;
    for (index_t j = 0; j < soft.cols; ++j) {
      CHECK(soft(i, j) >= 0.0);
      s += soft(i, j);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }

  CHECK(max_abs_diff(apply_activation(Activation::None, m), m) == 0.0);
}

TEST_CASE("dropout: identity at rate 0, inverted scaling, determinism") {
  RandomStream rs(42);
  DenseMatrix m = random_dense(6, 5, rs);
  DenseMatrix orig = m;

  std::vector<std::uint8_t> mask;
  RandomStream s0(7);
  dropout_inplace(m, 0.0, s0, mask);
  CHECK(max_abs_diff(m, orig) == 0.0);
  for (auto k : mask) CHECK(k == 1);

  const double rate = 0.4;
  DenseMatrix a = orig, b = orig;
  std::vector<std::uint8_t> mask_a, mask_b;
  RandomStream sa(123), sb(123);
  dropout_inplace(a, rate, sa, mask_a);
  dropout_inplace(b, rate, sb, mask_b);
  CHECK(mask_a == mask_b);
  CHECK(max_abs_diff(a, b) == 0.0);

  bool any_dropped = false;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    if (mask_a[i]) {
      CHECK(a.v[i] == doctest::Approx(orig.v[i] / (1.0 - rate)).epsilon(1e-15));
    } else {
      CHECK(a.v[i] == 0.0);
      any_dropped = true;
    }
  }
  CHECK(any_dropped);

  // Backward applies the same mask and scale to the gradient.
  DenseMatrix grad = random_dense(6, 5, rs);
  DenseMatrix graw = grad;
  dropout_backward_inplace(grad, rate, mask_a);
  for (std::size_t i = 0; i < grad.v.size(); ++i) {
    const double want = mask_a[i] ? graw.v[i] / (1.0 - rate) : 0.0;
    CHECK(grad.v[i] == doctest::Approx(want).epsilon(1e-15));
  }

  RandomStream sx(1);
  CHECK_THROWS_AS(dropout_inplace(m, 1.0, sx, mask), ArgumentError);
  CHECK_THROWS_AS(dropout_inplace(m, -0.1, sx, mask), ArgumentError);
}

TEST_CASE("gcn_layer_forward pinned examples and dense oracle") {
  RandomStream rs(43);
  DenseMatrix h = random_dense(4, 4, rs);
  auto eye = identity_sparse(4);
  DenseMatrix weye = DenseMatrix::identity(4);
  auto r = gcn_layer_forward(eye, h, weye, Activation::None);
  CHECK(max_abs_diff(r.out, h) == 0.0);

  auto s = toy_operator(6, rs);
  DenseMatrix h6 = random_dense(6, 5, rs);
  DenseMatrix w = random_dense(5, 3, rs);
  auto fr = gcn_layer_forward(s, h6, w, Activation::ReLU);
  for (double v : fr.out.v) CHECK(v >= 0.0);

  DenseMatrix want = testref::naive_matmul(testref::naive_matmul(to_dense(s), h6), w);
  for (double& v : want.v) v = std::max(v, 0.0);
  CHECK(max_abs_diff(fr.out, want) < 1e-12);

  CHECK_THROWS_AS(gcn_layer_forward(s, h, w, Activation::None), DimensionError);
}

TEST_CASE("gcn_layer_backward: degenerate cases and finite differences") {
  RandomStream rs(44);
  auto s = toy_operator(5, rs);
  DenseMatrix h = random_dense(5, 4, rs);
  DenseMatrix w = random_dense(4, 3, rs);

  auto fwd = gcn_layer_forward(s, h, w, Activation::ReLU);
  auto zero = gcn_layer_backward(s, fwd.cache, w, DenseMatrix(5, 3), true);
  CHECK(max_abs_diff(zero.grad_input, DenseMatrix(5, 4)) == 0.0);
  CHECK(max_abs_diff(zero.grad_weight, DenseMatrix(4, 3)) == 0.0);

  // S = I, no activation: the layer is a plain matmul.
  auto eye = identity_sparse(5);
  auto plain = gcn_layer_forward(eye, h, w, Activation::None);
  DenseMatrix g = random_dense(5, 3, rs);
  auto pg = gcn_layer_backward(eye, plain.cache, w, g, true);
  CHECK(max_abs_diff(pg.grad_weight, testref::naive_matmul_tn(h, g)) < 1e-12);
  CHECK(max_abs_diff(pg.grad_input, testref::naive_matmul_nt(g, w)) < 1e-12);

  // Finite differences through ReLU for both the weight and the input.
  DenseMatrix c = random_dense(5, 3, rs);
  auto bw = gcn_layer_backward(s, fwd.cache, w, c, true);
  auto f_w = [&](const DenseMatrix& wp) {
    return weighted_output_sum(gcn_layer_forward(s, h, wp, Activation::ReLU).out, c);
  };
  CHECK(finite_diff_check(f_w, w, bw.grad_weight) < 1e-4);
  auto f_h = [&](const DenseMatrix& hp) {
    return weighted_output_sum(gcn_layer_forward(s, hp, w, Activation::ReLU).out, c);
  };
  CHECK(finite_diff_check(f_h, h, bw.grad_input) < 1e-4);
}

TEST_CASE("dense_layer forward and backward") {
  RandomStream rs(45);
  DenseMatrix h = random_dense(4, 4, rs);
  auto id = dense_layer_forward(h, DenseMatrix::identity(4), nullptr, Activation::None);
  CHECK(max_abs_diff(id.out, h) == 0.0);

  // Zero input with a constant bias softmaxes to uniform rows.
  DenseMatrix zero(3, 4);
  DenseMatrix w(4, 5);
  DenseMatrix ones(1, 5, 1.0);
  auto uni = dense_layer_forward(zero, w, &ones, Activation::RowSoftmax);
  for (double v : uni.out.v) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));

  DenseMatrix wr = random_dense(4, 3, rs);
  DenseMatrix b = random_dense(1, 3, rs);
  auto fwd = dense_layer_forward(h, wr, &b, Activation::Sigmoid);

  auto zg = dense_layer_backward(fwd.cache, wr, DenseMatrix(4, 3), true, true);
  CHECK(max_abs_diff(zg.grad_weight, DenseMatrix(4, 3)) == 0.0);
  CHECK(max_abs_diff(zg.grad_bias, DenseMatrix(1, 3)) == 0.0);

  // No activation: grad_b collapses to column sums of grad_out.
  auto lin = dense_layer_forward(h, wr, &b, Activation::None);
  DenseMatrix g = random_dense(4, 3, rs);
  auto lg = dense_layer_backward(lin.cache, wr, g, true, true);
  for (index_t j = 0; j < 3; ++j) {
    double s = 0.0;
    for (index_t i = 0; i < 4; ++i) s += g(i, j);
    CHECK(lg.grad_bias(0, j) == doctest::Approx(s).epsilon(1e-13));
  }

  // Finite differences through the sigmoid for weight, bias, and input.
  DenseMatrix c = random_dense(4, 3, rs);
  auto bw = dense_layer_backward(fwd.cache, wr, c, true, true);
  auto f_w = [&](const DenseMatrix& wp) {
    return weighted_output_sum(dense_layer_forward(h, wp, &b, Activation::Sigmoid).out, c);
  };
  CHECK(finite_diff_check(f_w, wr, bw.grad_weight) < 1e-4);
  auto f_b = [&](const DenseMatrix& bp) {
    return weighted_output_sum(dense_layer_forward(h, wr, &bp, Activation::Sigmoid).out, c);
  };
  CHECK(finite_diff_check(f_b, b, bw.grad_bias) < 1e-4);
  auto f_h = [&](const DenseMatrix& hp) {
    return weighted_output_sum(dense_layer_forward(hp, wr, &b, Activation::Sigmoid).out, c);
  };
  CHECK(finite_diff_check(f_h, h, bw.grad_input) < 1e-4);

  CHECK_THROWS_AS(dense_layer_forward(h, wr, &ones, Activation::None), DimensionError);
}

TEST_CASE("masked_class_loss pinned examples") {
  // Perfect one-hot predictions cost nothing.
  DenseMatrix perfect(2, 3);
  perfect(0, 1) = 1.0;
  perfect(1, 0) = 1.0;
  auto r0 = masked_class_loss(perfect, {1, 0}, {0, 1});
  CHECK(r0.loss == doctest::Approx(0.0).epsilon(1e-12));

  // Uniform predictions cost exactly ln f.
  const index_t f = 7;
  DenseMatrix uniform(3, f, 1.0 / static_cast<double>(f));
  auto r1 = masked_class_loss(uniform, {0, 3, 6}, {0, 1, 2});
  CHECK(r1.loss == doctest::Approx(std::log(static_cast<double>(f))).epsilon(1e-12));

  // Random probabilities against the direct summation formula.
  RandomStream rs(46);
  DenseMatrix probs(4, 3);
  for (index_t i = 0; i < 4; ++i) {
    double s = 0.0;
    for (index_t j = 0; j < 3; ++j) s += (probs(i, j) = rs.uniform(0.1, 1.0));
    for (index_t j = 0; j < 3; ++j) probs(i, j) /= s;
  }
  const std::vector<index_t> labels = {2, 0, 1, 1};
  const std::vector<index_t> mask = {0, 2};
  auto r2 = masked_class_loss(probs, labels, mask);
  const double want = -0.5 * (std::log(probs(0, 2)) + std::log(probs(2, 1)));
  CHECK(r2.loss == doctest::Approx(want).epsilon(1e-12));

  // Logit-level gradient: (probs - onehot)/|mask| on masked rows, else zero.
  for (index_t i = 0; i < 4; ++i)
    for (index_t j = 0; j < 3; ++j) {
      const bool masked = i == 0 || i == 2;
      const double onehot = j == labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
      const double wantg = masked ? (probs(i, j) - onehot) / 2.0 : 0.0;
      CHECK(r2.grad(i, j) == doctest::Approx(wantg).epsilon(1e-12));
    }

  CHECK_THROWS_AS(masked_class_loss(probs, labels, {}), ArgumentError);
  CHECK_THROWS_AS(masked_class_loss(probs, labels, {9}), ArgumentError);
  DenseMatrix sloppy(1, 3, 0.9);  // rows sum to 2.7
  CHECK_THROWS_AS(masked_class_loss(sloppy, {0}, {0}), ArgumentError);
}

TEST_CASE("recon_loss_adjacency pinned examples and gradient") {
  // Empty positive set: zero loss, zero gradient.
  DenseMatrix pred2(2, 2, 0.7);
  auto r0 = recon_loss_adjacency(SparseMatrix(2, 2), pred2);
  CHECK(r0.loss == 0.0);
  CHECK(max_abs_diff(r0.grad, DenseMatrix(2, 2)) == 0.0);

  // target = I2, pred diagonal e^-1: loss = -(1/4) * 2 * (-1) = 0.5.
  auto eye = identity_sparse(2);
  DenseMatrix pe(2, 2, 0.3);
  pe(0, 0) = pe(1, 1) = std::exp(-1.0);
  auto r1 = recon_loss_adjacency(eye, pe);
  CHECK(r1.loss == doctest::Approx(0.5).epsilon(1e-12));

  // Random instance against direct summation; gradient by finite differences.
  RandomStream rs(47);
  auto target = row_normalize(add_self_loops(testref::random_adjacency(6, 0.3, rs)));
  DenseMatrix pred = random_dense(6, 6, rs, 0.05, 0.95);
  auto r2 = recon_loss_adjacency(target, pred);
  double want = 0.0;
  DenseMatrix dt = to_dense(target);
  for (index_t i = 0; i < 6; ++i)
    for (index_t j = 0; j < 6; ++j)
      if (dt(i, j) > 0.0) want -= dt(i, j) * std::log(pred(i, j));
  want /= 36.0;
  CHECK(r2.loss == doctest::Approx(want).epsilon(1e-12));
  CHECK(r2.loss >= 0.0);

  auto f = [&](const DenseMatrix& p) { return recon_loss_adjacency(target, p).loss; };
  CHECK(finite_diff_check(f, pred, r2.grad) < 1e-4);

  // Full binary cross-entropy adds the complement term at zero-target cells.
  auto r3 = recon_loss_adjacency(target, pred, true);
  double want_full = 0.0;
  for (index_t i = 0; i < 6; ++i)
    for (index_t j = 0; j < 6; ++j)
      want_full -= dt(i, j) * std::log(pred(i, j)) +
                   (1.0 - dt(i, j)) * std::log(1.0 - pred(i, j));
  want_full /= 36.0;
  CHECK(r3.loss == doctest::Approx(want_full).epsilon(1e-12));
  auto ffull = [&](const DenseMatrix& p) { return recon_loss_adjacency(target, p, true).loss; };
  CHECK(finite_diff_check(ffull, pred, r3.grad) < 1e-4);

  // Loss vanishes when pred = 1 at every positive target entry.
  DenseMatrix sat(6, 6, 0.5);
  for (index_t i = 0; i < 6; ++i)
    for (index_t j = 0; j < 6; ++j)
      if (dt(i, j) > 0.0) sat(i, j) = 1.0;
  CHECK(recon_loss_adjacency(target, sat).loss == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(recon_loss_adjacency(eye, DenseMatrix(3, 3, 0.5)), DimensionError);
}

TEST_CASE("recon_loss_feature pinned examples") {
  auto r0 = recon_loss_feature(DenseMatrix(3, 4), DenseMatrix(3, 4, 0.5));
  CHECK(r0.loss == 0.0);

  // All-ones 2x2 target with predictions e^-1: loss = (1/4) * 4 * 1 = 1.
  DenseMatrix ones(2, 2, 1.0);
  DenseMatrix pe(2, 2, std::exp(-1.0));
  CHECK(recon_loss_feature(ones, pe).loss == doctest::Approx(1.0).epsilon(1e-12));

  RandomStream rs(48);
  DenseMatrix x(5, 7);
  for (double& v : x.v) v = rs.bernoulli(0.3) ? 1.0 : 0.0;
  DenseMatrix xhat = random_dense(5, 7, rs, 0.05, 0.95);
  auto r1 = recon_loss_feature(x, xhat);
  double want = 0.0;
  for (std::size_t i = 0; i < x.v.size(); ++i)
    if (x.v[i] > 0.0) want -= x.v[i] * std::log(xhat.v[i]);
  want /= 35.0;
  CHECK(r1.loss == doctest::Approx(want).epsilon(1e-12));

  auto f = [&](const DenseMatrix& p) { return recon_loss_feature(x, p).loss; };
  CHECK(finite_diff_check(f, xhat, r1.grad) < 1e-4);

  auto ffull = [&](const DenseMatrix& p) { return recon_loss_feature(x, p, true).loss; };
  auto rfull = recon_loss_feature(x, xhat, true);
  CHECK(finite_diff_check(ffull, xhat, rfull.grad) < 1e-4);
}

TEST_CASE("finite_diff_check calibration") {
  RandomStream rs(49);
  DenseMatrix p = random_dense(3, 4, rs);
  DenseMatrix c = random_dense(3, 4, rs);

  // Central differences are exact for linear functionals.
  auto linear = [&](const DenseMatrix& q) { return weighted_output_sum(q, c); };
  CHECK(finite_diff_check(linear, p, c) < 1e-9);

  // Quadratic: f = sum p^2, grad = 2p.
  auto quad = [](const DenseMatrix& q) {
    double s = 0.0;
    for (double v : q.v) s += v * v;
    return s;
  };
  DenseMatrix twice = p;
  for (double& v : twice.v) v *= 2.0;
  CHECK(finite_diff_check(quad, p, twice) < 1e-7);

  // A wrong gradient is flagged with a large relative error.
  DenseMatrix wrong = twice;
  wrong.v[0] *= 1.5;
  CHECK(finite_diff_check(quad, p, wrong) > 1e-2);
}

}  // TEST_SUITE
