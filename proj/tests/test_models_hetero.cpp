// Heterogeneous model: channel transform degenerations, aggregation oracle,
// per-variant reconstruction targets, and end-to-end gradient certification
// including the learned-target reconstruction path.
#include <doctest.h>

#include <cmath>
#include <vector>

#include "aegcn/model_hetero.hpp"
#include "aegcn/nn.hpp"
#include "aegcn/sparse_ops.hpp"
#include "aegcn/synthetic.hpp"
#include "support/dense_ref.hpp"

using namespace aegcn;
using testref::max_abs_diff;

namespace {

HeteroGraph toy_graph(int edge_types = 4, std::uint64_t seed = 6) {
  SyntheticHeteroSpec spec;
  spec.primary = 12;
  spec.secondary = 6;
  spec.tertiary = 6;
  spec.classes = 3;
  spec.feature_dim = 8;
  spec.edge_types = edge_types;
  spec.train_per_class = 2;
  spec.val_per_class = 1;
  spec.seed = seed;
  return synthetic_hetero(spec);
}

// Single-type directed toy for the K = 1 degenerations.
HeteroGraph single_type_graph() {
  HeteroGraph g;
  g.name = "one-type";
  g.n = 6;
  g.d = 4;
  g.f = 2;
  g.edge_type_names = {"e"};
  g.adjacencies.push_back(csr_from_triplets(
      6, 6, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}, {3, 4, 1.0}, {4, 5, 1.0}, {5, 3, 1.0},
             {0, 3, 1.0}, {2, 5, 1.0}}));
  RandomStream rs(17);
  g.features = testref::random_dense(6, 4, rs, 0.0, 1.0);
  g.labels = {0, 1, 0, 1, 0, 1};
  g.train_mask = {0, 1, 3};
  g.val_mask = {2};
  g.test_mask = {4, 5};
  return g;
}

HeteroParams toy_params(const HeteroGraph& g, index_t d0, index_t d1, int channels,
                        VariantKind v, int decoder_layers = 1, std::uint64_t seed = 77) {
  RandomStream rs(seed);
  return init_hetero_params(g, d0, d1, channels, v, decoder_layers, rs);
}

double fd_all_params(const PreparedHetero& prep, HeteroParams p, const HeteroOptions& opt) {
  auto fr = hetero_forward(prep, p, opt);
  auto grads = hetero_backward(prep, p, opt, fr);
  auto slots = hetero_param_slots(p, grads);
  double worst = 0.0;
  for (const auto& slot : slots) {
    DenseMatrix saved = *slot.param;
    auto f = [&](const DenseMatrix& m) {
      *slot.param = m;
      double loss = hetero_forward(prep, p, opt).total_loss;
      return loss;
    };
    const double err = finite_diff_check(f, saved, *slot.grad);
    *slot.param = saved;
    INFO("param ", slot.name, " rel err ", err);
    CHECK(err < 1e-4);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace

TEST_SUITE("models-hetero") {

TEST_CASE("K = 1, C = 1 transform degenerates to A^2 + I") {
  HeteroGraph g = single_type_graph();
  std::vector<DenseMatrix> cw1(1, DenseMatrix(1, 1, 0.3));  // softmax of one entry is 1
  std::vector<DenseMatrix> cw2(1, DenseMatrix(1, 1, -2.0));
  auto tr = hetero_transform(g.adjacencies, cw1, cw2);
  REQUIRE(tr.channel_adj.size() == 1);

  DenseMatrix a = to_dense(g.adjacencies[0]);
  DenseMatrix want = testref::naive_matmul(a, a);
  for (index_t i = 0; i < 6; ++i) want(i, i) += 1.0;
  CHECK(max_abs_diff(to_dense(tr.channel_adj[0]), want) < 1e-14);
  CHECK(max_abs_diff(to_dense(tr.hybrid), want) < 1e-14);
}

TEST_CASE("uniform channel weights mix to the plain average") {
  HeteroGraph g = toy_graph();
  const std::size_t k = g.adjacencies.size();
  REQUIRE(k == 4);
  // Equal raw weights softmax to exactly 1/4 each.
  std::vector<DenseMatrix> cw1(2, DenseMatrix(1, static_cast<index_t>(k), 0.7));
  std::vector<DenseMatrix> cw2(2, DenseMatrix(1, static_cast<index_t>(k), -1.3));
  auto tr = hetero_transform(g.adjacencies, cw1, cw2);

  DenseMatrix avg(g.n, g.n);
  for (const auto& adj : g.adjacencies) {
    DenseMatrix d = to_dense(adj);
    for (std::size_t i = 0; i < avg.v.size(); ++i) avg.v[i] += 0.25 * d.v[i];
  }
  DenseMatrix want = testref::naive_matmul(avg, avg);
  for (index_t i = 0; i < g.n; ++i) want(i, i) += 1.0;
  CHECK(max_abs_diff(to_dense(tr.channel_adj[0]), want) < 1e-12);

  // Identical raw vectors in both channels give identical channels, and the
  // hybrid is their sum.
  CHECK(tr.channel_adj[0].values == tr.channel_adj[1].values);
  DenseMatrix hybrid_want = to_dense(tr.channel_adj[0]);
  for (double& v : hybrid_want.v) v *= 2.0;
  CHECK(max_abs_diff(to_dense(tr.hybrid), hybrid_want) < 1e-12);
}

TEST_CASE("channel operator patterns agree across channels") {
  HeteroGraph g = toy_graph();
  RandomStream rs(3);
  std::vector<DenseMatrix> cw1, cw2;
  for (int i = 0; i < 2; ++i) {
    cw1.push_back(testref::random_dense(1, 4, rs));
    cw2.push_back(testref::random_dense(1, 4, rs));
  }
  auto tr = hetero_transform(g.adjacencies, cw1, cw2);
  // Strictly positive softmax weights make the structural pattern
  // weight-independent, which the gradient bookkeeping relies on.
  CHECK(tr.channel_adj[0].row_ptr == tr.channel_adj[1].row_ptr);
  CHECK(tr.channel_adj[0].col_idx == tr.channel_adj[1].col_idx);
}

TEST_CASE("aggregate: identity channel passes non-negative features through") {
  HeteroGraph g = single_type_graph();
  std::vector<Triplet> eye;
  for (index_t i = 0; i < 6; ++i) eye.push_back({i, i, 1.0});
  std::vector<SparseMatrix> chans = {csr_from_triplets(6, 6, std::move(eye))};
  DenseMatrix h0 = hetero_aggregate(chans, g.features, DenseMatrix::identity(4));
  CHECK(h0.v == g.features.v);
}

TEST_CASE("aggregate: identical channels produce identical column blocks") {
  HeteroGraph g = toy_graph();
  RandomStream rs(9);
  std::vector<DenseMatrix> cw1(2, DenseMatrix(1, 4, 0.0));
  std::vector<DenseMatrix> cw2(2, DenseMatrix(1, 4, 0.0));
  auto tr = hetero_transform(g.adjacencies, cw1, cw2);
  DenseMatrix waggre = testref::random_dense(8, 3, rs);
  DenseMatrix h0 = hetero_aggregate(tr.channel_adj, g.features, waggre);
  REQUIRE(h0.cols == 6);
  for (index_t i = 0; i < h0.rows; ++i)
    for (index_t j = 0; j < 3; ++j) CHECK(h0(i, j) == h0(i, j + 3));

  // Against the dense composition oracle, block by block.
  for (std::size_t c = 0; c < tr.channel_adj.size(); ++c) {
    DenseMatrix p = testref::dense_row_normalize(
        to_dense(tr.channel_adj[c]));
    DenseMatrix want = testref::naive_matmul(testref::naive_matmul(p, g.features), waggre);
    for (double& v : want.v) v = std::max(v, 0.0);
    for (index_t i = 0; i < h0.rows; ++i)
      for (index_t j = 0; j < 3; ++j)
        CHECK(h0(i, static_cast<index_t>(c) * 3 + j) ==
              doctest::Approx(want(i, j)).epsilon(1e-12));
  }
}

TEST_CASE("reconstruction targets per variant") {
  HeteroGraph g = toy_graph();
  std::vector<DenseMatrix> cw1(2, DenseMatrix(1, 4, 0.1));
  std::vector<DenseMatrix> cw2(2, DenseMatrix(1, 4, 0.2));
  auto tr = hetero_transform(g.adjacencies, cw1, cw2);

  auto tx = recon_target(g, VariantKind::FeatureTarget, tr.hybrid);
  CHECK(tx.dense == &g.features);
  CHECK(tx.sparse.empty());

  auto th = recon_target(g, VariantKind::HybridAdjacency, tr.hybrid);
  REQUIRE(th.sparse.size() == 1);
  CHECK(max_abs_diff(to_dense(th.sparse[0]),
                     testref::dense_row_normalize(to_dense(tr.hybrid))) < 1e-13);

  auto ta = recon_target(g, VariantKind::SummedAdjacency, tr.hybrid);
  REQUIRE(ta.sparse.size() == 1);
  DenseMatrix sum(g.n, g.n);
  for (const auto& adj : g.adjacencies) {
    DenseMatrix d = to_dense(adj);
    for (std::size_t i = 0; i < sum.v.size(); ++i) sum.v[i] += d.v[i];
  }
  CHECK(max_abs_diff(to_dense(ta.sparse[0]), testref::dense_row_normalize(
                                                 testref::dense_add_self_loops(sum))) < 1e-13);

  auto ts = recon_target(g, VariantKind::SplitAdjacency, tr.hybrid);
  REQUIRE(ts.sparse.size() == 4);
  for (std::size_t k = 0; k < 4; ++k)
    CHECK(max_abs_diff(to_dense(ts.sparse[k]),
                       testref::dense_row_normalize(testref::dense_add_self_loops(
                           to_dense(g.adjacencies[k])))) < 1e-13);
}

TEST_CASE("forward invariants: decomposition, row-stochastic head, predict") {
  HeteroGraph g = toy_graph();
  for (VariantKind v : {VariantKind::FeatureTarget, VariantKind::HybridAdjacency,
                        VariantKind::SummedAdjacency, VariantKind::SplitAdjacency}) {
    auto prep = prepare_hetero(g, v);
    HeteroParams p = toy_params(g, 4, 3, 2, v);
    HeteroOptions opt;
    opt.variant = v;
    opt.gamma = 0.9;
    opt.training = true;
    auto fr = hetero_forward(prep, p, opt);
    CHECK(std::abs(fr.total_loss - (fr.class_loss + opt.gamma * fr.recon_loss)) < 1e-12);
    CHECK(fr.recon_loss >= 0.0);
    for (index_t i = 0; i < fr.h2.rows; ++i) {
      double s = 0.0;
      for (index_t j = 0; j < fr.h2.cols; ++j) s += fr.h2(i, j);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }

    HeteroOptions eval = opt;
    eval.training = false;
    auto fe = hetero_forward(prep, p, eval);
    CHECK(fe.h2.v == hetero_predict(prep, p).v);

    opt.gamma = 0.0;
    auto f0 = hetero_forward(prep, p, opt);
    CHECK(f0.total_loss == f0.class_loss);
  }
}

TEST_CASE("end-to-end finite differences for all four variants") {
  HeteroGraph g = toy_graph(2, 11);  // K = 2 keeps the split decoder small
  for (VariantKind v : {VariantKind::FeatureTarget, VariantKind::HybridAdjacency,
                        VariantKind::SummedAdjacency, VariantKind::SplitAdjacency}) {
    auto prep = prepare_hetero(g, v);
    HeteroParams p = toy_params(g, 4, 3, 2, v);
    HeteroOptions opt;
    opt.variant = v;
    opt.gamma = 0.9;
    opt.training = true;
    fd_all_params(prep, p, opt);
  }
}

TEST_CASE("finite differences at decoder depth 2") {
  HeteroGraph g = toy_graph(2, 12);
  const VariantKind v = VariantKind::HybridAdjacency;  // moving target and extra layer
  auto prep = prepare_hetero(g, v);
  HeteroParams p = toy_params(g, 4, 3, 2, v, 2);
  HeteroOptions opt;
  opt.variant = v;
  opt.gamma = 0.8;
  opt.decoder_layers = 2;
  opt.training = true;
  fd_all_params(prep, p, opt);
}

TEST_CASE("channel-weight gradients are orthogonal to the ones vector") {
  HeteroGraph g = toy_graph();
  const VariantKind v = VariantKind::FeatureTarget;
  auto prep = prepare_hetero(g, v);
  HeteroParams p = toy_params(g, 4, 3, 2, v);
  HeteroOptions opt;
  opt.variant = v;
  opt.gamma = 1.0;
  opt.training = true;
  auto fr = hetero_forward(prep, p, opt);
  auto grads = hetero_backward(prep, p, opt, fr);
  // The softmax Jacobian maps every cotangent into the tangent space of the
  // simplex, whose elements sum to zero.
  for (const auto& cg : grads.channel_w1) {
    double s = 0.0;
    for (double x : cg.v) s += x;
    CHECK(std::abs(s) < 1e-12);
  }
  for (const auto& cg : grads.channel_w2) {
    double s = 0.0;
    for (double x : cg.v) s += x;
    CHECK(std::abs(s) < 1e-12);
  }
}

TEST_CASE("split variant with one edge type equals the summed variant") {
  HeteroGraph g = single_type_graph();
  auto prep_s = prepare_hetero(g, VariantKind::SplitAdjacency);
  auto prep_a = prepare_hetero(g, VariantKind::SummedAdjacency);

  // K = 1 gives both variants one decoder matrix of the same shape drawn
  // from the same stream position, and identical targets.
  HeteroParams ps = toy_params(g, 4, 3, 1, VariantKind::SplitAdjacency, 1, 123);
  HeteroParams pa = toy_params(g, 4, 3, 1, VariantKind::SummedAdjacency, 1, 123);
  REQUIRE(ps.wa.size() == 1);
  REQUIRE(pa.wa.size() == 1);
  CHECK(ps.wa[0].v == pa.wa[0].v);

  HeteroOptions os, oa;
  os.variant = VariantKind::SplitAdjacency;
  oa.variant = VariantKind::SummedAdjacency;
  os.gamma = oa.gamma = 0.7;
  os.training = oa.training = true;
  auto fs = hetero_forward(prep_s, ps, os);
  auto fa = hetero_forward(prep_a, pa, oa);
  CHECK(fs.recon_loss == doctest::Approx(fa.recon_loss).epsilon(1e-14));
  CHECK(fs.total_loss == doctest::Approx(fa.total_loss).epsilon(1e-14));

  auto gs = hetero_backward(prep_s, ps, os, fs);
  auto ga = hetero_backward(prep_a, pa, oa, fa);
  CHECK(max_abs_diff(gs.wa[0], ga.wa[0]) < 1e-14);
  CHECK(max_abs_diff(gs.waggre, ga.waggre) < 1e-14);
  CHECK(max_abs_diff(gs.channel_w1[0], ga.channel_w1[0]) < 1e-14);
}

TEST_CASE("parameter validation") {
  HeteroGraph g = toy_graph();
  CHECK_THROWS_AS(
      [&] {
        RandomStream rs(1);
        // d0 = 5 not divisible by 2 channels
        return init_hetero_params(g, 5, 3, 2, VariantKind::FeatureTarget, 1, rs);
      }(),
      ArgumentError);

  auto prep = prepare_hetero(g, VariantKind::FeatureTarget);
  HeteroParams p = toy_params(g, 4, 3, 2, VariantKind::FeatureTarget);
  p.w1 = DenseMatrix(5, g.f);
  HeteroOptions opt;
  CHECK_THROWS_WITH_AS(hetero_forward(prep, p, opt), "w1 shape mismatch", ArgumentError);
}

}  // TEST_SUITE
