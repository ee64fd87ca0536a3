// Training loops, seed sweeps, and the finite-difference gradient checker.
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <thread>

#include "aegcn/errors.hpp"
#include "aegcn/harness.hpp"
#include "aegcn/metrics.hpp"
#include "aegcn/nn.hpp"
#include "aegcn/synthetic.hpp"

namespace aegcn {
namespace {

struct StepLosses {
  double cls = 0.0, rec = 0.0, tot = 0.0;
};

void check_finite_loss(double loss, int epoch) {
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                       " (last good epoch " + std::to_string(epoch - 1) + ")");
  }
}

// Shared epoch loop: step(e) advances the parameters and reports the losses
// of the forward pass that entered epoch e; predict() evaluates the updated
// parameters.
template <typename StepFn, typename PredictFn>
RunLog drive_training(const TrainConfig& cfg, const std::vector<index_t>& labels,
                      const std::vector<index_t>& train_mask, const std::vector<index_t>& val_mask,
                      const std::vector<index_t>& test_mask, StepFn step, PredictFn predict) {
  const auto t0 = std::chrono::steady_clock::now();
  RunLog log;
  log.config = cfg;

  std::vector<EvalMetrics> val_track, test_track;
  auto eval_now = [&] {
    const DenseMatrix probs = predict();
    return std::array<EvalMetrics, 3>{evaluate_predictions(probs, labels, train_mask),
                                      evaluate_predictions(probs, labels, val_mask),
                                      evaluate_predictions(probs, labels, test_mask)};
  };

  if (cfg.epochs == 0) {
    const auto m = eval_now();
    log.selected_epoch = 0;
    log.final_val_acc = m[1].accuracy;
    log.final_val_macro_f1 = m[1].macro_f1;
    log.final_test_acc = m[2].accuracy;
    log.final_test_macro_f1 = m[2].macro_f1;
  } else {
    double best_val = -1.0;
    int best_epoch = 1;
    for (int e = 1; e <= cfg.epochs; ++e) {
      const StepLosses losses = step(e);
      const auto m = eval_now();
      log.epochs.push_back({e, losses.cls, losses.rec, losses.tot, m[0].accuracy, m[0].macro_f1,
                            m[1].accuracy, m[1].macro_f1});
      val_track.push_back(m[1]);
      test_track.push_back(m[2]);
      if (m[1].accuracy > best_val) {
        best_val = m[1].accuracy;
        best_epoch = e;
      }
    }
    log.selected_epoch = cfg.best_val ? best_epoch : cfg.epochs;
    const auto sel = static_cast<std::size_t>(log.selected_epoch - 1);
    log.final_val_acc = val_track[sel].accuracy;
    log.final_val_macro_f1 = val_track[sel].macro_f1;
    log.final_test_acc = test_track[sel].accuracy;
    log.final_test_macro_f1 = test_track[sel].macro_f1;
  }

  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return log;
}

}  // namespace

RunLog run_train_homo(const HomoGraph& g, const SparseMatrix& s, const TrainConfig& cfg,
                      HomoParams* trained) {
  if (cfg.hetero) throw ConfigError("homogeneous runner given a heterogeneous config");
  RandomStream stream(cfg.seed);
  HomoParams p = init_homo_params(g.d, cfg.d1, g.f, g.n, cfg.decoder_layers, stream);
  Adam adam(cfg.lr, cfg.weight_decay);
  HomoOptions mo;
  mo.gamma = cfg.gamma;
  mo.dropout = cfg.dropout;
  mo.decoder_layers = cfg.decoder_layers;
  mo.training = true;

  RunLog log = drive_training(
      cfg, g.labels, g.train_mask, g.val_mask, g.test_mask,
      [&](int epoch) {
        const HomoForwardResult fr = homo_forward(g, s, p, mo, &stream);
        check_finite_loss(fr.total_loss, epoch);
        const HomoGrads grads = homo_backward(s, p, mo, fr);
        adam.step(homo_param_slots(p, grads));
        return StepLosses{fr.class_loss, fr.recon_loss, fr.total_loss};
      },
      [&] { return homo_predict(g, s, p); });
  if (trained) *trained = std::move(p);
  return log;
}

RunLog run_train_hetero(const PreparedHetero& prep, const TrainConfig& cfg,
                        HeteroParams* trained) {
  if (!cfg.hetero) throw ConfigError("heterogeneous runner given a homogeneous config");
  if (prep.graph == nullptr) throw ArgumentError("prepared state has no graph");
  const HeteroGraph& g = *prep.graph;
  RandomStream stream(cfg.seed);
  HeteroParams p = init_hetero_params(g, cfg.d0, cfg.d1, static_cast<int>(cfg.channels),
                                      cfg.variant, cfg.decoder_layers, stream);
  Adam adam(cfg.lr, cfg.weight_decay);
  HeteroOptions mo;
  mo.variant = cfg.variant;
  mo.gamma = cfg.gamma;
  mo.decoder_layers = cfg.decoder_layers;
  mo.training = true;

  RunLog log = drive_training(
      cfg, g.labels, g.train_mask, g.val_mask, g.test_mask,
      [&](int epoch) {
        const HeteroForwardResult fr = hetero_forward(prep, p, mo);
        check_finite_loss(fr.total_loss, epoch);
        const HeteroGrads grads = hetero_backward(prep, p, mo, fr);
        adam.step(hetero_param_slots(p, grads));
        return StepLosses{fr.class_loss, fr.recon_loss, fr.total_loss};
      },
      [&] { return hetero_predict(prep, p); });
  if (trained) *trained = std::move(p);
  return log;
}

RunLog run_train_dataset(const TrainConfig& cfg) {
  if (cfg.dataset_dir.empty()) throw ConfigError("no dataset directory given");
  if (cfg.hetero) {
    const HeteroGraph g = load_hetero(cfg.dataset_dir);
    const PreparedHetero prep = prepare_hetero(g, cfg.variant);
    return run_train_hetero(prep, cfg);
  }
  const HomoGraph g = load_homo(cfg.dataset_dir);
  const SparseMatrix s = homo_operator(g);
  return run_train_homo(g, s, cfg);
}

namespace {

template <typename RunFn>
std::vector<RunLog> sweep_seeds(const TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                                int parallel, RunFn run) {
  if (seeds.empty()) throw ConfigError("no seeds given");
  std::vector<RunLog> out(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < seeds.size(); i = next.fetch_add(1)) {
      try {
        TrainConfig cfg = base;
        cfg.seed = seeds[i];
        out[i] = run(cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const auto workers = std::min<std::size_t>(std::max(parallel, 1), seeds.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

std::vector<RunLog> run_seeds_homo(const HomoGraph& g, const SparseMatrix& s,
                                   const TrainConfig& base,
                                   const std::vector<std::uint64_t>& seeds, int parallel) {
  return sweep_seeds(base, seeds, parallel,
                     [&](const TrainConfig& cfg) { return run_train_homo(g, s, cfg); });
}

std::vector<RunLog> run_seeds_hetero(const PreparedHetero& prep, const TrainConfig& base,
                                     const std::vector<std::uint64_t>& seeds, int parallel) {
  return sweep_seeds(base, seeds, parallel,
                     [&](const TrainConfig& cfg) { return run_train_hetero(prep, cfg); });
}

std::vector<RunLog> run_seeds(const TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                              int parallel) {
  if (base.dataset_dir.empty()) throw ConfigError("no dataset directory given");
  if (base.hetero) {
    const HeteroGraph g = load_hetero(base.dataset_dir);
    const PreparedHetero prep = prepare_hetero(g, base.variant);
    return run_seeds_hetero(prep, base, seeds, parallel);
  }
  const HomoGraph g = load_homo(base.dataset_dir);
  const SparseMatrix s = homo_operator(g);
  return run_seeds_homo(g, s, base, seeds, parallel);
}

namespace {

void check_case_slots(const std::string& case_name, const std::vector<ParamSlot>& slots,
                      const std::function<double(std::size_t, const DenseMatrix&)>& loss_with,
                      const GradCheckOptions& opt, std::vector<GradCheckEntry>& out) {
  for (std::size_t i = 0; i < slots.size(); ++i) {
    DenseMatrix analytic = *slots[i].grad;
    if (!opt.corrupt_param.empty() && slots[i].name == opt.corrupt_param) {
      for (double& v : analytic.v) v *= opt.corrupt_scale;
    }
    const double err = finite_diff_check(
        [&](const DenseMatrix& cand) { return loss_with(i, cand); }, *slots[i].param, analytic);
    out.push_back({case_name, slots[i].name, err, err <= opt.tolerance});
  }
}

void gradcheck_homo_case(int layers, const GradCheckOptions& opt,
                         std::vector<GradCheckEntry>& out) {
  SyntheticHomoSpec gs;
  gs.nodes_per_class = 8;
  gs.classes = 3;
  gs.feature_dim = 9;
  gs.p_in = 0.25;
  gs.p_out = 0.08;
  gs.train_per_class = 3;
  gs.val_per_class = 2;
  gs.seed = 5;
  const HomoGraph g = synthetic_homo(gs);
  const SparseMatrix s = homo_operator(g);
  HomoOptions mo;
  mo.gamma = 0.7;
  mo.dropout = 0.35;  // masks replay exactly: every evaluation reseeds the stream
  mo.decoder_layers = layers;
  mo.training = true;
  constexpr std::uint64_t kDrawSeed = 1234;

  RandomStream init_stream(99);
  HomoParams base = init_homo_params(g.d, 5, g.f, g.n, layers, init_stream);
  auto loss_of = [&](const HomoParams& pp) {
    RandomStream st(kDrawSeed);
    return homo_forward(g, s, pp, mo, &st).total_loss;
  };
  RandomStream st(kDrawSeed);
  const HomoForwardResult fr = homo_forward(g, s, base, mo, &st);
  const HomoGrads grads = homo_backward(s, base, mo, fr);
  const auto slots = homo_param_slots(base, grads);
  check_case_slots(
      layers == 2 ? "homo-2layer" : "homo-1layer", slots,
      [&](std::size_t i, const DenseMatrix& cand) {
        HomoParams pp = base;
        *homo_param_slots(pp, grads)[i].param = cand;
        return loss_of(pp);
      },
      opt, out);
}

void gradcheck_hetero_case(VariantKind v, int layers, const GradCheckOptions& opt,
                           std::vector<GradCheckEntry>& out) {
  SyntheticHeteroSpec gs;
  gs.primary = 12;
  gs.secondary = 6;
  gs.tertiary = 6;
  gs.classes = 3;
  gs.feature_dim = 8;
  gs.edge_types = 4;
  gs.train_per_class = 2;
  gs.val_per_class = 1;
  gs.seed = 6;
  const HeteroGraph g = synthetic_hetero(gs);
  const PreparedHetero prep = prepare_hetero(g, v);
  HeteroOptions mo;
  mo.variant = v;
  mo.gamma = 0.9;
  mo.decoder_layers = layers;
  mo.training = true;

  RandomStream init_stream(77);
  HeteroParams base = init_hetero_params(g, 4, 3, 2, v, layers, init_stream);
  auto loss_of = [&](const HeteroParams& pp) { return hetero_forward(prep, pp, mo).total_loss; };
  const HeteroForwardResult fr = hetero_forward(prep, base, mo);
  const HeteroGrads grads = hetero_backward(prep, base, mo, fr);
  const auto slots = hetero_param_slots(base, grads);
  check_case_slots(
      "hetero-" + variant_to_string(v) + (layers == 2 ? "-2layer" : ""), slots,
      [&](std::size_t i, const DenseMatrix& cand) {
        HeteroParams pp = base;
        *hetero_param_slots(pp, grads)[i].param = cand;
        return loss_of(pp);
      },
      opt, out);
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck(const GradCheckOptions& opt) {
  std::vector<GradCheckEntry> out;
  const bool want_homo = (!opt.hetero || !*opt.hetero) && !opt.variant;
  const bool want_hetero = !opt.hetero || *opt.hetero;
  if (want_homo) {
    if (!opt.decoder_layers || *opt.decoder_layers == 1) gradcheck_homo_case(1, opt, out);
    if (!opt.decoder_layers || *opt.decoder_layers == 2) gradcheck_homo_case(2, opt, out);
  }
  if (want_hetero) {
    const int layers = opt.decoder_layers.value_or(1);
    for (VariantKind v : {VariantKind::FeatureTarget, VariantKind::HybridAdjacency,
                          VariantKind::SummedAdjacency, VariantKind::SplitAdjacency}) {
      if (opt.variant && *opt.variant != v) continue;
      gradcheck_hetero_case(v, layers, opt, out);
    }
  }
  return out;
}

}  // namespace aegcn
