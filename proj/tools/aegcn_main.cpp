// aegcn: train and evaluate autoencoder-constrained graph convolutional
// networks on canonical dataset directories.
//
// Exit codes: 0 success, 2 config error, 3 data validation error,
// 4 numerical failure.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "aegcn/data.hpp"
#include "aegcn/errors.hpp"
#include "aegcn/harness.hpp"
#include "aegcn/metrics.hpp"

namespace {

using namespace aegcn;

// Every config knob as an optional CLI flag; set flags overlay the config
// file, which overlays the per-dataset defaults.
struct ConfigFlags {
  std::string config_path, dataset, model, variant, eval_sel, seeds_csv;
  double gamma = 0.0, lr = 0.0, weight_decay = 0.0, dropout = 0.0;
  long long epochs = 0, decoder_layers = 0, d0 = 0, d1 = 0, channels = 0;
  std::uint64_t seed = 0;

  CLI::Option *o_config = nullptr, *o_dataset = nullptr, *o_model = nullptr, *o_variant = nullptr,
              *o_eval = nullptr, *o_seeds = nullptr, *o_gamma = nullptr, *o_lr = nullptr,
              *o_wd = nullptr, *o_dropout = nullptr, *o_epochs = nullptr, *o_layers = nullptr,
              *o_d0 = nullptr, *o_d1 = nullptr, *o_channels = nullptr, *o_seed = nullptr;

  void attach(CLI::App* cmd, bool with_training_knobs) {
    o_config = cmd->add_option("--config", config_path, "JSON config file");
    o_dataset = cmd->add_option("--dataset", dataset, "dataset directory");
    o_model = cmd->add_option("--model", model, "homo|hetero (default: from the dataset)");
    o_variant = cmd->add_option("--variant", variant, "reconstruction target: x|h|a|s");
    o_d0 = cmd->add_option("--d0", d0, "concatenated hidden width (hetero)")->check(CLI::Number);
    o_d1 = cmd->add_option("--d1", d1, "hidden width")->check(CLI::Number);
    o_channels = cmd->add_option("--channels", channels, "channel count (hetero)")->check(CLI::Number);
    o_layers = cmd->add_option("--decoder-layers", decoder_layers, "decoder depth: 1|2")
                   ->check(CLI::Number);
    o_seed = cmd->add_option("--seed", seed, "base RNG seed")->check(CLI::Number);
    if (with_training_knobs) {
      o_gamma = cmd->add_option("--gamma", gamma, "reconstruction loss weight")->check(CLI::Number);
      o_lr = cmd->add_option("--lr", lr, "learning rate")->check(CLI::Number);
      o_wd = cmd->add_option("--weight-decay", weight_decay, "L2 weight decay")
                 ->check(CLI::Number);
      o_dropout = cmd->add_option("--dropout", dropout, "dropout rate (homo)")->check(CLI::Number);
      o_epochs = cmd->add_option("--epochs", epochs, "training epochs")->check(CLI::Number);
      o_eval = cmd->add_option("--eval", eval_sel, "epoch selection: final|best_val");
      o_seeds = cmd->add_option("--seeds", seeds_csv, "comma-separated seed list");
    }
  }

  ConfigOverlay overlay() const {
    ConfigOverlay o;
    if (o_config->count() > 0) o = ConfigOverlay::from_json_file(config_path);
    ConfigOverlay f;
    if (o_dataset->count() > 0) f.dataset = dataset;
    if (o_model->count() > 0) f.model = model;
    if (o_variant->count() > 0) f.variant = variant;
    if (o_d0->count() > 0) f.d0 = static_cast<index_t>(d0);
    if (o_d1->count() > 0) f.d1 = static_cast<index_t>(d1);
    if (o_channels->count() > 0) f.channels = static_cast<index_t>(channels);
    if (o_layers->count() > 0) f.decoder_layers = static_cast<int>(decoder_layers);
    if (o_seed->count() > 0) f.seed = seed;
    if (o_gamma && o_gamma->count() > 0) f.gamma = gamma;
    if (o_lr && o_lr->count() > 0) f.lr = lr;
    if (o_wd && o_wd->count() > 0) f.weight_decay = weight_decay;
    if (o_dropout && o_dropout->count() > 0) f.dropout = dropout;
    if (o_epochs && o_epochs->count() > 0) f.epochs = static_cast<int>(epochs);
    if (o_eval && o_eval->count() > 0) f.eval_selection = eval_sel;
    if (o_seeds && o_seeds->count() > 0) f.seeds = parse_seed_list(seeds_csv);
    o.merge_from(f);
    return o;
  }

  static std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
      const std::size_t comma = std::min(csv.find(',', pos), csv.size());
      const std::string item = csv.substr(pos, comma - pos);
      try {
        std::size_t used = 0;
        seeds.push_back(std::stoull(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ConfigError("bad --seeds entry '" + item + "'");
      }
      pos = comma + 1;
    }
    if (seeds.empty()) throw ConfigError("empty --seeds list");
    return seeds;
  }
};

// Loaded dataset with the model-kind choice already settled.
struct LoadedData {
  bool hetero = false;
  HomoGraph homo;
  SparseMatrix homo_s;
  HeteroGraph het;
  std::string name;
};

LoadedData load_dataset(const ConfigOverlay& o) {
  if (!o.dataset || o.dataset->empty()) throw ConfigError("--dataset is required");
  LoadedData d;
  d.hetero = dataset_is_hetero(*o.dataset);
  if (d.hetero) {
    d.het = load_hetero(*o.dataset);
    d.name = d.het.name;
  } else {
    d.homo = load_homo(*o.dataset);
    d.homo_s = homo_operator(d.homo);
    d.name = d.homo.name;
  }
  return d;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

void write_run_files(const std::filesystem::path& json_path, const RunLog& log) {
  write_text(json_path, run_log_to_json(log) + "\n");
  std::filesystem::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  std::ofstream csv(csv_path);
  if (!csv) throw DataError("cannot open output file: " + csv_path.string());
  write_epoch_csv(csv, log);
}

void print_run_line(const RunLog& log) {
  std::printf("seed %llu: selected epoch %d, test_acc %.4f, test_macro_f1 %.4f (%.1fs)\n",
              static_cast<unsigned long long>(log.config.seed), log.selected_epoch,
              log.final_test_acc, log.final_test_macro_f1, log.wall_seconds);
}

int cmd_train(const ConfigFlags& flags, const std::string& out_path,
              const std::string& params_path, int parallel) {
  const ConfigOverlay o = flags.overlay();
  const LoadedData data = load_dataset(o);
  const TrainConfig cfg = resolve_config(o, data.hetero, data.name);

  std::vector<std::uint64_t> seeds = o.seeds;
  if (seeds.empty()) seeds.push_back(cfg.seed);

  PreparedHetero prep;
  if (data.hetero) prep = prepare_hetero(data.het, cfg.variant);

  if (seeds.size() == 1) {
    TrainConfig single = cfg;
    single.seed = seeds[0];
    HomoParams homo_params;
    HeteroParams het_params;
    const bool keep = !params_path.empty();
    RunLog log =
        data.hetero
            ? run_train_hetero(prep, single, keep ? &het_params : nullptr)
            : run_train_homo(data.homo, data.homo_s, single, keep ? &homo_params : nullptr);
    if (keep) {
      save_params(params_path,
                  data.hetero ? param_entries(std::as_const(het_params))
                              : param_entries(std::as_const(homo_params)));
    }
    if (!out_path.empty()) {
      write_run_files(out_path, log);
      print_run_line(log);
    } else {
      std::cout << run_log_to_json(log) << "\n";
    }
    return 0;
  }

  if (!params_path.empty()) throw ConfigError("--save-params needs a single seed");
  const std::vector<RunLog> logs =
      data.hetero ? run_seeds_hetero(prep, cfg, seeds, parallel)
                  : run_seeds_homo(data.homo, data.homo_s, cfg, seeds, parallel);
  const SeedSummary summary = aggregate(logs);
  if (!out_path.empty()) {
    std::filesystem::create_directories(out_path);
    const std::filesystem::path dir = out_path;
    for (const RunLog& log : logs) {
      write_run_files(dir / ("run_seed" + std::to_string(log.config.seed) + ".json"), log);
    }
    write_text(dir / "summary.json", summary_to_json(summary, cfg) + "\n");
  }
  for (const RunLog& log : logs) print_run_line(log);
  std::cout << summary_table(summary);
  return 0;
}

int cmd_eval(const ConfigFlags& flags, const std::string& params_path,
             const std::string& out_path) {
  if (params_path.empty()) throw ConfigError("--params is required");
  const ConfigOverlay o = flags.overlay();
  const LoadedData data = load_dataset(o);
  const TrainConfig cfg = resolve_config(o, data.hetero, data.name);

  DenseMatrix probs;
  const std::vector<index_t>* labels;
  const std::vector<index_t>*train_mask, *val_mask, *test_mask;
  if (data.hetero) {
    RandomStream stream(cfg.seed);
    HeteroParams p = init_hetero_params(data.het, cfg.d0, cfg.d1, static_cast<int>(cfg.channels),
                                        cfg.variant, cfg.decoder_layers, stream);
    load_params(params_path, param_entries(p));
    const PreparedHetero prep = prepare_hetero(data.het, cfg.variant);
    probs = hetero_predict(prep, p);
    labels = &data.het.labels;
    train_mask = &data.het.train_mask;
    val_mask = &data.het.val_mask;
    test_mask = &data.het.test_mask;
  } else {
    RandomStream stream(cfg.seed);
    HomoParams p = init_homo_params(data.homo.d, cfg.d1, data.homo.f, data.homo.n,
                                    cfg.decoder_layers, stream);
    load_params(params_path, param_entries(p));
    probs = homo_predict(data.homo, data.homo_s, p);
    labels = &data.homo.labels;
    train_mask = &data.homo.train_mask;
    val_mask = &data.homo.val_mask;
    test_mask = &data.homo.test_mask;
  }

  auto block = [&](const std::vector<index_t>& mask) {
    const EvalMetrics m = evaluate_predictions(probs, *labels, mask);
    char buf[96];
    std::snprintf(buf, sizeof buf, "{\"acc\": %.17g, \"macro_f1\": %.17g}", m.accuracy,
                  m.macro_f1);
    return std::string(buf);
  };
  const std::string text = "{\n  \"train\": " + block(*train_mask) +
                           ",\n  \"val\": " + block(*val_mask) +
                           ",\n  \"test\": " + block(*test_mask) + "\n}\n";
  if (!out_path.empty()) {
    write_text(out_path, text);
  }
  std::cout << text;
  return 0;
}

int cmd_gradcheck(const std::string& model, const std::string& variant, long long layers,
                  bool layers_set, const std::string& corrupt) {
  GradCheckOptions opt;
  if (!model.empty()) {
    if (model != "homo" && model != "hetero") throw ConfigError("model must be 'homo' or 'hetero'");
    opt.hetero = model == "hetero";
  }
  if (!variant.empty()) {
    if (opt.hetero && !*opt.hetero) {
      throw ConfigError("variant only applies to the heterogeneous model");
    }
    opt.variant = variant_from_string(variant);
  }
  if (layers_set) {
    if (layers != 1 && layers != 2) throw ConfigError("decoder_layers must be 1 or 2");
    opt.decoder_layers = static_cast<int>(layers);
  }
  opt.corrupt_param = corrupt;

  const std::vector<GradCheckEntry> entries = run_gradcheck(opt);
  std::size_t failures = 0;
  for (const GradCheckEntry& e : entries) {
    std::printf("%-16s %-10s max_rel_err %.3e  %s\n", e.model_case.c_str(), e.param.c_str(),
                e.rel_err, e.pass ? "PASS" : "FAIL");
    if (!e.pass) ++failures;
  }
  std::printf("gradcheck: %zu checks, %zu failures\n", entries.size(), failures);
  return failures == 0 ? 0 : 1;
}

int cmd_aggregate(const std::vector<std::string>& files, const std::string& out_path) {
  std::vector<RunLog> logs;
  for (const std::string& f : files) {
    std::ifstream in(f);
    if (!in) throw DataError("cannot open run log: " + f);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    logs.push_back(run_log_from_json(text));
  }
  const SeedSummary summary = aggregate(logs);
  const std::string json = summary_to_json(summary, logs[0].config) + "\n";
  if (!out_path.empty()) write_text(out_path, json);
  std::cout << summary_table(summary) << json;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"autoencoder-constrained graph convolutional network harness"};
  app.require_subcommand(1);

  CLI::App* train = app.add_subcommand("train", "train a model and write run logs");
  ConfigFlags train_flags;
  train_flags.attach(train, true);
  std::string train_out, train_params;
  int train_parallel = 1;
  train->add_option("--out", train_out, "run-log path (single seed) or directory (multi-seed)");
  train->add_option("--save-params", train_params, "write trained parameters (single seed only)");
  train->add_option("--parallel", train_parallel, "concurrent seeds for multi-seed sweeps")
      ->check(CLI::PositiveNumber);

  CLI::App* eval = app.add_subcommand("eval", "evaluate saved parameters on a dataset");
  ConfigFlags eval_flags;
  eval_flags.attach(eval, false);
  std::string eval_params, eval_out;
  eval->add_option("--params", eval_params, "parameter file from train --save-params");
  eval->add_option("--out", eval_out, "also write the metrics JSON here");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  std::string gc_model, gc_variant, gc_corrupt;
  long long gc_layers = 1;
  gradcheck->add_option("--model", gc_model, "restrict to homo|hetero");
  gradcheck->add_option("--variant", gc_variant, "restrict to one reconstruction target");
  CLI::Option* gc_layers_opt =
      gradcheck->add_option("--decoder-layers", gc_layers, "restrict to a decoder depth");
  gradcheck->add_option("--corrupt", gc_corrupt,
                        "self-test hook: scale this parameter's gradient by 1.01");

  CLI::App* agg = app.add_subcommand("aggregate", "summarize run logs from files");
  std::vector<std::string> agg_files;
  std::string agg_out;
  agg->add_option("logs", agg_files, "run-log JSON files")->required();
  agg->add_option("--out", agg_out, "also write the summary JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) return cmd_train(train_flags, train_out, train_params, train_parallel);
    if (eval->parsed()) return cmd_eval(eval_flags, eval_params, eval_out);
    if (gradcheck->parsed()) {
      return cmd_gradcheck(gc_model, gc_variant, gc_layers, gc_layers_opt->count() > 0,
                           gc_corrupt);
    }
    if (agg->parsed()) return cmd_aggregate(agg_files, agg_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
