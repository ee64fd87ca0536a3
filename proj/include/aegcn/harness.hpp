#pragma once
// Experiment orchestration: config resolution with per-dataset defaults,
// the seeded training loop, multi-seed sweeps, aggregation, gradient
// checking, and run-log / parameter serialization.
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "aegcn/data.hpp"
#include "aegcn/model_hetero.hpp"
#include "aegcn/model_homo.hpp"

namespace aegcn {

// Fully resolved run settings. Build one through resolve_config so the
// per-dataset defaults and cross-field rules are applied uniformly.
struct TrainConfig {
  std::string dataset_dir;
  std::string dataset_name;
  bool hetero = false;
  VariantKind variant = VariantKind::FeatureTarget;  // hetero only
  double gamma = 10.0;
  double lr = 0.01;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  int epochs = 200;
  int decoder_layers = 1;
  index_t d0 = 128;     // hetero only
  index_t d1 = 18;
  index_t channels = 2;  // hetero only
  std::uint64_t seed = 1;
  bool best_val = false;  // eval_selection: final (default) vs best_val
};

// Partial settings from a JSON file or CLI flags; unset fields fall through
// to the next layer (flags over file over defaults).
struct ConfigOverlay {
  std::optional<std::string> dataset;
  std::optional<std::string> model;    // "homo" | "hetero"
  std::optional<std::string> variant;  // "x" | "h" | "a" | "s"
  std::optional<double> gamma, lr, weight_decay, dropout;
  std::optional<int> epochs, decoder_layers;
  std::optional<index_t> d0, d1, channels;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> eval_selection;  // "final" | "best_val"
  std::vector<std::uint64_t> seeds;           // multi-seed sweep list

  // Strict parse: an unknown key raises ConfigError.
  static ConfigOverlay from_json_file(const std::filesystem::path& path);
  // Fields set in the stronger overlay win.
  void merge_from(const ConfigOverlay& stronger);
};

// Applies defaults (homo: d1 18, lr 0.01, dropout 0.5, wd 5e-4, 200 epochs,
// gamma 10 except pubmed 0.001; hetero: d0 128, d1 64, 2 channels, lr 0.005,
// wd 0.001, gamma 1, no dropout, 40 epochs except imdb 20) and validates.
// Heterogeneous-only fields set for a homogeneous run, or dropout > 0 on the
// heterogeneous model, raise ConfigError.
TrainConfig resolve_config(const ConfigOverlay& o, bool hetero, const std::string& dataset_name);

struct EpochRecord {
  int epoch = 0;
  double class_loss = 0.0, recon_loss = 0.0, total_loss = 0.0;
  double train_acc = 0.0, train_macro_f1 = 0.0;
  double val_acc = 0.0, val_macro_f1 = 0.0;
};

// Losses in a record come from the training forward pass entering that
// epoch; the metrics evaluate the updated parameters through the clean
// inference path. selected_epoch is 0 only for epochs = 0 runs.
struct RunLog {
  TrainConfig config;
  std::vector<EpochRecord> epochs;
  int selected_epoch = 0;
  double final_val_acc = 0.0, final_val_macro_f1 = 0.0;
  double final_test_acc = 0.0, final_test_macro_f1 = 0.0;
  double wall_seconds = 0.0;
};

// include_wall = false yields the canonical form used for determinism
// comparison: everything but the wall clock.
std::string run_log_to_json(const RunLog& log, bool include_wall = true);
RunLog run_log_from_json(const std::string& text);
void write_epoch_csv(std::ostream& os, const RunLog& log);
bool same_config_modulo_seed(const TrainConfig& a, const TrainConfig& b);

// Training entry points. The graph-level overloads reuse a precomputed
// operator so seed sweeps share it; trained receives the end-of-training
// parameters when non-null.
RunLog run_train_homo(const HomoGraph& g, const SparseMatrix& s, const TrainConfig& cfg,
                      HomoParams* trained = nullptr);
RunLog run_train_hetero(const PreparedHetero& prep, const TrainConfig& cfg,
                        HeteroParams* trained = nullptr);
// Loads the dataset named by cfg.dataset_dir first.
RunLog run_train_dataset(const TrainConfig& cfg);

// One run per seed, sharing the loaded dataset; parallel > 1 runs that many
// whole seeds concurrently as isolated units. Results keep seed order.
std::vector<RunLog> run_seeds(const TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                              int parallel);
std::vector<RunLog> run_seeds_homo(const HomoGraph& g, const SparseMatrix& s,
                                   const TrainConfig& base,
                                   const std::vector<std::uint64_t>& seeds, int parallel);
std::vector<RunLog> run_seeds_hetero(const PreparedHetero& prep, const TrainConfig& base,
                                     const std::vector<std::uint64_t>& seeds, int parallel);

struct SeedSummary {
  std::size_t runs = 0;
  double acc_mean = 0.0, acc_std = 0.0;
  double f1_mean = 0.0, f1_std = 0.0;
};

// Mean and sample standard deviation (n - 1; zero for a single run) of the
// final test metrics. Logs from differing configs (modulo seed) raise
// ArgumentError.
SeedSummary aggregate(const std::vector<RunLog>& logs);
std::string summary_to_json(const SeedSummary& s, const TrainConfig& config_echo);
std::string summary_table(const SeedSummary& s);

// Finite-difference verification of every parameter gradient on toy
// instances. Cases: homogeneous at both decoder depths and the four
// heterogeneous variants; the optional filters narrow the list. A non-empty
// corrupt_param scales that parameter's analytic gradient by corrupt_scale
// first, so the detector itself can be exercised.
struct GradCheckOptions {
  double tolerance = 1e-4;
  std::optional<bool> hetero;
  std::optional<VariantKind> variant;
  std::optional<int> decoder_layers;
  std::string corrupt_param;
  double corrupt_scale = 1.01;
};

struct GradCheckEntry {
  std::string model_case;
  std::string param;
  double rel_err = 0.0;
  bool pass = false;
};

std::vector<GradCheckEntry> run_gradcheck(const GradCheckOptions& opt);

// Parameter snapshots: named matrices in a little-endian container.
void save_params(const std::filesystem::path& path,
                 const std::vector<std::pair<std::string, const DenseMatrix*>>& entries);
// Every stored entry must match a given name and shape exactly, one to one.
void load_params(const std::filesystem::path& path,
                 const std::vector<std::pair<std::string, DenseMatrix*>>& entries);
std::vector<std::pair<std::string, const DenseMatrix*>> param_entries(const HomoParams& p);
std::vector<std::pair<std::string, DenseMatrix*>> param_entries(HomoParams& p);
std::vector<std::pair<std::string, const DenseMatrix*>> param_entries(const HeteroParams& p);
std::vector<std::pair<std::string, DenseMatrix*>> param_entries(HeteroParams& p);

}  // namespace aegcn
