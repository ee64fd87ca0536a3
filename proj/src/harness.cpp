// Config resolution, run-log and parameter serialization, aggregation.
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "aegcn/errors.hpp"
#include "aegcn/harness.hpp"
#include "json.hpp"

namespace aegcn {
namespace {

using nlohmann::json;

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

void config_fail(const std::string& what) { throw ConfigError(what); }

template <typename T>
std::optional<T> take_number(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  if (!j.at(key).is_number()) config_fail(std::string("config key '") + key + "' must be a number");
  return j.at(key).get<T>();
}

std::optional<std::string> take_string(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  if (!j.at(key).is_string()) config_fail(std::string("config key '") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

json config_to_json(const TrainConfig& c) {
  json j;
  j["dataset"] = c.dataset_dir;
  j["dataset_name"] = c.dataset_name;
  j["model"] = c.hetero ? "hetero" : "homo";
  j["gamma"] = c.gamma;
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["dropout"] = c.dropout;
  j["epochs"] = c.epochs;
  j["d1"] = c.d1;
  j["decoder_layers"] = c.decoder_layers;
  j["seed"] = c.seed;
  j["eval_selection"] = c.best_val ? "best_val" : "final";
  if (c.hetero) {
    j["variant"] = variant_to_string(c.variant);
    j["d0"] = c.d0;
    j["channels"] = c.channels;
  }
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.dataset_dir = j.at("dataset").get<std::string>();
  c.dataset_name = j.at("dataset_name").get<std::string>();
  c.hetero = j.at("model").get<std::string>() == "hetero";
  c.gamma = j.at("gamma").get<double>();
  c.lr = j.at("lr").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.d1 = j.at("d1").get<index_t>();
  c.decoder_layers = j.at("decoder_layers").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.best_val = j.at("eval_selection").get<std::string>() == "best_val";
  if (c.hetero) {
    c.variant = variant_from_string(j.at("variant").get<std::string>());
    c.d0 = j.at("d0").get<index_t>();
    c.channels = j.at("channels").get<index_t>();
  }
  return c;
}

}  // namespace

ConfigOverlay ConfigOverlay::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_fail("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    config_fail("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) config_fail("config file must hold a JSON object");

  static const char* known[] = {"dataset",        "model",   "variant", "gamma",
                                "lr",             "weight_decay", "dropout", "epochs",
                                "decoder_layers", "d0",      "d1",      "channels",
                                "seed",           "eval_selection", "seeds"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char* k) { return key == k; }) == std::end(known)) {
      config_fail("unknown config key '" + key + "'");
    }
  }

  ConfigOverlay o;
  o.dataset = take_string(j, "dataset");
  o.model = take_string(j, "model");
  o.variant = take_string(j, "variant");
  o.gamma = take_number<double>(j, "gamma");
  o.lr = take_number<double>(j, "lr");
  o.weight_decay = take_number<double>(j, "weight_decay");
  o.dropout = take_number<double>(j, "dropout");
  o.epochs = take_number<int>(j, "epochs");
  o.decoder_layers = take_number<int>(j, "decoder_layers");
  o.d0 = take_number<index_t>(j, "d0");
  o.d1 = take_number<index_t>(j, "d1");
  o.channels = take_number<index_t>(j, "channels");
  o.seed = take_number<std::uint64_t>(j, "seed");
  o.eval_selection = take_string(j, "eval_selection");
  if (j.contains("seeds")) {
    if (!j.at("seeds").is_array()) config_fail("config key 'seeds' must be an array");
    for (const auto& s : j.at("seeds")) {
      if (!s.is_number()) config_fail("config key 'seeds' must hold numbers");
      o.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  return o;
}

void ConfigOverlay::merge_from(const ConfigOverlay& s) {
  if (s.dataset) dataset = s.dataset;
  if (s.model) model = s.model;
  if (s.variant) variant = s.variant;
  if (s.gamma) gamma = s.gamma;
  if (s.lr) lr = s.lr;
  if (s.weight_decay) weight_decay = s.weight_decay;
  if (s.dropout) dropout = s.dropout;
  if (s.epochs) epochs = s.epochs;
  if (s.decoder_layers) decoder_layers = s.decoder_layers;
  if (s.d0) d0 = s.d0;
  if (s.d1) d1 = s.d1;
  if (s.channels) channels = s.channels;
  if (s.seed) seed = s.seed;
  if (s.eval_selection) eval_selection = s.eval_selection;
  if (!s.seeds.empty()) seeds = s.seeds;
}

TrainConfig resolve_config(const ConfigOverlay& o, bool hetero, const std::string& dataset_name) {
  TrainConfig c;
  c.dataset_dir = o.dataset.value_or("");
  c.dataset_name = lower(dataset_name);
  c.hetero = hetero;

  if (o.model) {
    const std::string m = *o.model;
    if (m != "homo" && m != "hetero") config_fail("model must be 'homo' or 'hetero'");
    if ((m == "hetero") != hetero) {
      config_fail("model '" + m + "' does not match the dataset kind");
    }
  }

  if (hetero) {
    if (o.dropout && *o.dropout != 0.0) {
      config_fail("the heterogeneous model does not use dropout");
    }
    c.dropout = 0.0;
    c.variant = o.variant ? variant_from_string(*o.variant) : VariantKind::FeatureTarget;
    c.gamma = o.gamma.value_or(1.0);
    c.lr = o.lr.value_or(0.005);
    c.weight_decay = o.weight_decay.value_or(0.001);
    c.epochs = o.epochs.value_or(c.dataset_name == "imdb" ? 20 : 40);
    c.d0 = o.d0.value_or(128);
    c.d1 = o.d1.value_or(64);
    c.channels = o.channels.value_or(2);
    if (c.d0 < 1 || c.channels < 1 || c.d0 % c.channels != 0) {
      config_fail("d0 must be a positive multiple of the channel count");
    }
  } else {
    if (o.variant) config_fail("variant only applies to the heterogeneous model");
    if (o.d0) config_fail("d0 only applies to the heterogeneous model");
    if (o.channels) config_fail("channels only applies to the heterogeneous model");
    c.dropout = o.dropout.value_or(0.5);
    if (c.dropout < 0.0 || c.dropout >= 1.0) config_fail("dropout must lie in [0, 1)");
    c.gamma = o.gamma.value_or(c.dataset_name == "pubmed" ? 0.001 : 10.0);
    c.lr = o.lr.value_or(0.01);
    c.weight_decay = o.weight_decay.value_or(5e-4);
    c.epochs = o.epochs.value_or(200);
    c.d1 = o.d1.value_or(18);
  }

  if (!(c.gamma >= 0.0) || !std::isfinite(c.gamma)) config_fail("gamma must be a finite value >= 0");
  if (!(c.lr > 0.0) || !std::isfinite(c.lr)) config_fail("lr must be positive");
  if (!(c.weight_decay >= 0.0) || !std::isfinite(c.weight_decay)) {
    config_fail("weight_decay must be >= 0");
  }
  if (c.epochs < 0) config_fail("epochs must be >= 0");
  if (c.d1 < 1) config_fail("d1 must be positive");
  c.decoder_layers = o.decoder_layers.value_or(1);
  if (c.decoder_layers != 1 && c.decoder_layers != 2) config_fail("decoder_layers must be 1 or 2");
  c.seed = o.seed.value_or(1);
  if (o.eval_selection) {
    if (*o.eval_selection == "final") {
      c.best_val = false;
    } else if (*o.eval_selection == "best_val") {
      c.best_val = true;
    } else {
      config_fail("eval_selection must be 'final' or 'best_val'");
    }
  }
  return c;
}

std::string run_log_to_json(const RunLog& log, bool include_wall) {
  json j;
  j["config"] = config_to_json(log.config);
  json eps = json::array();
  for (const EpochRecord& r : log.epochs) {
    eps.push_back({{"epoch", r.epoch},
                   {"class_loss", r.class_loss},
                   {"recon_loss", r.recon_loss},
                   {"total_loss", r.total_loss},
                   {"train_acc", r.train_acc},
                   {"train_macro_f1", r.train_macro_f1},
                   {"val_acc", r.val_acc},
                   {"val_macro_f1", r.val_macro_f1}});
  }
  j["epochs"] = std::move(eps);
  j["selected_epoch"] = log.selected_epoch;
  j["final"] = {{"val_acc", log.final_val_acc},
                {"val_macro_f1", log.final_val_macro_f1},
                {"test_acc", log.final_test_acc},
                {"test_macro_f1", log.final_test_macro_f1}};
  if (include_wall) j["wall_seconds"] = log.wall_seconds;
  return j.dump(2);
}

RunLog run_log_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("run log is not valid JSON: ") + e.what());
  }
  RunLog log;
  try {
    log.config = config_from_json(j.at("config"));
    for (const auto& r : j.at("epochs")) {
      EpochRecord e;
      e.epoch = r.at("epoch").get<int>();
      e.class_loss = r.at("class_loss").get<double>();
      e.recon_loss = r.at("recon_loss").get<double>();
      e.total_loss = r.at("total_loss").get<double>();
      e.train_acc = r.at("train_acc").get<double>();
      e.train_macro_f1 = r.at("train_macro_f1").get<double>();
      e.val_acc = r.at("val_acc").get<double>();
      e.val_macro_f1 = r.at("val_macro_f1").get<double>();
      log.epochs.push_back(e);
    }
    log.selected_epoch = j.at("selected_epoch").get<int>();
    const json& fin = j.at("final");
    log.final_val_acc = fin.at("val_acc").get<double>();
    log.final_val_macro_f1 = fin.at("val_macro_f1").get<double>();
    log.final_test_acc = fin.at("test_acc").get<double>();
    log.final_test_macro_f1 = fin.at("test_macro_f1").get<double>();
    if (j.contains("wall_seconds")) log.wall_seconds = j.at("wall_seconds").get<double>();
  } catch (const json::exception& e) {
    throw DataError(std::string("run log is missing fields: ") + e.what());
  }
  return log;
}

void write_epoch_csv(std::ostream& os, const RunLog& log) {
  os << "epoch,class_loss,recon_loss,total_loss,train_acc,train_macro_f1,val_acc,val_macro_f1\n";
  char buf[64];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
    os << buf;
  };
  for (const EpochRecord& r : log.epochs) {
    os << r.epoch << ',';
    put(r.class_loss, ',');
    put(r.recon_loss, ',');
    put(r.total_loss, ',');
    put(r.train_acc, ',');
    put(r.train_macro_f1, ',');
    put(r.val_acc, ',');
    put(r.val_macro_f1, '\n');
  }
}

bool same_config_modulo_seed(const TrainConfig& a, const TrainConfig& b) {
  json ja = config_to_json(a);
  json jb = config_to_json(b);
  ja.erase("seed");
  jb.erase("seed");
  return ja == jb;
}

SeedSummary aggregate(const std::vector<RunLog>& logs) {
  if (logs.empty()) throw ArgumentError("nothing to aggregate");
  for (std::size_t i = 1; i < logs.size(); ++i) {
    if (!same_config_modulo_seed(logs[0].config, logs[i].config)) {
      throw ArgumentError("run logs come from differing configs");
    }
  }
  SeedSummary s;
  s.runs = logs.size();
  const auto n = static_cast<double>(logs.size());
  for (const RunLog& log : logs) {
    s.acc_mean += log.final_test_acc;
    s.f1_mean += log.final_test_macro_f1;
  }
  s.acc_mean /= n;
  s.f1_mean /= n;
  if (logs.size() > 1) {
    double va = 0.0, vf = 0.0;
    for (const RunLog& log : logs) {
      va += (log.final_test_acc - s.acc_mean) * (log.final_test_acc - s.acc_mean);
      vf += (log.final_test_macro_f1 - s.f1_mean) * (log.final_test_macro_f1 - s.f1_mean);
    }
    s.acc_std = std::sqrt(va / (n - 1.0));
    s.f1_std = std::sqrt(vf / (n - 1.0));
  }
  return s;
}

std::string summary_to_json(const SeedSummary& s, const TrainConfig& config_echo) {
  json j;
  j["runs"] = s.runs;
  j["test_acc"] = {{"mean", s.acc_mean}, {"std", s.acc_std}};
  j["test_macro_f1"] = {{"mean", s.f1_mean}, {"std", s.f1_std}};
  j["config"] = config_to_json(config_echo);
  return j.dump(2);
}

std::string summary_table(const SeedSummary& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "runs  test_acc (mean +/- std)  test_macro_f1 (mean +/- std)\n"
                "%4zu  %.4f +/- %.4f        %.4f +/- %.4f\n",
                s.runs, s.acc_mean, s.acc_std, s.f1_mean, s.f1_std);
  return buf;
}

namespace {

void data_fail(const std::string& what) { throw DataError(what); }

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) data_fail("truncated parameter file: " + path);
  return v;
}

constexpr char kParamMagic[4] = {'A', 'E', 'G', 'P'};

}  // namespace

void save_params(const std::filesystem::path& path,
                 const std::vector<std::pair<std::string, const DenseMatrix*>>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) data_fail("cannot open parameter file for writing: " + path.string());
  out.write(kParamMagic, 4);
  write_raw(out, static_cast<std::uint32_t>(1));
  write_raw(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, m] : entries) {
    write_raw(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_raw(out, static_cast<std::int64_t>(m->rows));
    write_raw(out, static_cast<std::int64_t>(m->cols));
    out.write(reinterpret_cast<const char*>(m->v.data()),
              static_cast<std::streamsize>(m->v.size() * sizeof(double)));
  }
  if (!out) data_fail("write failed for parameter file: " + path.string());
}

void load_params(const std::filesystem::path& path,
                 const std::vector<std::pair<std::string, DenseMatrix*>>& entries) {
  std::ifstream in(path, std::ios::binary);
  if (!in) data_fail("cannot open parameter file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kParamMagic, 4) != 0) {
    data_fail("not a parameter file: " + path.string());
  }
  const auto version = read_raw<std::uint32_t>(in, path.string());
  if (version != 1) data_fail("unsupported parameter file version");
  const auto count = read_raw<std::uint32_t>(in, path.string());
  if (count != entries.size()) {
    data_fail("parameter file holds " + std::to_string(count) + " entries, expected " +
              std::to_string(entries.size()));
  }
  std::vector<bool> seen(entries.size(), false);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_raw<std::uint32_t>(in, path.string());
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rows = read_raw<std::int64_t>(in, path.string());
    const auto cols = read_raw<std::int64_t>(in, path.string());
    if (!in) data_fail("truncated parameter file: " + path.string());
    std::size_t slot = entries.size();
    for (std::size_t e = 0; e < entries.size(); ++e) {
      if (entries[e].first == name) {
        slot = e;
        break;
      }
    }
    if (slot == entries.size()) data_fail("unexpected parameter '" + name + "'");
    if (seen[slot]) data_fail("duplicate parameter '" + name + "'");
    seen[slot] = true;
    DenseMatrix* m = entries[slot].second;
    if (rows != m->rows || cols != m->cols) {
      data_fail("parameter '" + name + "' has shape " + std::to_string(rows) + "x" +
                std::to_string(cols) + ", expected " + std::to_string(m->rows) + "x" +
                std::to_string(m->cols));
    }
    in.read(reinterpret_cast<char*>(m->v.data()),
            static_cast<std::streamsize>(m->v.size() * sizeof(double)));
    if (!in) data_fail("truncated parameter file: " + path.string());
  }
  in.peek();
  if (!in.eof()) data_fail("trailing bytes in parameter file: " + path.string());
}

std::vector<std::pair<std::string, const DenseMatrix*>> param_entries(const HomoParams& p) {
  std::vector<std::pair<std::string, const DenseMatrix*>> e{{"w0", &p.w0}, {"w1", &p.w1}};
  for (std::size_t i = 0; i < p.wa.size(); ++i) {
    e.emplace_back("wa" + std::to_string(i + 1), &p.wa[i]);
  }
  return e;
}

std::vector<std::pair<std::string, DenseMatrix*>> param_entries(HomoParams& p) {
  std::vector<std::pair<std::string, DenseMatrix*>> e{{"w0", &p.w0}, {"w1", &p.w1}};
  for (std::size_t i = 0; i < p.wa.size(); ++i) {
    e.emplace_back("wa" + std::to_string(i + 1), &p.wa[i]);
  }
  return e;
}

std::vector<std::pair<std::string, const DenseMatrix*>> param_entries(const HeteroParams& p) {
  std::vector<std::pair<std::string, const DenseMatrix*>> e;
  for (std::size_t i = 0; i < p.channel_w1.size(); ++i) {
    const std::string tag = std::to_string(i + 1);
    e.emplace_back("cw1_" + tag, &p.channel_w1[i]);
    e.emplace_back("cw2_" + tag, &p.channel_w2[i]);
  }
  e.emplace_back("waggre", &p.waggre);
  e.emplace_back("w0", &p.w0);
  e.emplace_back("w1", &p.w1);
  e.emplace_back("b", &p.b);
  for (std::size_t i = 0; i < p.wa.size(); ++i) {
    e.emplace_back("wa" + std::to_string(i + 1), &p.wa[i]);
  }
  return e;
}

std::vector<std::pair<std::string, DenseMatrix*>> param_entries(HeteroParams& p) {
  std::vector<std::pair<std::string, DenseMatrix*>> e;
  for (std::size_t i = 0; i < p.channel_w1.size(); ++i) {
    const std::string tag = std::to_string(i + 1);
    e.emplace_back("cw1_" + tag, &p.channel_w1[i]);
    e.emplace_back("cw2_" + tag, &p.channel_w2[i]);
  }
  e.emplace_back("waggre", &p.waggre);
  e.emplace_back("w0", &p.w0);
  e.emplace_back("w1", &p.w1);
  e.emplace_back("b", &p.b);
  for (std::size_t i = 0; i < p.wa.size(); ++i) {
    e.emplace_back("wa" + std::to_string(i + 1), &p.wa[i]);
  }
  return e;
}

}  // namespace aegcn
