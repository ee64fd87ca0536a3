#include "aegcn/data.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace aegcn {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

[[noreturn]] void fail(const fs::path& file, const std::string& what) {
  throw DataError(file.string() + ": " + what);
}

[[noreturn]] void fail(const fs::path& file, std::size_t line, const std::string& what) {
  throw DataError(file.string() + ":" + std::to_string(line) + ": " + what);
}

json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) fail(file, "cannot open");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    fail(file, std::string("invalid JSON: ") + e.what());
  }
  return j;
}

index_t get_count(const json& j, const fs::path& file, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer())
    fail(file, std::string("missing or non-integer field \"") + key + "\"");
  const index_t v = j[key].get<index_t>();
  if (v <= 0) fail(file, std::string("field \"") + key + "\" must be positive");
  return v;
}

// Parses "a<TAB>b" with both fields decimal integers; returns line count.
template <typename OnPair>
void read_pair_file(const fs::path& file, OnPair on_pair) {
  std::ifstream in(file);
  if (!in) fail(file, "cannot open");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) fail(file, lineno, "expected two tab-separated fields");
    index_t a = 0, b = 0;
    try {
      std::size_t used_a = 0, used_b = 0;
      a = std::stoll(line.substr(0, tab), &used_a);
      const std::string rest = line.substr(tab + 1);
      b = std::stoll(rest, &used_b);
      if (used_a != tab || used_b != rest.size())
        fail(file, lineno, "trailing characters after integer field");
    } catch (const DataError&) {
      throw;
    } catch (const std::exception&) {
      fail(file, lineno, "fields must be decimal integers");
    }
    on_pair(lineno, a, b);
  }
}

SparseMatrix read_homo_edges(const fs::path& file, index_t n) {
  std::vector<Triplet> triplets;
  read_pair_file(file, [&](std::size_t lineno, index_t src, index_t dst) {
    if (src < 0 || src >= n || dst < 0 || dst >= n)
      fail(file, lineno, "node id out of range [0, " + std::to_string(n) + ")");
    if (src == dst) fail(file, lineno, "self loop on node " + std::to_string(src));
    triplets.push_back({src, dst, 1.0});
    triplets.push_back({dst, src, 1.0});
  });
  SparseMatrix adj = csr_from_triplets(n, n, std::move(triplets));
  // Duplicate lines (or both orientations of one edge) collapse to weight 1.
  for (double& v : adj.values) v = 1.0;
  return adj;
}

SparseMatrix read_directed_edges(const fs::path& file, index_t n) {
  std::vector<Triplet> triplets;
  read_pair_file(file, [&](std::size_t lineno, index_t src, index_t dst) {
    if (src < 0 || src >= n || dst < 0 || dst >= n)
      fail(file, lineno, "node id out of range [0, " + std::to_string(n) + ")");
    triplets.push_back({src, dst, 1.0});
  });
  SparseMatrix adj = csr_from_triplets(n, n, std::move(triplets));
  for (double& v : adj.values) v = 1.0;
  return adj;
}

constexpr char kFeatureMagic[4] = {'F', 'C', 'S', 'R'};

template <typename T>
void read_exact(std::ifstream& in, const fs::path& file, T* out, std::size_t count) {
  in.read(reinterpret_cast<char*>(out), static_cast<std::streamsize>(count * sizeof(T)));
  if (in.gcount() != static_cast<std::streamsize>(count * sizeof(T)))
    fail(file, "truncated feature file");
}

DenseMatrix read_features(const fs::path& file, index_t n, index_t d) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(file, "cannot open");
  char magic[4];
  read_exact(in, file, magic, 4);
  if (std::memcmp(magic, kFeatureMagic, 4) != 0) fail(file, "bad magic, expected FCSR");
  std::uint64_t header[3];
  read_exact(in, file, header, 3);
  if (header[0] != static_cast<std::uint64_t>(n) || header[1] != static_cast<std::uint64_t>(d))
    fail(file, "feature shape " + std::to_string(header[0]) + "x" + std::to_string(header[1]) +
                   " disagrees with meta.json " + std::to_string(n) + "x" + std::to_string(d));
  const std::uint64_t nnz = header[2];
  std::vector<std::uint64_t> row_ptr(static_cast<std::size_t>(n) + 1);
  read_exact(in, file, row_ptr.data(), row_ptr.size());
  std::vector<std::uint64_t> col_idx(nnz);
  read_exact(in, file, col_idx.data(), nnz);
  std::vector<double> values(nnz);
  read_exact(in, file, values.data(), nnz);
  in.peek();
  if (!in.eof()) fail(file, "trailing bytes after feature payload");

  SparseMatrix sp(n, d);
  sp.row_ptr.assign(row_ptr.begin(), row_ptr.end());
  sp.col_idx.assign(col_idx.begin(), col_idx.end());
  sp.values = std::move(values);
  try {
    validate_csr(sp);
  } catch (const Error& e) {
    fail(file, e.what());
  }
  return to_dense(sp);
}

void write_features(const fs::path& file, const DenseMatrix& x) {
  SparseMatrix sp(x.rows, x.cols);
  for (index_t i = 0; i < x.rows; ++i) {
    for (index_t j = 0; j < x.cols; ++j) {
      if (x(i, j) != 0.0) {
        sp.col_idx.push_back(j);
        sp.values.push_back(x(i, j));
      }
    }
    sp.row_ptr[i + 1] = sp.nnz();
  }
  std::ofstream out(file, std::ios::binary);
  if (!out) fail(file, "cannot open for writing");
  out.write(kFeatureMagic, 4);
  const std::uint64_t header[3] = {static_cast<std::uint64_t>(x.rows),
                                   static_cast<std::uint64_t>(x.cols),
                                   static_cast<std::uint64_t>(sp.nnz())};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  std::vector<std::uint64_t> u64buf(sp.row_ptr.begin(), sp.row_ptr.end());
  out.write(reinterpret_cast<const char*>(u64buf.data()),
            static_cast<std::streamsize>(u64buf.size() * 8));
  u64buf.assign(sp.col_idx.begin(), sp.col_idx.end());
  out.write(reinterpret_cast<const char*>(u64buf.data()),
            static_cast<std::streamsize>(u64buf.size() * 8));
  out.write(reinterpret_cast<const char*>(sp.values.data()),
            static_cast<std::streamsize>(sp.values.size() * 8));
  if (!out) fail(file, "write failed");
}

std::vector<index_t> read_labels(const fs::path& file, index_t n, index_t f,
                                 bool allow_unlabeled) {
  std::vector<index_t> labels(static_cast<std::size_t>(n), -1);
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
  read_pair_file(file, [&](std::size_t lineno, index_t node, index_t cls) {
    if (node < 0 || node >= n)
      fail(file, lineno, "node id out of range [0, " + std::to_string(n) + ")");
    if (seen[node]) fail(file, lineno, "node " + std::to_string(node) + " labeled twice");
    seen[node] = 1;
    if (cls == -1 && allow_unlabeled) return;  // explicit unlabeled marker
    if (cls < 0 || cls >= f)
      fail(file, lineno, "class " + std::to_string(cls) + " outside [0, " + std::to_string(f) + ")");
    labels[node] = cls;
  });
  if (!allow_unlabeled) {
    for (index_t i = 0; i < n; ++i)
      if (labels[i] < 0)
        fail(file, "node " + std::to_string(i) + " is unlabeled; homogeneous datasets must label every node");
  }
  return labels;
}

std::vector<index_t> read_mask(const json& j, const fs::path& file, const char* key, index_t n) {
  if (!j.contains(key) || !j[key].is_array())
    fail(file, std::string("missing or non-array field \"") + key + "\"");
  std::vector<index_t> mask;
  mask.reserve(j[key].size());
  for (const auto& e : j[key]) {
    if (!e.is_number_integer()) fail(file, std::string("non-integer entry in \"") + key + "\"");
    const index_t id = e.get<index_t>();
    if (id < 0 || id >= n)
      fail(file, std::string("\"") + key + "\" index " + std::to_string(id) + " out of range");
    mask.push_back(id);
  }
  if (mask.empty()) fail(file, std::string("split \"") + key + "\" is empty");
  return mask;
}

void check_disjoint(const fs::path& file, const std::vector<index_t>& a,
                    const std::vector<index_t>& b, const char* what) {
  std::unordered_set<index_t> set(a.begin(), a.end());
  if (set.size() != a.size()) fail(file, std::string("duplicate indices within a split (") + what + ")");
  for (index_t i : b)
    if (set.count(i)) fail(file, std::string("splits overlap (") + what + ") at node " + std::to_string(i));
}

struct KnownStats {
  index_t n, d, train, val, test;
  index_t f;           // -1: not asserted
  index_t edge_types;  // -1: homogeneous
};

std::optional<KnownStats> known_stats(const std::string& name) {
  const std::string key = lower(name);
  if (key == "cora") return KnownStats{2708, 1433, 140, 500, 1000, 7, -1};
  if (key == "citeseer") return KnownStats{3327, 3703, 120, 500, 1000, 6, -1};
  if (key == "pubmed") return KnownStats{19717, 500, 60, 500, 1000, 3, -1};
  if (key == "acm") return KnownStats{8994, 1902, 600, 300, 2125, -1, 4};
  if (key == "imdb") return KnownStats{12772, 1256, 300, 300, 2339, -1, 4};
  return std::nullopt;
}

void check_known(const fs::path& meta_file, const std::string& name, index_t n, index_t d,
                 index_t f, index_t edge_types, index_t train, index_t val, index_t test) {
  const auto stats = known_stats(name);
  if (!stats) return;
  auto expect = [&](const char* what, index_t got, index_t want) {
    if (want >= 0 && got != want)
      fail(meta_file, "dataset \"" + name + "\" has " + what + " = " + std::to_string(got) +
                          " but the published value is " + std::to_string(want));
  };
  expect("nodes", n, stats->n);
  expect("feature width", d, stats->d);
  expect("classes", f, stats->f);
  expect("edge types", edge_types, stats->edge_types);
  expect("training nodes", train, stats->train);
  expect("validation nodes", val, stats->val);
  expect("test nodes", test, stats->test);
}

struct Meta {
  std::string name;
  index_t n, d, f;
  std::vector<std::string> edge_types;
};

Meta read_meta(const fs::path& dir) {
  const fs::path file = dir / "meta.json";
  const json j = read_json(file);
  Meta m;
  if (!j.contains("name") || !j["name"].is_string()) fail(file, "missing string field \"name\"");
  m.name = j["name"].get<std::string>();
  m.n = get_count(j, file, "n");
  m.d = get_count(j, file, "d");
  m.f = get_count(j, file, "f");
  if (j.contains("edge_types")) {
    if (!j["edge_types"].is_array() || j["edge_types"].empty())
      fail(file, "\"edge_types\" must be a non-empty array of names");
    std::unordered_set<std::string> seen;
    for (const auto& e : j["edge_types"]) {
      if (!e.is_string()) fail(file, "\"edge_types\" entries must be strings");
      const std::string t = e.get<std::string>();
      if (t.empty() || !seen.insert(t).second)
        fail(file, "\"edge_types\" entries must be unique non-empty names");
      m.edge_types.push_back(t);
    }
  }
  return m;
}

void load_splits(const fs::path& dir, index_t n, std::vector<index_t>& train,
                 std::vector<index_t>& val, std::vector<index_t>& test) {
  const fs::path file = dir / "splits.json";
  const json j = read_json(file);
  train = read_mask(j, file, "train", n);
  val = read_mask(j, file, "val", n);
  test = read_mask(j, file, "test", n);
  check_disjoint(file, train, val, "train/val");
  check_disjoint(file, train, test, "train/test");
  check_disjoint(file, val, test, "val/test");
  check_disjoint(file, test, train, "test");  // also catches duplicates within test
}

json mask_json(const std::vector<index_t>& m) { return json(m); }

}  // namespace

bool dataset_is_hetero(const fs::path& dir) {
  return !read_meta(dir).edge_types.empty();
}

HomoGraph load_homo(const fs::path& dir) {
  const Meta meta = read_meta(dir);
  if (!meta.edge_types.empty())
    fail(dir / "meta.json", "dataset declares edge_types; load it as heterogeneous");
  HomoGraph g;
  g.name = meta.name;
  g.n = meta.n;
  g.d = meta.d;
  g.f = meta.f;
  g.adjacency = read_homo_edges(dir / "edges.tsv", g.n);
  // Symmetry holds by construction; the zero diagonal was enforced line by line.
  g.features = read_features(dir / "features.csr", g.n, g.d);
  g.labels = read_labels(dir / "labels.tsv", g.n, g.f, /*allow_unlabeled=*/false);
  load_splits(dir, g.n, g.train_mask, g.val_mask, g.test_mask);
  check_known(dir / "meta.json", g.name, g.n, g.d, g.f, -1,
              static_cast<index_t>(g.train_mask.size()), static_cast<index_t>(g.val_mask.size()),
              static_cast<index_t>(g.test_mask.size()));
  return g;
}

HeteroGraph load_hetero(const fs::path& dir) {
  const Meta meta = read_meta(dir);
  if (meta.edge_types.empty())
    fail(dir / "meta.json", "dataset declares no edge_types; load it as homogeneous");
  HeteroGraph g;
  g.name = meta.name;
  g.n = meta.n;
  g.d = meta.d;
  g.f = meta.f;
  g.edge_type_names = meta.edge_types;
  for (const std::string& t : meta.edge_types)
    g.adjacencies.push_back(read_directed_edges(dir / ("edges." + t + ".tsv"), g.n));
  g.features = read_features(dir / "features.csr", g.n, g.d);
  g.labels = read_labels(dir / "labels.tsv", g.n, g.f, /*allow_unlabeled=*/true);
  load_splits(dir, g.n, g.train_mask, g.val_mask, g.test_mask);
  for (const auto* mask : {&g.train_mask, &g.val_mask, &g.test_mask}) {
    for (index_t i : *mask)
      if (g.labels[i] < 0)
        fail(dir / "splits.json", "node " + std::to_string(i) + " is in a split but unlabeled");
  }
  check_known(dir / "meta.json", g.name, g.n, g.d, g.f,
              static_cast<index_t>(g.edge_type_names.size()),
              static_cast<index_t>(g.train_mask.size()), static_cast<index_t>(g.val_mask.size()),
              static_cast<index_t>(g.test_mask.size()));
  return g;
}

void save_homo(const HomoGraph& g, const fs::path& dir) {
  fs::create_directories(dir);
  {
    json j = {{"name", g.name}, {"n", g.n}, {"d", g.d}, {"f", g.f}};
    std::ofstream out(dir / "meta.json");
    out << j.dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "edges.tsv");
    for (index_t i = 0; i < g.adjacency.rows; ++i)
      for (index_t p = g.adjacency.row_ptr[i]; p < g.adjacency.row_ptr[i + 1]; ++p)
        if (i < g.adjacency.col_idx[p]) out << i << "\t" << g.adjacency.col_idx[p] << "\n";
  }
  write_features(dir / "features.csr", g.features);
  {
    std::ofstream out(dir / "labels.tsv");
    for (index_t i = 0; i < g.n; ++i) out << i << "\t" << g.labels[i] << "\n";
  }
  {
    json j = {{"train", mask_json(g.train_mask)}, {"val", mask_json(g.val_mask)},
              {"test", mask_json(g.test_mask)}};
    std::ofstream out(dir / "splits.json");
    out << j.dump() << "\n";
  }
}

void save_hetero(const HeteroGraph& g, const fs::path& dir) {
  fs::create_directories(dir);
  {
    json j = {{"name", g.name}, {"n", g.n}, {"d", g.d}, {"f", g.f},
              {"edge_types", g.edge_type_names}};
    std::ofstream out(dir / "meta.json");
    out << j.dump(2) << "\n";
  }
  for (std::size_t k = 0; k < g.adjacencies.size(); ++k) {
    std::ofstream out(dir / ("edges." + g.edge_type_names[k] + ".tsv"));
    const SparseMatrix& a = g.adjacencies[k];
    for (index_t i = 0; i < a.rows; ++i)
      for (index_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
        out << i << "\t" << a.col_idx[p] << "\n";
  }
  write_features(dir / "features.csr", g.features);
  {
    std::ofstream out(dir / "labels.tsv");
    for (index_t i = 0; i < g.n; ++i) out << i << "\t" << g.labels[i] << "\n";
  }
  {
    json j = {{"train", mask_json(g.train_mask)}, {"val", mask_json(g.val_mask)},
              {"test", mask_json(g.test_mask)}};
    std::ofstream out(dir / "splits.json");
    out << j.dump() << "\n";
  }
}

}  // namespace aegcn
