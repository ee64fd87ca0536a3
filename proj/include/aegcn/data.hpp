#pragma once
// Canonical dataset format: a directory holding meta.json, edge lists, a
// binary CSR feature file, labels.tsv, and splits.json. Loaders validate
// aggressively and report file and line numbers; for the five named benchmark
// datasets the published statistics are asserted on load.
//
// Format summary
//   meta.json      {"name", "n", "d", "f", optional "node_types",
//                   "edge_types": [names] (heterogeneous only)}
//   edges.tsv      homogeneous: one "src<TAB>dst" pair per line, 0-based;
//                   undirected (symmetrized on load), self loops rejected,
//                   duplicate lines collapse to a single unit entry
//   edges.<t>.tsv  heterogeneous: one file per edge type, directed
//   features.csr   little-endian binary: magic "FCSR", u64 n, u64 d, u64 nnz,
//                   row_ptr u64[n+1], col_idx u64[nnz], values f64[nnz]
//   labels.tsv     "node<TAB>class" lines; -1 marks unlabeled (heterogeneous);
//                   homogeneous graphs must label every node
//   splits.json    {"train": [...], "val": [...], "test": [...]}
#include <filesystem>
#include <string>
#include <vector>

#include "aegcn/matrix.hpp"

namespace aegcn {

struct HomoGraph {
  std::string name;
  index_t n = 0;  // nodes
  index_t d = 0;  // feature width
  index_t f = 0;  // classes
  SparseMatrix adjacency;  // symmetric, zero diagonal, unit weights
  DenseMatrix features;    // n x d, densified
  std::vector<index_t> labels;
  std::vector<index_t> train_mask, val_mask, test_mask;
};

struct HeteroGraph {
  std::string name;
  index_t n = 0;
  index_t d = 0;
  index_t f = 0;
  std::vector<std::string> edge_type_names;
  std::vector<SparseMatrix> adjacencies;  // one n x n directed matrix per type
  DenseMatrix features;
  std::vector<index_t> labels;  // -1 means unlabeled
  std::vector<index_t> train_mask, val_mask, test_mask;
};

HomoGraph load_homo(const std::filesystem::path& dir);
HeteroGraph load_hetero(const std::filesystem::path& dir);

void save_homo(const HomoGraph& g, const std::filesystem::path& dir);
void save_hetero(const HeteroGraph& g, const std::filesystem::path& dir);

// True when meta.json in dir declares edge_types (heterogeneous layout).
bool dataset_is_hetero(const std::filesystem::path& dir);

}  // namespace aegcn
