#pragma once
// Deterministic synthetic datasets: a stochastic block model for the
// homogeneous path and a three-role typed graph (papers, authors, subjects)
// for the heterogeneous one. Same spec and seed, same dataset, bit for bit.
#include <cstdint>

#include "aegcn/data.hpp"

namespace aegcn {

struct SyntheticHomoSpec {
  index_t nodes_per_class = 40;
  index_t classes = 3;
  index_t feature_dim = 16;
  double p_in = 0.10;   // edge probability within a class
  double p_out = 0.01;  // edge probability across classes
  index_t train_per_class = 5;
  index_t val_per_class = 5;  // the remainder is the test split
  std::uint64_t seed = 1;
};

HomoGraph synthetic_homo(const SyntheticHomoSpec& spec);

// Primary nodes carry labels; secondary and tertiary nodes are unlabeled
// bridges. Edge types are primary<->secondary and, with edge_types = 4, also
// primary<->tertiary, each as a directed pair, so two-hop products recover
// same-class affinity. edge_types must be 2 or 4.
struct SyntheticHeteroSpec {
  index_t primary = 60;
  index_t secondary = 30;
  index_t tertiary = 12;
  index_t classes = 3;
  index_t feature_dim = 16;
  int edge_types = 4;
  double affinity = 0.85;  // probability a bridge edge stays within the class
  index_t train_per_class = 5;
  index_t val_per_class = 5;
  std::uint64_t seed = 1;
};

HeteroGraph synthetic_hetero(const SyntheticHeteroSpec& spec);

}  // namespace aegcn
