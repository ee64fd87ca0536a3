#include "aegcn/synthetic.hpp"

#include <algorithm>

#include "aegcn/errors.hpp"
#include "aegcn/rng.hpp"

namespace aegcn {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ArgumentError(what);
}

// Band features: a node's latent class lights up its slice of the feature
// vector; everything else is low-level noise. One draw per cell in row order.
DenseMatrix band_features(index_t n, index_t d, index_t classes,
                          const std::vector<index_t>& latent, RandomStream& stream) {
  const index_t band = d / classes;
  DenseMatrix x(n, d);
  for (index_t i = 0; i < n; ++i) {
    const index_t c = latent[static_cast<std::size_t>(i)];
    double* row = x.row(i);
    for (index_t j = 0; j < d; ++j) {
      const bool on = j >= c * band && j < (c + 1) * band;
      row[j] = on ? stream.uniform(0.5, 1.5) : stream.uniform(0.0, 0.1);
    }
  }
  return x;
}

void class_splits(index_t n, index_t classes, const std::vector<index_t>& labels,
                  index_t train_per_class, index_t val_per_class, std::vector<index_t>& train,
                  std::vector<index_t>& val, std::vector<index_t>& test) {
  std::vector<index_t> taken(static_cast<std::size_t>(classes), 0);
  for (index_t i = 0; i < n; ++i) {
    const index_t c = labels[static_cast<std::size_t>(i)];
    if (c < 0) continue;
    index_t& seen = taken[static_cast<std::size_t>(c)];
    if (seen < train_per_class) {
      train.push_back(i);
    } else if (seen < train_per_class + val_per_class) {
      val.push_back(i);
    } else {
      test.push_back(i);
    }
    ++seen;
  }
}

}  // namespace

HomoGraph synthetic_homo(const SyntheticHomoSpec& spec) {
  require(spec.classes >= 2, "need at least two classes");
  require(spec.nodes_per_class > spec.train_per_class + spec.val_per_class,
          "not enough nodes per class for the splits");
  require(spec.train_per_class >= 1 && spec.val_per_class >= 1, "splits must be non-empty");
  require(spec.feature_dim >= spec.classes, "feature width must cover the classes");
  require(spec.p_in >= 0.0 && spec.p_in <= 1.0 && spec.p_out >= 0.0 && spec.p_out <= 1.0,
          "edge probabilities must lie in [0, 1]");

  RandomStream stream(spec.seed);
  HomoGraph g;
  g.name = "synthetic";
  g.n = spec.nodes_per_class * spec.classes;
  g.d = spec.feature_dim;
  g.f = spec.classes;
  g.labels.resize(static_cast<std::size_t>(g.n));
  for (index_t i = 0; i < g.n; ++i) g.labels[static_cast<std::size_t>(i)] = i % spec.classes;

  std::vector<Triplet> edges;
  for (index_t i = 0; i < g.n; ++i) {
    for (index_t j = i + 1; j < g.n; ++j) {
      const bool same = g.labels[static_cast<std::size_t>(i)] == g.labels[static_cast<std::size_t>(j)];
      if (stream.bernoulli(same ? spec.p_in : spec.p_out)) {
        edges.push_back({i, j, 1.0});
        edges.push_back({j, i, 1.0});
      }
    }
  }
  g.adjacency = csr_from_triplets(g.n, g.n, std::move(edges));
  g.features = band_features(g.n, g.d, g.f, g.labels, stream);
  class_splits(g.n, g.f, g.labels, spec.train_per_class, spec.val_per_class, g.train_mask,
               g.val_mask, g.test_mask);
  return g;
}

HeteroGraph synthetic_hetero(const SyntheticHeteroSpec& spec) {
  require(spec.classes >= 2, "need at least two classes");
  require(spec.edge_types == 2 || spec.edge_types == 4, "edge type count must be 2 or 4");
  require(spec.primary >= spec.classes * (spec.train_per_class + spec.val_per_class + 1),
          "not enough primary nodes for the splits");
  require(spec.train_per_class >= 1 && spec.val_per_class >= 1, "splits must be non-empty");
  require(spec.secondary >= spec.classes, "need at least one secondary node per class");
  require(spec.tertiary >= spec.classes || spec.edge_types == 2,
          "need at least one tertiary node per class");
  require(spec.feature_dim >= spec.classes, "feature width must cover the classes");
  require(spec.affinity >= 0.0 && spec.affinity <= 1.0, "affinity must lie in [0, 1]");

  RandomStream stream(spec.seed);
  HeteroGraph g;
  g.name = "synthetic";
  g.n = spec.primary + spec.secondary + (spec.edge_types == 4 ? spec.tertiary : 0);
  g.d = spec.feature_dim;
  g.f = spec.classes;

  // Latent class: primaries carry it as a label, bridges only through their
  // feature band and edge affinity.
  // Role-local position determines the class, so within each role the node
  // at offset m belongs to class m % classes (the biased picker relies on it).
  std::vector<index_t> latent(static_cast<std::size_t>(g.n));
  g.labels.assign(static_cast<std::size_t>(g.n), -1);
  for (index_t i = 0; i < g.n; ++i) {
    index_t off = i;
    if (i >= spec.primary + spec.secondary) {
      off = i - spec.primary - spec.secondary;
    } else if (i >= spec.primary) {
      off = i - spec.primary;
    }
    const index_t c = off % spec.classes;
    latent[static_cast<std::size_t>(i)] = c;
    if (i < spec.primary) g.labels[static_cast<std::size_t>(i)] = c;
  }

  // Each primary connects to two distinct bridge nodes per bridge role,
  // class-biased. Directed pairs: forward type then its reverse.
  auto bridge_pair = [&](index_t base, index_t count, std::vector<Triplet>& fwd,
                         std::vector<Triplet>& rev) {
    for (index_t i = 0; i < spec.primary; ++i) {
      const index_t c = latent[static_cast<std::size_t>(i)];
      index_t first = -1;
      for (int picked = 0; picked < 2;) {
        index_t j;
        if (stream.bernoulli(spec.affinity)) {
          // Uniform over the bridge nodes of the same class.
          const index_t per = count / spec.classes + (c < count % spec.classes ? 1 : 0);
          const auto slot = static_cast<index_t>(stream.uniform() * static_cast<double>(per));
          j = base + std::min(slot, per - 1) * spec.classes + c;
        } else {
          const auto slot = static_cast<index_t>(stream.uniform() * static_cast<double>(count));
          j = base + std::min(slot, count - 1);
        }
        if (j == first) continue;
        if (first < 0) first = j;
        fwd.push_back({i, j, 1.0});
        rev.push_back({j, i, 1.0});
        ++picked;
      }
    }
  };

  std::vector<std::vector<Triplet>> typed(static_cast<std::size_t>(spec.edge_types));
  bridge_pair(spec.primary, spec.secondary, typed[0], typed[1]);
  g.edge_type_names = {"pa", "ap"};
  if (spec.edge_types == 4) {
    bridge_pair(spec.primary + spec.secondary, spec.tertiary, typed[2], typed[3]);
    g.edge_type_names.push_back("ps");
    g.edge_type_names.push_back("sp");
  }
  for (auto& t : typed) g.adjacencies.push_back(csr_from_triplets(g.n, g.n, std::move(t)));

  g.features = band_features(g.n, g.d, g.f, latent, stream);
  class_splits(spec.primary, g.f, g.labels, spec.train_per_class, spec.val_per_class,
               g.train_mask, g.val_mask, g.test_mask);
  return g;
}

}  // namespace aegcn
