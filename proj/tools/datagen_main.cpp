// aegcn-datagen: write synthetic datasets in the canonical directory layout,
// for pipeline smoke tests and benchmarks without external downloads.
#include <iostream>

#include "CLI11.hpp"
#include "aegcn/errors.hpp"
#include "aegcn/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic dataset generator"};
  app.require_subcommand(1);

  std::string out_dir;
  CLI::App* homo = app.add_subcommand("homo", "stochastic block model graph");
  aegcn::SyntheticHomoSpec hs;
  homo->add_option("--out", out_dir, "output dataset directory")->required();
  homo->add_option("--nodes-per-class", hs.nodes_per_class);
  homo->add_option("--classes", hs.classes);
  homo->add_option("--feature-dim", hs.feature_dim);
  homo->add_option("--p-in", hs.p_in, "within-class edge probability");
  homo->add_option("--p-out", hs.p_out, "cross-class edge probability");
  homo->add_option("--train-per-class", hs.train_per_class);
  homo->add_option("--val-per-class", hs.val_per_class);
  homo->add_option("--seed", hs.seed);

  CLI::App* hetero = app.add_subcommand("hetero", "typed graph with bridge roles");
  aegcn::SyntheticHeteroSpec es;
  hetero->add_option("--out", out_dir, "output dataset directory")->required();
  hetero->add_option("--primary", es.primary, "labeled nodes");
  hetero->add_option("--secondary", es.secondary);
  hetero->add_option("--tertiary", es.tertiary);
  hetero->add_option("--classes", es.classes);
  hetero->add_option("--feature-dim", es.feature_dim);
  hetero->add_option("--edge-types", es.edge_types, "2 or 4");
  hetero->add_option("--affinity", es.affinity, "same-class bridge probability");
  hetero->add_option("--train-per-class", es.train_per_class);
  hetero->add_option("--val-per-class", es.val_per_class);
  hetero->add_option("--seed", es.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (homo->parsed()) {
      const aegcn::HomoGraph g = aegcn::synthetic_homo(hs);
      aegcn::save_homo(g, out_dir);
      std::cout << "wrote " << out_dir << ": " << g.n << " nodes, " << g.adjacency.nnz() / 2
                << " edges, " << g.f << " classes\n";
    } else {
      const aegcn::HeteroGraph g = aegcn::synthetic_hetero(es);
      aegcn::save_hetero(g, out_dir);
      std::cout << "wrote " << out_dir << ": " << g.n << " nodes, "
                << g.adjacencies.size() << " edge types, " << g.f << " classes\n";
    }
  } catch (const aegcn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const aegcn::ArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const aegcn::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
