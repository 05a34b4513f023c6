#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "genrec/config.hpp"
#include "genrec/kernels.hpp"
#include "genrec/pipeline.hpp"

using namespace genrec;

int main(int argc, char** argv) {
  CLI::App app{"genrec: generative multimodal recommendation pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string workdir = "run";
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--workdir", workdir, "artifact directory (default: run)");
  app.add_option("--set", overrides, "override a config key, e.g. --set lr=0.0005")
      ->take_all();

  // convenience flags for the common knobs; --set covers everything else
  std::string seed_s, threads_s, pos_s, token_s, k_s;
  app.add_option("--seed", seed_s, "rng seed");
  app.add_option("--threads", threads_s, "worker threads (0 = default)");
  app.add_option("--pos-encoding", pos_s, "relation | sinusoid | none");
  app.add_option("--token-variant", token_s, "popularity | random");
  app.add_option("--top-k", k_s, "recommendation list length");

  bool with_mf = false;
  std::string sweep = "pe";
  CLI::App* c_synth = app.add_subcommand("synth", "generate a synthetic dataset");
  CLI::App* c_rqvae = app.add_subcommand("train-rqvae",
                                         "train the graph encoder and quantizer");
  CLI::App* c_ids = app.add_subcommand("assign-ids", "assign Rec-IDs to the catalog");
  CLI::App* c_rec = app.add_subcommand("train-rec", "train the generative recommender");
  CLI::App* c_recommend = app.add_subcommand("recommend", "write top-k per user");
  CLI::App* c_eval = app.add_subcommand("evaluate", "test-split metrics");
  c_eval->add_flag("--with-mf", with_mf, "also train and score the MF baseline");
  CLI::App* c_bench = app.add_subcommand("bench", "inference cost sweep");
  CLI::App* c_ablate = app.add_subcommand("ablate", "component study sweeps");
  c_ablate->add_option("--sweep", sweep, "pe | token | length | codebook | collision");

  try {
    app.parse(argc, argv);

    Config cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    if (!seed_s.empty()) cfg.set("seed", seed_s);
    if (!threads_s.empty()) cfg.set("threads", threads_s);
    if (!pos_s.empty()) cfg.set("pos_encoding", pos_s);
    if (!token_s.empty()) cfg.set("token_variant", token_s);
    if (!k_s.empty()) cfg.set("top_k", k_s);
    for (const std::string& kv : overrides) {
      const size_t eq = kv.find('=');
      if (eq == std::string::npos)
        throw UsageError("--set expects key=value, got `" + kv + "`");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    set_num_threads(cfg.threads);

    if (c_synth->parsed()) cmd_synth(cfg, workdir, std::cout);
    else if (c_rqvae->parsed()) cmd_train_rqvae(cfg, workdir, std::cout);
    else if (c_ids->parsed()) cmd_assign_ids(cfg, workdir, std::cout);
    else if (c_rec->parsed()) cmd_train_rec(cfg, workdir, std::cout);
    else if (c_recommend->parsed()) cmd_recommend(cfg, workdir, std::cout);
    else if (c_eval->parsed()) cmd_evaluate(cfg, workdir, std::cout, with_mf);
    else if (c_bench->parsed()) cmd_bench(cfg, workdir, std::cout);
    else if (c_ablate->parsed()) cmd_ablate(cfg, workdir, std::cout, sweep);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
