#pragma once

#include <ostream>
#include <string>

#include "genrec/config.hpp"
#include "genrec/dataset.hpp"
#include "genrec/features.hpp"
#include "genrec/graph_encoder.hpp"
#include "genrec/rec_id.hpp"
#include "genrec/rqvae.hpp"
#include "genrec/transformer.hpp"

namespace genrec {

// Stage commands over a working directory of artifacts:
//
//   dataset/            interactions.tsv, features_*.bin(+.desc), stats.txt
//   graph_encoder.ckpt  encoder parameters + frozen representations
//   rqvae.ckpt          quantizer parameters
//   codewords.tsv       per-item semantic tokens
//   rec_ids.tsv         full Rec-ID table (+ collisions.txt)
//   recmodel.ckpt       transformer parameters
//   recs.tsv            `user item rank score` recommendations
//   metrics.txt/.tsv    evaluation reports
//   bench.txt/.csv      inference cost sweep
//
// Each command validates that its upstream artifacts exist and names the
// command that produces them otherwise.

void cmd_synth(const Config& cfg, const std::string& workdir, std::ostream& log);
void cmd_train_rqvae(const Config& cfg, const std::string& workdir, std::ostream& log);
void cmd_assign_ids(const Config& cfg, const std::string& workdir, std::ostream& log);
void cmd_train_rec(const Config& cfg, const std::string& workdir, std::ostream& log);
void cmd_recommend(const Config& cfg, const std::string& workdir, std::ostream& log);
void cmd_evaluate(const Config& cfg, const std::string& workdir, std::ostream& log,
                  bool with_mf = false);
void cmd_bench(const Config& cfg, const std::string& workdir, std::ostream& log);
// sweep: pe | token | length | codebook | collision
void cmd_ablate(const Config& cfg, const std::string& workdir, std::ostream& log,
                const std::string& sweep);

// shared artifact helpers (used by the commands and the test suites)
struct WorkdirData {
  InteractionDataset dataset;
  ItemFeatureBank bank;
  BipartiteGraph graph;
};
WorkdirData load_workdir_dataset(const Config& cfg, const std::string& workdir);

void save_encoder_checkpoint(const std::string& path, const GraphEncoder& enc,
                             const Representations& reps, int64_t feature_dim);
Representations load_representations(const std::string& path);

void save_rqvae_checkpoint(const std::string& path, const RqVae& rqvae);
RqVae load_rqvae_checkpoint(const std::string& path);

void save_recmodel_checkpoint(const std::string& path, const RecModel& model);
RecModel load_recmodel_checkpoint(const std::string& path);

RecIdRegistry build_registry_from_artifacts(const Config& cfg,
                                            const std::string& workdir,
                                            const InteractionDataset& ds);

}  // namespace genrec
