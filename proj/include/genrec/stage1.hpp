#pragma once

#include <ostream>

#include "genrec/dataset.hpp"
#include "genrec/features.hpp"
#include "genrec/graph_encoder.hpp"
#include "genrec/rqvae.hpp"

namespace genrec {

// Joint representation/quantizer training: mini-batches strictly alternate
// between a BPR step on the graph encoder and a reconstruction/codebook
// step on the quantizer. Early stopping watches validation Recall@k of
// inner-product retrieval over the current representations.
struct Stage1Options {
  int max_epochs = 200;
  int64_t batch = 500;
  double lr = 0.001;
  double l2 = 1e-5;
  int patience = 20;
  uint64_t seed = 1;
  int64_t eval_k = 10;
  std::ostream* log = nullptr;
};

struct Stage1Result {
  Representations reps;  // from the best epoch
  double best_valid_recall = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  double last_bpr_loss = 0.0;
  double last_rqvae_loss = 0.0;
  double first_rqvae_loss = 0.0;
};

Stage1Result train_stage1(GraphEncoder& encoder, RqVae& rqvae,
                          const InteractionDataset& ds,
                          const ItemFeatureBank& bank,
                          const BipartiteGraph& graph,
                          const Stage1Options& opt);

}  // namespace genrec
