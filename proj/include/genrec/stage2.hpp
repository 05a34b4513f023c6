#pragma once

#include <ostream>

#include "genrec/dataset.hpp"
#include "genrec/metrics.hpp"
#include "genrec/transformer.hpp"

namespace genrec {

// Sequence-to-sequence training: every training interaction (u, i) is one
// instance; the encoder sees u's remaining training items, the decoder is
// teacher-forced on item i's Rec-ID. Representations stay frozen.
struct Stage2Options {
  int max_epochs = 500;
  int64_t batch = 500;
  double lr = 0.001;
  double l2 = 1e-5;
  int patience = 20;
  uint64_t seed = 1;
  int64_t eval_k = 10;
  Split eval_target = Split::kValid;
  bool exclude_seen_eval = true;
  double stop_at_metric = 2.0;  // early exit threshold (2.0 = never)
  int eval_every = 1;           // epochs between generative evaluations
  std::ostream* log = nullptr;
};

struct Stage2Result {
  double best_metric = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  double last_loss = 0.0;
  std::vector<double> epoch_losses;
};

Stage2Result train_stage2(RecModel& model, const Representations& reps,
                          const RecIdRegistry& registry,
                          const InteractionDataset& ds,
                          const Stage2Options& opt);

}  // namespace genrec
