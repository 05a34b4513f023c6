#pragma once

#include <ostream>

#include "genrec/dataset.hpp"
#include "genrec/metrics.hpp"

namespace genrec {

// Matrix-factorization baseline: the classic inner-product retriever the
// generative model is benchmarked against. Trained with the same BPR
// objective and splits.
struct MfModel {
  Tensor user_factors;  // U x D
  Tensor item_factors;  // I x D
};

struct MfOptions {
  int64_t dim = 64;
  double lr = 0.05;
  double l2 = 1e-4;
  int max_epochs = 200;
  int patience = 20;
  int64_t eval_k = 10;
  uint64_t seed = 1;
  std::ostream* log = nullptr;
};

MfModel mf_train(const InteractionDataset& ds, const MfOptions& opt);

// Top-k items by inner product, training items excluded; exactly one score
// per catalog item.
std::vector<int64_t> mf_recommend(const MfModel& model, const InteractionDataset& ds,
                                  int64_t user, int64_t k);

MetricReport evaluate_mf(const MfModel& model, const InteractionDataset& ds,
                         int64_t k, Split target);

}  // namespace genrec
