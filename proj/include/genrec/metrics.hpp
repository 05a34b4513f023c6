#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genrec/beam_search.hpp"
#include "genrec/dataset.hpp"
#include "genrec/graph_encoder.hpp"
#include "genrec/infer.hpp"
#include "genrec/rec_id.hpp"

namespace genrec {

// |top-k hits| / |relevant|. `relevant` must be sorted ascending.
double recall_at_k(const std::vector<int64_t>& recommended,
                   const std::vector<int32_t>& relevant, int64_t k);

// Binary-gain DCG with 1/log2(rank+1) discounts, normalised by the ideal
// DCG of min(|relevant|, k) hits.
double ndcg_at_k(const std::vector<int64_t>& recommended,
                 const std::vector<int32_t>& relevant, int64_t k);

enum class Split { kTrain, kValid, kTest };

struct MetricReport {
  int64_t k = 10;
  int64_t users = 0;  // users with a non-empty target split
  double recall = 0.0;
  double ndcg = 0.0;
  std::vector<double> per_user_recall;
  std::vector<double> per_user_ndcg;
};

// Inner-product retrieval quality of raw representations (used for early
// stopping in stage one and for the MF baseline). Training items are
// always excluded from the candidates.
double inner_product_recall(const Tensor& user_factors, const Tensor& item_factors,
                            const InteractionDataset& ds, int64_t k, Split target);

MetricReport evaluate_inner_product(const Tensor& user_factors,
                                    const Tensor& item_factors,
                                    const InteractionDataset& ds, int64_t k,
                                    Split target);

// Generative evaluation: encode each user's full training history, decode
// with constrained beam search, compare against the target split.
struct GenEvalOptions {
  int64_t k = 10;
  Split target = Split::kTest;
  bool exclude_seen = true;  // drop the user's training items from results
  int64_t max_history = 20;
  uint64_t seed = 1;         // history subsampling
};

MetricReport evaluate_generative(const InferenceModel& model,
                                 const Representations& reps,
                                 const RecIdRegistry& registry,
                                 const InteractionDataset& ds,
                                 const GenEvalOptions& opt);

// Plain popularity ranking (most trained-on items first), same exclusion
// rule as the generative path.
MetricReport evaluate_popularity(const InteractionDataset& ds, int64_t k,
                                 Split target, bool exclude_seen = true);

std::string metric_table(const std::vector<std::pair<std::string, MetricReport>>& rows);

}  // namespace genrec
