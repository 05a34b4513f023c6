#pragma once

#include <cstdint>
#include <vector>

#include "genrec/infer.hpp"
#include "genrec/rec_id.hpp"

namespace genrec {

struct BeamSearchResult {
  std::vector<int64_t> items;   // best first
  std::vector<double> scores;   // cumulative token log-probabilities
  bool exhausted = false;       // fewer than k reachable items existed
};

// Constrained beam search: every expansion is restricted to children of
// the prefix in the registry trie, so each completed sequence maps to a
// real item. Scores are full-vocabulary log-softmax sums, which makes the
// ranking comparable with exhaustive score_rec_id scans. Items in
// `exclude` are dropped after decoding and the result backfilled from the
// remaining beams, so callers get up to k items. `width` 0 picks
// k + |exclude| so exclusions cannot starve the result.
BeamSearchResult beam_search(const InferenceModel& model,
                             const InferenceModel::Memory& memory,
                             const RecIdRegistry& registry, int64_t k,
                             const std::vector<int32_t>& exclude = {},
                             int64_t width = 0);

// Teacher-forced log-probability of one item's Rec-ID.
double score_rec_id(const InferenceModel& model,
                    const InferenceModel::Memory& memory,
                    const RecIdRegistry& registry, int64_t item);

}  // namespace genrec
