#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "genrec/rng.hpp"
#include "genrec/tensor.hpp"

namespace genrec {

// User-item interactions with a per-user train/valid/test split and
// per-item popularity (number of training interactions).
struct InteractionDataset {
  int64_t user_count = 0;
  int64_t item_count = 0;
  std::vector<std::vector<int32_t>> train_items;  // per user, ascending
  std::vector<std::vector<int32_t>> valid_items;
  std::vector<std::vector<int32_t>> test_items;
  std::vector<int64_t> popularity;  // per item, train degree

  int64_t interaction_count() const;
  int64_t train_count() const;
  double density() const;

  // Validates index ranges and duplicates, then assigns splits with a
  // seeded per-user shuffle: roughly 80/10/10, at least one validation and
  // one test interaction for users with >= 3 interactions, everything in
  // train below that.
  static InteractionDataset from_pairs(
      int64_t user_count, int64_t item_count,
      const std::vector<std::pair<int32_t, int32_t>>& pairs, uint64_t seed);
};

// Human-readable statistics block (U, I, interactions, density, splits).
std::string stats_report(const InteractionDataset& ds);

// Interaction log reader: one `user<TAB>item` pair per line, arbitrary ids
// remapped to dense 0-based indices in order of first appearance. The
// mappings come back with the dataset so they can be persisted alongside.
struct LoadedInteractions {
  InteractionDataset dataset;
  std::vector<std::string> user_ids;  // dense index -> original id
  std::vector<std::string> item_ids;
};
LoadedInteractions load_interactions(const std::string& path, uint64_t seed);

void save_interactions(const std::string& path,
                       const std::vector<std::pair<int32_t, int32_t>>& pairs);
void save_id_map(const std::string& path, const std::vector<std::string>& ids);

// Undirected user-item adjacency over training interactions only.
struct BipartiteGraph {
  std::vector<std::vector<int32_t>> user_adj;  // user -> items
  std::vector<std::vector<int32_t>> item_adj;  // item -> users
};

BipartiteGraph build_graph(const InteractionDataset& ds);

}  // namespace genrec
