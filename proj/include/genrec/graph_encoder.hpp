#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "genrec/autodiff.hpp"
#include "genrec/dataset.hpp"
#include "genrec/features.hpp"
#include "genrec/optim.hpp"

namespace genrec {

struct GraphEncoderConfig {
  int64_t dim = 64;  // D, final representation width
  int layers = 2;    // stacked convolution layers
};

// Final user/item representations (U x D, I x D).
struct Representations {
  Tensor users;
  Tensor items;
};

// Graph-convolutional encoder over the user-item bipartite graph. Item
// nodes start from projected multimodal features concatenated with a CF
// embedding; user nodes from a learned embedding; both are D-wide after a
// final linear projection.
class GraphEncoder {
public:
  GraphEncoder(int64_t user_count, int64_t item_count, int64_t feature_dim,
               const GraphEncoderConfig& cfg, Rng& rng);

  struct Reps {
    Var users;  // U x D
    Var items;  // I x D
  };

  // Builds the full forward graph. `concat_features` is the bank's
  // row-wise modality concatenation (I x feature_dim).
  Reps encode_all(const Tensor& concat_features, const BipartiteGraph& graph) const;

  // Value-only convenience for inference and checkpointing.
  Representations encode_values(const Tensor& concat_features,
                                const BipartiteGraph& graph) const;
  Representations encode_values(const ItemFeatureBank& bank,
                                const BipartiteGraph& graph) const;

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const GraphEncoderConfig& config() const { return cfg_; }

private:
  GraphEncoderConfig cfg_;
  ParamStore params_;
  Parameter* feature_proj_;             // feature_dim x D
  Parameter* item_cf_;                  // I x D
  Parameter* user_init_;                // U x 2D
  std::vector<Parameter*> layer_self_;  // 2D x 2D per layer
  std::vector<Parameter*> layer_neigh_;
  Parameter* out_proj_;                 // 2D x D
};

// Sum over triples of -ln sigma(h_u.h_i - h_u.h_j).
Var bpr_loss(const Var& h_users, const Var& h_items,
             const std::vector<std::array<int64_t, 3>>& triples);

// One uniformly sampled unobserved item per training pair, re-drawn each
// call (callers fork the epoch rng).
std::vector<std::array<int64_t, 3>> sample_bpr_triples(
    const InteractionDataset& ds, Rng& rng);

}  // namespace genrec
