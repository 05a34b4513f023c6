#include "genrec/graph_encoder.hpp"

#include <algorithm>

namespace genrec {

GraphEncoder::GraphEncoder(int64_t user_count, int64_t item_count,
                           int64_t feature_dim, const GraphEncoderConfig& cfg,
                           Rng& rng)
    : cfg_(cfg) {
  if (cfg.layers < 1) throw NumericError("graph encoder needs at least one layer");
  const int64_t d = cfg.dim;
  feature_proj_ = &params_.create("enc.feature_proj", xavier_init({feature_dim, d}, rng));
  item_cf_ = &params_.create("enc.item_cf", xavier_init({item_count, d}, rng));
  user_init_ = &params_.create("enc.user_init", xavier_init({user_count, 2 * d}, rng));
  for (int y = 0; y < cfg.layers; ++y) {
    layer_self_.push_back(&params_.create("enc.self." + std::to_string(y),
                                          xavier_init({2 * d, 2 * d}, rng)));
    layer_neigh_.push_back(&params_.create("enc.neigh." + std::to_string(y),
                                           xavier_init({2 * d, 2 * d}, rng)));
  }
  out_proj_ = &params_.create("enc.out_proj", xavier_init({2 * d, d}, rng));
}

GraphEncoder::Reps GraphEncoder::encode_all(const Tensor& concat_features,
                                            const BipartiteGraph& graph) const {
  // item 0-th layer state: projected multimodal features ++ CF embedding
  Var fused = matmul(Var::constant(concat_features), Var::leaf(*feature_proj_));
  Var items = concat_cols({fused, Var::leaf(*item_cf_)});
  Var users = Var::leaf(*user_init_);

  for (size_t y = 0; y < layer_self_.size(); ++y) {
    Var w_self = Var::leaf(*layer_self_[y]);
    Var w_neigh = Var::leaf(*layer_neigh_[y]);
    // mean aggregation commutes with the linear map, so aggregate first
    Var item_agg = neighbor_mean(users, graph.item_adj);
    Var user_agg = neighbor_mean(items, graph.user_adj);
    Var items_next = leaky_relu(add(matmul(items, w_self), matmul(item_agg, w_neigh)));
    Var users_next = leaky_relu(add(matmul(users, w_self), matmul(user_agg, w_neigh)));
    items = items_next;
    users = users_next;
  }

  Var proj = Var::leaf(*out_proj_);
  return Reps{matmul(users, proj), matmul(items, proj)};
}

Representations GraphEncoder::encode_values(const Tensor& concat_features,
                                            const BipartiteGraph& graph) const {
  Reps r = encode_all(concat_features, graph);
  return Representations{r.users.value(), r.items.value()};
}

Representations GraphEncoder::encode_values(const ItemFeatureBank& bank,
                                            const BipartiteGraph& graph) const {
  return encode_values(bank.concat_features(), graph);
}

Var bpr_loss(const Var& h_users, const Var& h_items,
             const std::vector<std::array<int64_t, 3>>& triples) {
  std::vector<int64_t> u_idx, i_idx, j_idx;
  u_idx.reserve(triples.size());
  i_idx.reserve(triples.size());
  j_idx.reserve(triples.size());
  for (const auto& t : triples) {
    u_idx.push_back(t[0]);
    i_idx.push_back(t[1]);
    j_idx.push_back(t[2]);
  }
  Var hu = gather_rows(h_users, std::move(u_idx));
  Var hi = gather_rows(h_items, std::move(i_idx));
  Var hj = gather_rows(h_items, std::move(j_idx));
  Var margin = sub(sum_rows(mul(hu, hi)), sum_rows(mul(hu, hj)));
  // -ln sigma(x) == softplus(-x), stable for any margin
  return sum_all(softplus(neg(margin)));
}

std::vector<std::array<int64_t, 3>> sample_bpr_triples(
    const InteractionDataset& ds, Rng& rng) {
  std::vector<std::array<int64_t, 3>> triples;
  for (int64_t u = 0; u < ds.user_count; ++u) {
    const auto& pos = ds.train_items[u];
    if (pos.empty() || static_cast<int64_t>(pos.size()) == ds.item_count) continue;
    for (int32_t i : pos) {
      // uniform draw over unobserved training items for this user
      int64_t j;
      do {
        j = rng.uniform_int(ds.item_count);
      } while (std::binary_search(pos.begin(), pos.end(), static_cast<int32_t>(j)));
      triples.push_back({u, i, j});
    }
  }
  return triples;
}

}  // namespace genrec
