#include "genrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "genrec/kernels.hpp"
#include "genrec/transformer.hpp"

namespace genrec {

double recall_at_k(const std::vector<int64_t>& recommended,
                   const std::vector<int32_t>& relevant, int64_t k) {
  if (relevant.empty()) return 0.0;
  int64_t hits = 0;
  const int64_t depth = std::min<int64_t>(k, static_cast<int64_t>(recommended.size()));
  for (int64_t r = 0; r < depth; ++r)
    if (std::binary_search(relevant.begin(), relevant.end(),
                           static_cast<int32_t>(recommended[static_cast<size_t>(r)])))
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(const std::vector<int64_t>& recommended,
                 const std::vector<int32_t>& relevant, int64_t k) {
  if (relevant.empty()) return 0.0;
  const int64_t depth = std::min<int64_t>(k, static_cast<int64_t>(recommended.size()));
  double dcg = 0.0;
  for (int64_t r = 0; r < depth; ++r)
    if (std::binary_search(relevant.begin(), relevant.end(),
                           static_cast<int32_t>(recommended[static_cast<size_t>(r)])))
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  const int64_t ideal = std::min<int64_t>(k, static_cast<int64_t>(relevant.size()));
  double idcg = 0.0;
  for (int64_t r = 0; r < ideal; ++r)
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

namespace {

const std::vector<int32_t>& split_items(const InteractionDataset& ds, Split s,
                                        int64_t u) {
  switch (s) {
    case Split::kTrain: return ds.train_items[static_cast<size_t>(u)];
    case Split::kValid: return ds.valid_items[static_cast<size_t>(u)];
    default: return ds.test_items[static_cast<size_t>(u)];
  }
}

// top-k item indices by score, excluding `exclude` (sorted), ties by index
std::vector<int64_t> top_k_by_score(const std::vector<double>& scores,
                                    const std::vector<int32_t>& exclude,
                                    int64_t k) {
  std::vector<int64_t> idx;
  idx.reserve(scores.size());
  for (int64_t i = 0; i < static_cast<int64_t>(scores.size()); ++i)
    if (!std::binary_search(exclude.begin(), exclude.end(), static_cast<int32_t>(i)))
      idx.push_back(i);
  const int64_t keep = std::min<int64_t>(k, static_cast<int64_t>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + keep, idx.end(),
                    [&](int64_t a, int64_t b) {
                      if (scores[static_cast<size_t>(a)] != scores[static_cast<size_t>(b)])
                        return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
                      return a < b;
                    });
  idx.resize(static_cast<size_t>(keep));
  return idx;
}

MetricReport finalize(std::vector<double> recalls, std::vector<double> ndcgs,
                      int64_t k) {
  MetricReport rep;
  rep.k = k;
  rep.users = static_cast<int64_t>(recalls.size());
  for (double r : recalls) rep.recall += r;
  for (double n : ndcgs) rep.ndcg += n;
  if (rep.users > 0) {
    rep.recall /= static_cast<double>(rep.users);
    rep.ndcg /= static_cast<double>(rep.users);
  }
  rep.per_user_recall = std::move(recalls);
  rep.per_user_ndcg = std::move(ndcgs);
  return rep;
}

}  // namespace

MetricReport evaluate_inner_product(const Tensor& user_factors,
                                    const Tensor& item_factors,
                                    const InteractionDataset& ds, int64_t k,
                                    Split target) {
  const int64_t items = item_factors.rows(), d = item_factors.cols();
  std::vector<double> recalls_by_user(static_cast<size_t>(ds.user_count), -1.0);
  std::vector<double> ndcgs_by_user(static_cast<size_t>(ds.user_count), 0.0);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (int64_t u = 0; u < ds.user_count; ++u) {
    const auto& targets = split_items(ds, target, u);
    if (targets.empty()) continue;
    std::vector<double> scores(static_cast<size_t>(items));
    for (int64_t i = 0; i < items; ++i)
      scores[static_cast<size_t>(i)] = dot(user_factors.data() + u * d,
                                           item_factors.data() + i * d, d);
    auto top = top_k_by_score(scores, ds.train_items[static_cast<size_t>(u)], k);
    recalls_by_user[static_cast<size_t>(u)] = recall_at_k(top, targets, k);
    ndcgs_by_user[static_cast<size_t>(u)] = ndcg_at_k(top, targets, k);
  }

  std::vector<double> recalls, ndcgs;
  for (int64_t u = 0; u < ds.user_count; ++u) {
    if (recalls_by_user[static_cast<size_t>(u)] < 0.0) continue;
    recalls.push_back(recalls_by_user[static_cast<size_t>(u)]);
    ndcgs.push_back(ndcgs_by_user[static_cast<size_t>(u)]);
  }
  return finalize(std::move(recalls), std::move(ndcgs), k);
}

double inner_product_recall(const Tensor& user_factors, const Tensor& item_factors,
                            const InteractionDataset& ds, int64_t k, Split target) {
  return evaluate_inner_product(user_factors, item_factors, ds, k, target).recall;
}

MetricReport evaluate_generative(const InferenceModel& model,
                                 const Representations& reps,
                                 const RecIdRegistry& registry,
                                 const InteractionDataset& ds,
                                 const GenEvalOptions& opt) {
  std::vector<double> recalls_by_user(static_cast<size_t>(ds.user_count), -1.0);
  std::vector<double> ndcgs_by_user(static_cast<size_t>(ds.user_count), 0.0);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 4)
#endif
  for (int64_t u = 0; u < ds.user_count; ++u) {
    const auto& targets = split_items(ds, opt.target, u);
    const auto& history = ds.train_items[static_cast<size_t>(u)];
    if (targets.empty() || history.empty()) continue;
    Rng rng = Rng(opt.seed).fork(static_cast<uint64_t>(u) + 1);
    EncodedSequence seq = embed_input(reps.items, history, opt.max_history, rng);
    Tensor user_rep({reps.users.cols()});
    for (int64_t j = 0; j < reps.users.cols(); ++j) user_rep[j] = reps.users.at(u, j);
    InferenceModel::Memory mem = model.encode(user_rep, seq);
    const std::vector<int32_t> no_exclusions;
    BeamSearchResult res = beam_search(model, mem, registry, opt.k,
                                       opt.exclude_seen ? history : no_exclusions);
    recalls_by_user[static_cast<size_t>(u)] = recall_at_k(res.items, targets, opt.k);
    ndcgs_by_user[static_cast<size_t>(u)] = ndcg_at_k(res.items, targets, opt.k);
  }

  std::vector<double> recalls, ndcgs;
  for (int64_t u = 0; u < ds.user_count; ++u) {
    if (recalls_by_user[static_cast<size_t>(u)] < 0.0) continue;
    recalls.push_back(recalls_by_user[static_cast<size_t>(u)]);
    ndcgs.push_back(ndcgs_by_user[static_cast<size_t>(u)]);
  }
  return finalize(std::move(recalls), std::move(ndcgs), opt.k);
}

MetricReport evaluate_popularity(const InteractionDataset& ds, int64_t k,
                                 Split target, bool exclude_seen) {
  std::vector<double> pop(static_cast<size_t>(ds.item_count));
  for (int64_t i = 0; i < ds.item_count; ++i)
    pop[static_cast<size_t>(i)] = static_cast<double>(ds.popularity[static_cast<size_t>(i)]);

  std::vector<double> recalls, ndcgs;
  const std::vector<int32_t> none;
  for (int64_t u = 0; u < ds.user_count; ++u) {
    const auto& targets = split_items(ds, target, u);
    if (targets.empty()) continue;
    auto top = top_k_by_score(pop, exclude_seen ? ds.train_items[static_cast<size_t>(u)] : none, k);
    recalls.push_back(recall_at_k(top, targets, k));
    ndcgs.push_back(ndcg_at_k(top, targets, k));
  }
  return finalize(std::move(recalls), std::move(ndcgs), k);
}

std::string metric_table(const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(24) << "method";
  if (!rows.empty())
    os << "recall@" << rows.front().second.k << "   ndcg@" << rows.front().second.k
       << "    users\n";
  for (const auto& [name, rep] : rows) {
    os << std::left << std::setw(24) << name << std::fixed << std::setprecision(4)
       << std::setw(11) << rep.recall << std::setw(10) << rep.ndcg << rep.users
       << "\n";
  }
  return os.str();
}

}  // namespace genrec
