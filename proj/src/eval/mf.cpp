#include "genrec/mf.hpp"

#include <algorithm>
#include <cmath>

#include "genrec/kernels.hpp"

namespace genrec {

MfModel mf_train(const InteractionDataset& ds, const MfOptions& opt) {
  Rng rng(opt.seed);
  MfModel m;
  m.user_factors = Tensor({ds.user_count, opt.dim});
  m.item_factors = Tensor({ds.item_count, opt.dim});
  for (int64_t i = 0; i < m.user_factors.size(); ++i)
    m.user_factors[i] = 0.1 * rng.normal();
  for (int64_t i = 0; i < m.item_factors.size(); ++i)
    m.item_factors[i] = 0.1 * rng.normal();

  const int64_t d = opt.dim;
  double best = -1.0;
  int bad = 0;
  Tensor best_u = m.user_factors, best_i = m.item_factors;

  for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    Rng erng = rng.fork(static_cast<uint64_t>(epoch));
    auto triples = sample_bpr_triples(ds, erng);
    erng.shuffle(triples);
    for (const auto& t : triples) {
      double* hu = m.user_factors.data() + t[0] * d;
      double* hi = m.item_factors.data() + t[1] * d;
      double* hj = m.item_factors.data() + t[2] * d;
      const double x = dot(hu, hi, d) - dot(hu, hj, d);
      const double e = 1.0 / (1.0 + std::exp(x));  // sigma(-x)
      for (int64_t f = 0; f < d; ++f) {
        const double u0 = hu[f], i0 = hi[f], j0 = hj[f];
        hu[f] += opt.lr * (e * (i0 - j0) - opt.l2 * u0);
        hi[f] += opt.lr * (e * u0 - opt.l2 * i0);
        hj[f] += opt.lr * (-e * u0 - opt.l2 * j0);
      }
    }

    const double recall = inner_product_recall(m.user_factors, m.item_factors, ds,
                                               opt.eval_k, Split::kValid);
    if (opt.log)
      (*opt.log) << "epoch=" << epoch << " valid_recall@" << opt.eval_k << "="
                 << recall << "\n";
    if (recall > best) {
      best = recall;
      best_u = m.user_factors;
      best_i = m.item_factors;
      bad = 0;
    } else if (++bad >= opt.patience) {
      break;
    }
  }
  m.user_factors = std::move(best_u);
  m.item_factors = std::move(best_i);
  return m;
}

std::vector<int64_t> mf_recommend(const MfModel& model, const InteractionDataset& ds,
                                  int64_t user, int64_t k) {
  const int64_t items = model.item_factors.rows(), d = model.item_factors.cols();
  const auto& exclude = ds.train_items[static_cast<size_t>(user)];
  std::vector<int64_t> idx;
  idx.reserve(static_cast<size_t>(items));
  for (int64_t i = 0; i < items; ++i)
    if (!std::binary_search(exclude.begin(), exclude.end(), static_cast<int32_t>(i)))
      idx.push_back(i);
  std::vector<double> scores(static_cast<size_t>(items));
  const double* hu = model.user_factors.data() + user * d;
  for (int64_t i = 0; i < items; ++i)
    scores[static_cast<size_t>(i)] = dot(hu, model.item_factors.data() + i * d, d);
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

MetricReport evaluate_mf(const MfModel& model, const InteractionDataset& ds,
                         int64_t k, Split target) {
  return evaluate_inner_product(model.user_factors, model.item_factors, ds, k, target);
}

}  // namespace genrec
