#include "genrec/stage1.hpp"

#include <algorithm>
#include <cmath>

#include "genrec/checkpoint.hpp"
#include "genrec/metrics.hpp"

namespace genrec {

Stage1Result train_stage1(GraphEncoder& encoder, RqVae& rqvae,
                          const InteractionDataset& ds,
                          const ItemFeatureBank& bank,
                          const BipartiteGraph& graph,
                          const Stage1Options& opt) {
  const Tensor features = bank.concat_features();
  const int64_t item_count = ds.item_count;
  const int levels = rqvae.config().levels;
  Rng rng(opt.seed);

  Stage1Result result;
  double best = -1.0;
  int bad_epochs = 0;
  std::map<std::string, Tensor> best_encoder, best_rqvae;
  bool have_first_rqvae = false;

  for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    Rng erng = rng.fork(static_cast<uint64_t>(epoch));
    auto triples = sample_bpr_triples(ds, erng);
    erng.shuffle(triples);
    std::vector<int64_t> item_order(static_cast<size_t>(item_count));
    for (int64_t i = 0; i < item_count; ++i) item_order[static_cast<size_t>(i)] = i;
    erng.shuffle(item_order);

    std::vector<std::vector<int64_t>> usage(
        static_cast<size_t>(levels),
        std::vector<int64_t>(static_cast<size_t>(rqvae.config().codebook_size), 0));

    const int64_t bpr_batches =
        (static_cast<int64_t>(triples.size()) + opt.batch - 1) / opt.batch;
    const int64_t item_batches = (item_count + opt.batch - 1) / opt.batch;
    const int64_t pairs = std::max(bpr_batches, item_batches);

    double epoch_bpr = 0.0, epoch_rqvae = 0.0;
    int64_t bpr_rows = 0, rq_rows = 0;
    GradMap grads;
    for (int64_t b = 0; b < pairs; ++b) {
      {  // BPR step over a triple batch: updates the graph encoder
        const int64_t lo = (b % bpr_batches) * opt.batch;
        const int64_t hi = std::min<int64_t>(lo + opt.batch,
                                             static_cast<int64_t>(triples.size()));
        std::vector<std::array<int64_t, 3>> batch(triples.begin() + lo,
                                                  triples.begin() + hi);
        GraphEncoder::Reps reps = encoder.encode_all(features, graph);
        Var loss = bpr_loss(reps.users, reps.items, batch);
        if (!std::isfinite(loss.value()[0]))
          throw NumericError("stage1 diverged: BPR loss is not finite at epoch " +
                             std::to_string(epoch));
        epoch_bpr += loss.value()[0];
        bpr_rows += static_cast<int64_t>(batch.size());
        grads.clear();
        backward(loss, grads);
        sgd_step(encoder.params(), grads, opt.lr, opt.l2,
                 1.0 / static_cast<double>(batch.size()));
      }
      {  // quantizer step over an item batch: updates the RQ-VAE only
        const int64_t lo = (b % item_batches) * opt.batch;
        const int64_t hi = std::min<int64_t>(lo + opt.batch, item_count);
        std::vector<int64_t> idx(item_order.begin() + lo, item_order.begin() + hi);
        Representations reps = encoder.encode_values(features, graph);
        Tensor h_batch({static_cast<int64_t>(idx.size()), reps.items.cols()});
        for (size_t r = 0; r < idx.size(); ++r)
          for (int64_t j = 0; j < reps.items.cols(); ++j)
            h_batch.at(static_cast<int64_t>(r), j) = reps.items.at(idx[r], j);

        Var h = Var::constant(h_batch);
        Tensor z = rqvae.encode(h).value();
        RqVae::QuantizeResult q = rqvae.quantize(z);
        for (int m = 0; m < levels; ++m)
          for (int32_t c : q.codes[static_cast<size_t>(m)])
            usage[static_cast<size_t>(m)][static_cast<size_t>(c)]++;

        Var loss = rqvae.loss(h, q.codes);
        if (!std::isfinite(loss.value()[0]))
          throw NumericError("stage1 diverged: quantizer loss is not finite at epoch " +
                             std::to_string(epoch));
        if (!have_first_rqvae) {
          result.first_rqvae_loss = loss.value()[0] / static_cast<double>(idx.size());
          have_first_rqvae = true;
        }
        epoch_rqvae += loss.value()[0];
        rq_rows += static_cast<int64_t>(idx.size());
        grads.clear();
        backward(loss, grads);
        sgd_step(rqvae.params(), grads, opt.lr, opt.l2,
                 1.0 / static_cast<double>(idx.size()));
      }
    }

    {  // revive codebook entries nothing selected this epoch
      Representations reps = encoder.encode_values(features, graph);
      Rng rrng = erng.fork(0xdead);
      rqvae.reseed_dead_codes(usage, reps.items, rrng);
    }

    Representations reps = encoder.encode_values(features, graph);
    const double recall =
        inner_product_recall(reps.users, reps.items, ds, opt.eval_k, Split::kValid);
    result.epochs_run = epoch;
    result.last_bpr_loss = epoch_bpr / static_cast<double>(std::max<int64_t>(1, bpr_rows));
    result.last_rqvae_loss = epoch_rqvae / static_cast<double>(std::max<int64_t>(1, rq_rows));
    if (opt.log)
      (*opt.log) << "epoch=" << epoch << " bpr_loss=" << result.last_bpr_loss
                 << " rqvae_loss=" << result.last_rqvae_loss
                 << " valid_recall@" << opt.eval_k << "=" << recall << "\n";

    if (recall > best) {
      best = recall;
      result.best_epoch = epoch;
      best_encoder = snapshot(encoder.params());
      best_rqvae = snapshot(rqvae.params());
      bad_epochs = 0;
    } else if (++bad_epochs >= opt.patience) {
      break;
    }
  }

  if (!best_encoder.empty()) {
    restore(encoder.params(), best_encoder);
    restore(rqvae.params(), best_rqvae);
  }
  result.best_valid_recall = std::max(best, 0.0);
  result.reps = encoder.encode_values(features, graph);
  return result;
}

}  // namespace genrec
