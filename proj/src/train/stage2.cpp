#include "genrec/stage2.hpp"

#include <algorithm>
#include <cmath>

#include "genrec/checkpoint.hpp"
#include "genrec/infer.hpp"
#include "genrec/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace genrec {

namespace {

struct Instance {
  int32_t user;
  int32_t item;
};

// per-instance stream so subsampling does not depend on thread scheduling
Rng instance_rng(uint64_t seed, int epoch, const Instance& in, int64_t item_count) {
  return Rng(seed)
      .fork(static_cast<uint64_t>(epoch))
      .fork(static_cast<uint64_t>(in.user) * static_cast<uint64_t>(item_count) +
            static_cast<uint64_t>(in.item) + 1);
}

}  // namespace

Stage2Result train_stage2(RecModel& model, const Representations& reps,
                          const RecIdRegistry& registry,
                          const InteractionDataset& ds,
                          const Stage2Options& opt) {
  std::vector<Instance> instances;
  for (int64_t u = 0; u < ds.user_count; ++u) {
    const auto& items = ds.train_items[static_cast<size_t>(u)];
    if (items.size() < 2) continue;  // need a non-empty history after holdout
    for (int32_t i : items)
      instances.push_back({static_cast<int32_t>(u), i});
  }
  if (instances.empty())
    throw DataError("stage2: no trainable instances (users need >= 2 train items)");

  const int64_t d = model.config().dim;
  const int64_t n_hist = model.config().max_history;
  Rng rng(opt.seed);

  Stage2Result result;
  double best = -1.0;
  int bad_epochs = 0;
  std::map<std::string, Tensor> best_params;

  const int max_threads = num_threads();
  std::vector<GradMap> thread_grads(static_cast<size_t>(max_threads));
  std::vector<double> thread_loss(static_cast<size_t>(max_threads), 0.0);

  for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    Rng erng = rng.fork(static_cast<uint64_t>(epoch));
    erng.shuffle(instances);

    double epoch_loss = 0.0;
    for (size_t lo = 0; lo < instances.size(); lo += static_cast<size_t>(opt.batch)) {
      const size_t hi = std::min(instances.size(), lo + static_cast<size_t>(opt.batch));
      for (auto& g : thread_grads) g.clear();
      std::fill(thread_loss.begin(), thread_loss.end(), 0.0);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads)
#endif
      for (int64_t idx = static_cast<int64_t>(lo); idx < static_cast<int64_t>(hi); ++idx) {
#ifdef _OPENMP
        const int tid = omp_get_thread_num();
#else
        const int tid = 0;
#endif
        const Instance& in = instances[static_cast<size_t>(idx)];
        std::vector<int32_t> history;
        history.reserve(ds.train_items[static_cast<size_t>(in.user)].size());
        for (int32_t it : ds.train_items[static_cast<size_t>(in.user)])
          if (it != in.item) history.push_back(it);

        Rng irng = instance_rng(opt.seed, epoch, in, ds.item_count);
        EncodedSequence seq = embed_input(reps.items, history, n_hist, irng);
        Tensor user_rep({d});
        for (int64_t j = 0; j < d; ++j) user_rep[j] = reps.users.at(in.user, j);

        const std::vector<int64_t> tokens = registry.tokens_of(in.item);
        std::vector<int64_t> tokens_in;
        tokens_in.push_back(registry.vocab().bos());
        tokens_in.insert(tokens_in.end(), tokens.begin(), tokens.end() - 1);

        Var memory = model.encode(user_rep, seq);
        Var logits = model.decode_logits(memory, seq.mask, tokens_in);
        Var loss = model.sequence_loss(logits, tokens);
        thread_loss[static_cast<size_t>(tid)] += loss.value()[0];
        backward(loss, thread_grads[static_cast<size_t>(tid)]);
      }

      GradMap& total = thread_grads[0];
      for (int t = 1; t < max_threads; ++t) total.add(thread_grads[static_cast<size_t>(t)]);
      double batch_loss = 0.0;
      for (double l : thread_loss) batch_loss += l;
      if (!std::isfinite(batch_loss))
        throw NumericError("stage2 diverged: loss is not finite at epoch " +
                           std::to_string(epoch));
      epoch_loss += batch_loss;
      sgd_step(model.params(), total, opt.lr, opt.l2,
               1.0 / static_cast<double>(hi - lo));
    }

    result.epochs_run = epoch;
    result.last_loss = epoch_loss / static_cast<double>(instances.size());
    result.epoch_losses.push_back(result.last_loss);

    if (epoch % opt.eval_every == 0) {
      InferenceModel infer(model);
      GenEvalOptions ge;
      ge.k = opt.eval_k;
      ge.target = opt.eval_target;
      ge.exclude_seen = opt.exclude_seen_eval;
      ge.max_history = n_hist;
      ge.seed = opt.seed;
      const double metric = evaluate_generative(infer, reps, registry, ds, ge).recall;
      if (opt.log)
        (*opt.log) << "epoch=" << epoch << " loss=" << result.last_loss
                   << " recall@" << opt.eval_k << "=" << metric << "\n";
      if (metric > best) {
        best = metric;
        result.best_epoch = epoch;
        best_params = snapshot(model.params());
        bad_epochs = 0;
      } else if (++bad_epochs >= opt.patience) {
        break;
      }
      if (metric >= opt.stop_at_metric) break;
    } else if (opt.log) {
      (*opt.log) << "epoch=" << epoch << " loss=" << result.last_loss << "\n";
    }
  }

  if (!best_params.empty()) restore(model.params(), best_params);
  result.best_metric = std::max(best, 0.0);
  return result;
}

}  // namespace genrec
