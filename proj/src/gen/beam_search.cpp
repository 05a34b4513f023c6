#include "genrec/beam_search.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace genrec {

namespace {

// log softmax of one logits row at position `tok`
void log_softmax_row_inplace(double* x, int64_t n) {
  double mx = x[0];
  for (int64_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
  double sum = 0.0;
  for (int64_t j = 0; j < n; ++j) sum += std::exp(x[j] - mx);
  const double lse = mx + std::log(sum);
  for (int64_t j = 0; j < n; ++j) x[j] -= lse;
}

struct Beam {
  std::vector<int64_t> tokens;
  double logp = 0.0;
};

bool beam_less(const Beam& a, const Beam& b) {
  if (a.logp != b.logp) return a.logp > b.logp;
  return a.tokens < b.tokens;  // lexicographic tie rule
}

}  // namespace

BeamSearchResult beam_search(const InferenceModel& model,
                             const InferenceModel::Memory& memory,
                             const RecIdRegistry& registry, int64_t k,
                             const std::vector<int32_t>& exclude, int64_t width) {
  if (k < 1) throw NumericError("beam_search: k must be positive");
  const TokenVocab& vocab = registry.vocab();
  const int steps = vocab.id_length();
  int64_t w = width > 0 ? width : k + static_cast<int64_t>(exclude.size());
  w = std::max(w, k);

  std::vector<Beam> beams(1);
  InferenceModel::DecodeState state = model.start_state(1);

  for (int step = 0; step < steps; ++step) {
    // feed BOS for the empty prefixes, otherwise each beam's last token
    std::vector<int64_t> feed(beams.size());
    for (size_t b = 0; b < beams.size(); ++b)
      feed[b] = step == 0 ? vocab.bos() : beams[b].tokens.back();
    Tensor logits = model.step(memory, state, feed);
    const int64_t v = logits.cols();

    std::vector<Beam> candidates;
    std::vector<int64_t> parents;
    for (size_t b = 0; b < beams.size(); ++b) {
      double* row = logits.data() + static_cast<int64_t>(b) * v;
      log_softmax_row_inplace(row, v);
      for (int64_t tok : registry.valid_next_tokens(beams[b].tokens)) {
        Beam cand;
        cand.tokens = beams[b].tokens;
        cand.tokens.push_back(tok);
        cand.logp = beams[b].logp + row[tok];
        candidates.push_back(std::move(cand));
        parents.push_back(static_cast<int64_t>(b));
      }
    }
    if (candidates.empty())
      throw NumericError("beam_search: no valid continuation (empty trie?)");

    // stable top-w by score, ties by token sequence
    std::vector<size_t> order(candidates.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    const size_t keep = std::min<size_t>(static_cast<size_t>(w), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<int64_t>(keep),
                      order.end(), [&](size_t a, size_t b) {
                        return beam_less(candidates[a], candidates[b]);
                      });
    std::vector<Beam> next;
    std::vector<int64_t> next_parents;
    next.reserve(keep);
    for (size_t i = 0; i < keep; ++i) {
      next.push_back(std::move(candidates[order[i]]));
      next_parents.push_back(parents[order[i]]);
    }
    model.reorder(state, next_parents);
    beams = std::move(next);
  }

  std::unordered_set<int64_t> excluded(exclude.begin(), exclude.end());
  BeamSearchResult out;
  std::sort(beams.begin(), beams.end(), beam_less);
  for (const Beam& b : beams) {
    auto item = registry.item_of(b.tokens);
    if (!item)
      throw NumericError("beam_search produced a token sequence that is not a Rec-ID");
    if (excluded.count(*item)) continue;
    out.items.push_back(*item);
    out.scores.push_back(b.logp);
    if (static_cast<int64_t>(out.items.size()) == k) break;
  }
  out.exhausted = static_cast<int64_t>(out.items.size()) < k;
  return out;
}

double score_rec_id(const InferenceModel& model,
                    const InferenceModel::Memory& memory,
                    const RecIdRegistry& registry, int64_t item) {
  if (item < 0 || item >= registry.item_count())
    throw DataError("score_rec_id: unknown item " + std::to_string(item));
  const std::vector<int64_t> tokens = registry.tokens_of(item);
  std::vector<int64_t> tokens_in;
  tokens_in.push_back(registry.vocab().bos());
  tokens_in.insert(tokens_in.end(), tokens.begin(), tokens.end() - 1);

  Tensor logits = model.forced_logits(memory, tokens_in);
  const int64_t v = logits.cols();
  double total = 0.0;
  for (size_t t = 0; t < tokens.size(); ++t) {
    double* row = logits.data() + static_cast<int64_t>(t) * v;
    log_softmax_row_inplace(row, v);
    total += row[tokens[t]];
  }
  return total;
}

}  // namespace genrec
