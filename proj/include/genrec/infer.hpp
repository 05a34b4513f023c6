#pragma once

#include <cstdint>
#include <vector>

#include "genrec/transformer.hpp"

namespace genrec {

// Plain-tensor forward path over a frozen RecModel: no graph bookkeeping,
// cached cross-attention projections, and an incremental decoder with
// per-beam key/value caches. Used for generation, scoring and the
// inference benchmark; the unit tests pin it against the autodiff path.
class InferenceModel {
public:
  explicit InferenceModel(const RecModel& model) : model_(&model) {}

  struct Memory {
    Tensor states;              // N x D encoder output
    std::vector<uint8_t> mask;  // encoder padding mask
    std::vector<Tensor> cross_k;  // per decoder layer, N x D
    std::vector<Tensor> cross_v;
  };

  Memory encode(const Tensor& user_rep, const EncodedSequence& seq) const;

  struct DecodeState {
    int64_t beams = 0;
    int64_t steps = 0;
    // per layer, rows laid out beam-major: (b * capacity + t) * dim
    std::vector<std::vector<double>> self_k, self_v;
  };

  DecodeState start_state(int64_t beams) const;
  // One token per beam; returns beams x vocab logits for the new position.
  Tensor step(const Memory& mem, DecodeState& st,
              const std::vector<int64_t>& tokens) const;
  // Re-index beams after pruning: new beam b continues old beam parents[b].
  void reorder(DecodeState& st, const std::vector<int64_t>& parents) const;

  // Teacher-forced logits for a full prefix (T x vocab).
  Tensor forced_logits(const Memory& mem,
                       const std::vector<int64_t>& tokens_in) const;

  const RecModelConfig& config() const { return model_->config(); }

private:
  void decoder_layer_step(const Memory& mem, DecodeState& st, int layer,
                          Tensor& x) const;

  const RecModel* model_;
};

}  // namespace genrec
