#pragma once

#include <cstdint>
#include <vector>

#include "genrec/autodiff.hpp"
#include "genrec/optim.hpp"
#include "genrec/rec_id.hpp"

namespace genrec {

enum class PosEncoding { kRelation, kSinusoid, kNone };

struct RecModelConfig {
  int64_t dim = 64;       // model width D
  int heads = 4;          // attention heads per layer
  int layers = 2;         // encoder depth == decoder depth
  int64_t ffn_dim = 128;  // feed-forward hidden width
  int64_t max_history = 20;  // encoder positions N
  PosEncoding pos = PosEncoding::kRelation;
  int64_t vocab = 0;      // decoder vocabulary (from TokenVocab::size())
  int id_length = 4;      // tokens generated per item
};

// Encoder input: up to max_history interacted items embedded with the
// frozen item representations, zero rows and mask=0 past the history end.
struct EncodedSequence {
  std::vector<int32_t> items;
  Tensor embedded;            // N x D
  std::vector<uint8_t> mask;  // 1 = real position
};

// Histories longer than max_len are reduced by seeded uniform subsampling
// (interactions carry no order, so there is no recency to prefer).
// Throws DataError on an empty history.
EncodedSequence embed_input(const Tensor& item_reps,
                            const std::vector<int32_t>& interacted,
                            int64_t max_len, Rng& rng);

Tensor sinusoid_table(int64_t positions, int64_t dim);

// Encoder-decoder Transformer generating Rec-ID token sequences. The
// encoder runs relation-aware self-attention: per-head projections plus a
// user-scaled foundational query/key/value triple shared across heads; the
// decoder is a standard autoregressive stack with cross-attention.
class RecModel {
public:
  RecModel(const RecModelConfig& cfg, Rng& rng);

  // user_rep: the user's representation (length D); drives the per-user
  // scalars in relation mode, ignored otherwise.
  Var encode(const Tensor& user_rep, const EncodedSequence& seq) const;

  // Teacher-forced decoder pass: tokens_in starts with BOS; returns
  // T x vocab logits, row t conditioned on tokens_in[0..t].
  Var decode_logits(const Var& memory, const std::vector<uint8_t>& memory_mask,
                    const std::vector<int64_t>& tokens_in) const;

  // Cross-entropy averaged over the target tokens.
  Var sequence_loss(const Var& logits, const std::vector<int64_t>& targets) const;

  // One encoder self-attention sublayer in isolation (no residual, no
  // norm); lets tests pin the fused matrix form against the elementwise
  // definition.
  Var attention_sublayer(const Tensor& user_rep, const Var& x, int layer,
                         const Tensor& mask_add) const;

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const RecModelConfig& config() const { return cfg_; }

  // layout shared with the inference路 path
  struct Attn {
    Parameter *wq, *wk, *wv, *wo;
  };
  struct EncLayer {
    Attn self;
    Parameter *uq, *uk, *uv;  // foundational user matrices (relation mode)
    Parameter *mq_w, *mq_b, *mk_w, *mk_b, *mv_w, *mv_b;  // user scalar maps
    Parameter *ln1_g, *ln1_b, *ln2_g, *ln2_b;
    Parameter *ffn_w1, *ffn_b1, *ffn_w2, *ffn_b2;
  };
  struct DecLayer {
    Attn self, cross;
    Parameter *ln1_g, *ln1_b, *ln2_g, *ln2_b, *ln3_g, *ln3_b;
    Parameter *ffn_w1, *ffn_b1, *ffn_w2, *ffn_b2;
  };
  const std::vector<EncLayer>& encoder_layers() const { return enc_; }
  const std::vector<DecLayer>& decoder_layers() const { return dec_; }
  const Parameter& token_embedding() const { return *tok_emb_; }
  const Parameter& output_weight() const { return *out_w_; }
  const Parameter& output_bias() const { return *out_b_; }

private:
  Var mha(const Var& q_in, const Var& kv_in, const Attn& w, const Tensor& mask_add,
          const Var* user_logits, const Var* user_values) const;
  Var ffn(const Var& x, Parameter* w1, Parameter* b1, Parameter* w2,
          Parameter* b2) const;

  RecModelConfig cfg_;
  ParamStore params_;
  std::vector<EncLayer> enc_;
  std::vector<DecLayer> dec_;
  Parameter* tok_emb_;  // vocab x D
  Parameter* out_w_;    // D x vocab
  Parameter* out_b_;    // vocab
};

// Additive attention masks: 0 where attendable, -1e30 where blocked.
Tensor key_padding_mask(const std::vector<uint8_t>& key_mask, int64_t query_rows);
Tensor causal_mask(int64_t len);

}  // namespace genrec
