#include "genrec/transformer.hpp"

#include <algorithm>
#include <cmath>

namespace genrec {

namespace {
constexpr double kMaskValue = -1e30;
}

EncodedSequence embed_input(const Tensor& item_reps,
                            const std::vector<int32_t>& interacted,
                            int64_t max_len, Rng& rng) {
  if (interacted.empty())
    throw DataError("cannot encode a user with no interactions");
  const int64_t d = item_reps.cols();

  EncodedSequence seq;
  seq.items = interacted;
  if (static_cast<int64_t>(seq.items.size()) > max_len) {
    rng.shuffle(seq.items);
    seq.items.resize(static_cast<size_t>(max_len));
    std::sort(seq.items.begin(), seq.items.end());
  }
  seq.embedded = Tensor({max_len, d});
  seq.mask.assign(static_cast<size_t>(max_len), 0);
  for (size_t p = 0; p < seq.items.size(); ++p) {
    const int32_t item = seq.items[p];
    if (item < 0 || item >= item_reps.rows())
      throw DataError("history item " + std::to_string(item) +
                      " outside the representation table");
    for (int64_t j = 0; j < d; ++j)
      seq.embedded.at(static_cast<int64_t>(p), j) = item_reps.at(item, j);
    seq.mask[p] = 1;
  }
  return seq;
}

Tensor sinusoid_table(int64_t positions, int64_t dim) {
  Tensor pe({positions, dim});
  for (int64_t p = 0; p < positions; ++p) {
    for (int64_t j = 0; j < dim; j += 2) {
      const double angle =
          static_cast<double>(p) /
          std::pow(10000.0, static_cast<double>(j) / static_cast<double>(dim));
      pe.at(p, j) = std::sin(angle);
      if (j + 1 < dim) pe.at(p, j + 1) = std::cos(angle);
    }
  }
  return pe;
}

Tensor key_padding_mask(const std::vector<uint8_t>& key_mask, int64_t query_rows) {
  const int64_t n = static_cast<int64_t>(key_mask.size());
  Tensor m({query_rows, n});
  for (int64_t i = 0; i < query_rows; ++i)
    for (int64_t j = 0; j < n; ++j)
      if (!key_mask[static_cast<size_t>(j)]) m.at(i, j) = kMaskValue;
  return m;
}

Tensor causal_mask(int64_t len) {
  Tensor m({len, len});
  for (int64_t i = 0; i < len; ++i)
    for (int64_t j = i + 1; j < len; ++j) m.at(i, j) = kMaskValue;
  return m;
}

RecModel::RecModel(const RecModelConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.dim % cfg.heads != 0)
    throw NumericError("model width " + std::to_string(cfg.dim) +
                       " not divisible by " + std::to_string(cfg.heads) + " heads");
  if (cfg.layers < 1) throw NumericError("need at least one layer");
  if (cfg.vocab <= 0) throw NumericError("vocabulary size not set");

  const int64_t d = cfg.dim, f = cfg.ffn_dim;
  auto attn = [&](const std::string& p) {
    return Attn{&params_.create(p + ".wq", xavier_init({d, d}, rng)),
                &params_.create(p + ".wk", xavier_init({d, d}, rng)),
                &params_.create(p + ".wv", xavier_init({d, d}, rng)),
                &params_.create(p + ".wo", xavier_init({d, d}, rng))};
  };
  auto ones = [&](const std::string& n) {
    return &params_.create(n, Tensor::full({d}, 1.0));
  };
  auto zeros = [&](const std::string& n, std::vector<int64_t> shape) {
    return &params_.create(n, Tensor(std::move(shape)));
  };

  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "enc." + std::to_string(l);
    EncLayer L{};
    L.self = attn(p + ".self");
    if (cfg.pos == PosEncoding::kRelation) {
      L.uq = &params_.create(p + ".uq", xavier_init({d, d}, rng));
      L.uk = &params_.create(p + ".uk", xavier_init({d, d}, rng));
      L.uv = &params_.create(p + ".uv", xavier_init({d, d}, rng));
      L.mq_w = &params_.create(p + ".mq.w", xavier_init({d, 1}, rng));
      L.mq_b = zeros(p + ".mq.b", {1});
      L.mk_w = &params_.create(p + ".mk.w", xavier_init({d, 1}, rng));
      L.mk_b = zeros(p + ".mk.b", {1});
      L.mv_w = &params_.create(p + ".mv.w", xavier_init({d, 1}, rng));
      L.mv_b = zeros(p + ".mv.b", {1});
    }
    L.ln1_g = ones(p + ".ln1.g");
    L.ln1_b = zeros(p + ".ln1.b", {d});
    L.ln2_g = ones(p + ".ln2.g");
    L.ln2_b = zeros(p + ".ln2.b", {d});
    L.ffn_w1 = &params_.create(p + ".ffn.w1", xavier_init({d, f}, rng));
    L.ffn_b1 = zeros(p + ".ffn.b1", {f});
    L.ffn_w2 = &params_.create(p + ".ffn.w2", xavier_init({f, d}, rng));
    L.ffn_b2 = zeros(p + ".ffn.b2", {d});
    enc_.push_back(L);
  }

  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "dec." + std::to_string(l);
    DecLayer L{};
    L.self = attn(p + ".self");
    L.cross = attn(p + ".cross");
    L.ln1_g = ones(p + ".ln1.g");
    L.ln1_b = zeros(p + ".ln1.b", {d});
    L.ln2_g = ones(p + ".ln2.g");
    L.ln2_b = zeros(p + ".ln2.b", {d});
    L.ln3_g = ones(p + ".ln3.g");
    L.ln3_b = zeros(p + ".ln3.b", {d});
    L.ffn_w1 = &params_.create(p + ".ffn.w1", xavier_init({d, f}, rng));
    L.ffn_b1 = zeros(p + ".ffn.b1", {f});
    L.ffn_w2 = &params_.create(p + ".ffn.w2", xavier_init({f, d}, rng));
    L.ffn_b2 = zeros(p + ".ffn.b2", {d});
    dec_.push_back(L);
  }

  tok_emb_ = &params_.create("tok_emb", xavier_init({cfg.vocab, d}, rng));
  out_w_ = &params_.create("out.w", xavier_init({d, cfg.vocab}, rng));
  out_b_ = &params_.create("out.b", Tensor({cfg.vocab}));
}

Var RecModel::mha(const Var& q_in, const Var& kv_in, const Attn& w,
                  const Tensor& mask_add, const Var* user_logits,
                  const Var* user_values) const {
  const int64_t d = cfg_.dim;
  const int64_t dh = d / cfg_.heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  Var q = matmul(q_in, Var::leaf(*w.wq));
  Var k = matmul(kv_in, Var::leaf(*w.wk));
  Var v = matmul(kv_in, Var::leaf(*w.wv));

  std::vector<Var> heads;
  heads.reserve(static_cast<size_t>(cfg_.heads));
  for (int a = 0; a < cfg_.heads; ++a) {
    Var logits = matmul_nt(slice_cols(q, a * dh, dh), slice_cols(k, a * dh, dh));
    if (user_logits) logits = add(logits, *user_logits);
    logits = add_constant(scale_const(logits, inv_sqrt_dh), mask_add);
    Var alpha = softmax_rows(logits);
    Var values = slice_cols(v, a * dh, dh);
    if (user_values) values = add(values, slice_cols(*user_values, a * dh, dh));
    heads.push_back(matmul(alpha, values));
  }
  return matmul(concat_cols(heads), Var::leaf(*w.wo));
}

Var RecModel::ffn(const Var& x, Parameter* w1, Parameter* b1, Parameter* w2,
                  Parameter* b2) const {
  Var h = leaky_relu(add_rowvec(matmul(x, Var::leaf(*w1)), Var::leaf(*b1)));
  return add_rowvec(matmul(h, Var::leaf(*w2)), Var::leaf(*b2));
}

Var RecModel::attention_sublayer(const Tensor& user_rep, const Var& x, int layer,
                                 const Tensor& mask_add) const {
  const EncLayer& L = enc_[static_cast<size_t>(layer)];
  const bool relation = cfg_.pos == PosEncoding::kRelation;
  Var user_logits, user_values;
  if (relation) {
    if (user_rep.size() != cfg_.dim)
      throw ShapeError("encode: user representation " + user_rep.shape_str() +
                       " vs (" + std::to_string(cfg_.dim) + ")");
    Tensor row({1, cfg_.dim});
    for (int64_t j = 0; j < cfg_.dim; ++j) row[j] = user_rep[j];
    Var hu = Var::constant(std::move(row));
    // user scalar gates on the shared foundational projections
    Var sq = add_rowvec(matmul(hu, Var::leaf(*L.mq_w)), Var::leaf(*L.mq_b));
    Var sk = add_rowvec(matmul(hu, Var::leaf(*L.mk_w)), Var::leaf(*L.mk_b));
    Var sv = add_rowvec(matmul(hu, Var::leaf(*L.mv_w)), Var::leaf(*L.mv_b));
    Var qu = scale(matmul(x, Var::leaf(*L.uq)), sq);
    Var ku = scale(matmul(x, Var::leaf(*L.uk)), sk);
    user_values = scale(matmul(x, Var::leaf(*L.uv)), sv);
    user_logits = matmul_nt(qu, ku);
  }
  return mha(x, x, L.self, mask_add, relation ? &user_logits : nullptr,
             relation ? &user_values : nullptr);
}

Var RecModel::encode(const Tensor& user_rep, const EncodedSequence& seq) const {
  bool any = false;
  for (uint8_t m : seq.mask) any |= (m != 0);
  if (!any) throw NumericError("encode: all positions masked");

  Var x = Var::constant(seq.embedded);
  if (cfg_.pos == PosEncoding::kSinusoid)
    x = add_constant(x, sinusoid_table(seq.embedded.rows(), cfg_.dim));
  const Tensor mask_add = key_padding_mask(seq.mask, seq.embedded.rows());

  for (int l = 0; l < cfg_.layers; ++l) {
    const EncLayer& L = enc_[static_cast<size_t>(l)];
    Var attn = attention_sublayer(user_rep, x, l, mask_add);
    x = layer_norm(add(x, attn), Var::leaf(*L.ln1_g), Var::leaf(*L.ln1_b));
    Var f = ffn(x, L.ffn_w1, L.ffn_b1, L.ffn_w2, L.ffn_b2);
    x = layer_norm(add(x, f), Var::leaf(*L.ln2_g), Var::leaf(*L.ln2_b));
  }
  return x;
}

Var RecModel::decode_logits(const Var& memory,
                            const std::vector<uint8_t>& memory_mask,
                            const std::vector<int64_t>& tokens_in) const {
  if (tokens_in.empty()) throw NumericError("decode: empty token prefix");
  const int64_t t = static_cast<int64_t>(tokens_in.size());

  Var x = gather_rows(Var::leaf(*tok_emb_), tokens_in);
  x = add_constant(x, sinusoid_table(t, cfg_.dim));
  const Tensor self_mask = causal_mask(t);
  const Tensor cross_mask = key_padding_mask(memory_mask, t);

  for (const DecLayer& L : dec_) {
    Var attn = mha(x, x, L.self, self_mask, nullptr, nullptr);
    x = layer_norm(add(x, attn), Var::leaf(*L.ln1_g), Var::leaf(*L.ln1_b));
    Var cross = mha(x, memory, L.cross, cross_mask, nullptr, nullptr);
    x = layer_norm(add(x, cross), Var::leaf(*L.ln2_g), Var::leaf(*L.ln2_b));
    Var f = ffn(x, L.ffn_w1, L.ffn_b1, L.ffn_w2, L.ffn_b2);
    x = layer_norm(add(x, f), Var::leaf(*L.ln3_g), Var::leaf(*L.ln3_b));
  }
  return add_rowvec(matmul(x, Var::leaf(*out_w_)), Var::leaf(*out_b_));
}

Var RecModel::sequence_loss(const Var& logits,
                            const std::vector<int64_t>& targets) const {
  if (logits.value().rows() != static_cast<int64_t>(targets.size()))
    throw ShapeError("sequence_loss: logits " + logits.value().shape_str() +
                     " vs " + std::to_string(targets.size()) + " targets");
  Var picked = gather_cols_per_row(log_softmax_rows(logits), targets);
  return neg(mean_all(picked));
}

}  // namespace genrec
