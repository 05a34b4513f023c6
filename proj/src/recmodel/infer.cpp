#include "genrec/infer.hpp"

#include <cmath>
#include <cstring>

#include "genrec/kernels.hpp"

namespace genrec {

namespace {
constexpr double kMaskValue = -1e30;

Tensor matmul_t(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), b.cols()});
  gemm_nn(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols(), false);
  return out;
}

void add_inplace(Tensor& a, const Tensor& b) {
  axpy(1.0, b.data(), a.data(), a.size());
}

void add_rowvec_inplace(Tensor& a, const Tensor& b) {
  for (int64_t r = 0; r < a.rows(); ++r)
    axpy(1.0, b.data(), a.data() + r * a.cols(), a.cols());
}

void lrelu_inplace(Tensor& a, double slope = 0.01) {
  for (int64_t i = 0; i < a.size(); ++i)
    if (a[i] < 0.0) a[i] *= slope;
}

// identical arithmetic to the autodiff layer_norm forward
Tensor layer_norm_t(const Tensor& x, const Tensor& g, const Tensor& b,
                    double eps = 1e-5) {
  const int64_t rows = x.rows(), cols = x.cols();
  Tensor out(x.shape());
  for (int64_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * cols;
    double mean = 0.0;
    for (int64_t j = 0; j < cols; ++j) mean += xr[j];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (int64_t j = 0; j < cols; ++j) {
      const double d = xr[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    const double is = 1.0 / std::sqrt(var + eps);
    for (int64_t j = 0; j < cols; ++j)
      out.at(r, j) = (xr[j] - mean) * is * g[j] + b[j];
  }
  return out;
}

void softmax_span(double* x, int64_t n) {
  double mx = x[0];
  for (int64_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
  double sum = 0.0;
  for (int64_t j = 0; j < n; ++j) sum += std::exp(x[j] - mx);
  for (int64_t j = 0; j < n; ++j) x[j] = std::exp(x[j] - mx) / sum;
}

Tensor ffn_t(const Tensor& x, const Parameter* w1, const Parameter* b1,
             const Parameter* w2, const Parameter* b2) {
  Tensor h = matmul_t(x, w1->value);
  add_rowvec_inplace(h, b1->value);
  lrelu_inplace(h);
  Tensor out = matmul_t(h, w2->value);
  add_rowvec_inplace(out, b2->value);
  return out;
}

double user_scalar(const Tensor& user_rep, const Parameter* w, const Parameter* b) {
  return dot(user_rep.data(), w->value.data(), user_rep.size()) + b->value[0];
}

void scale_inplace(Tensor& t, double s) {
  for (int64_t i = 0; i < t.size(); ++i) t[i] *= s;
}
}  // namespace

InferenceModel::Memory InferenceModel::encode(const Tensor& user_rep,
                                              const EncodedSequence& seq) const {
  const RecModelConfig& cfg = model_->config();
  const int64_t n = seq.embedded.rows(), d = cfg.dim;
  const int64_t dh = d / cfg.heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool relation = cfg.pos == PosEncoding::kRelation;

  bool any = false;
  for (uint8_t m : seq.mask) any |= (m != 0);
  if (!any) throw NumericError("encode: all positions masked");

  Tensor x = seq.embedded;
  if (cfg.pos == PosEncoding::kSinusoid) add_inplace(x, sinusoid_table(n, d));

  Tensor alpha({n, n});
  for (const RecModel::EncLayer& L : model_->encoder_layers()) {
    Tensor q = matmul_t(x, L.self.wq->value);
    Tensor k = matmul_t(x, L.self.wk->value);
    Tensor v = matmul_t(x, L.self.wv->value);

    Tensor user_logits, vu;
    if (relation) {
      const double sq = user_scalar(user_rep, L.mq_w, L.mq_b);
      const double sk = user_scalar(user_rep, L.mk_w, L.mk_b);
      const double sv = user_scalar(user_rep, L.mv_w, L.mv_b);
      Tensor qu = matmul_t(x, L.uq->value);
      scale_inplace(qu, sq);
      Tensor ku = matmul_t(x, L.uk->value);
      scale_inplace(ku, sk);
      vu = matmul_t(x, L.uv->value);
      scale_inplace(vu, sv);
      user_logits = Tensor({n, n});
      gemm_nt(qu.data(), ku.data(), user_logits.data(), n, d, n, false);
    }

    Tensor attn({n, d});
    Tensor vsum({n, dh});
    for (int a = 0; a < cfg.heads; ++a) {
      const int64_t off = a * dh;
      for (int64_t i = 0; i < n; ++i) {
        double* row = alpha.data() + i * n;
        const double* qi = q.data() + i * d + off;
        for (int64_t j = 0; j < n; ++j) {
          double s = dot(qi, k.data() + j * d + off, dh);
          if (relation) s += user_logits.at(i, j);
          s *= inv_sqrt_dh;
          if (!seq.mask[static_cast<size_t>(j)]) s += kMaskValue;
          row[j] = s;
        }
        softmax_span(row, n);
      }
      for (int64_t j = 0; j < n; ++j)
        for (int64_t p = 0; p < dh; ++p)
          vsum.at(j, p) = v.at(j, off + p) + (relation ? vu.at(j, off + p) : 0.0);
      // head output written into its column block
      for (int64_t i = 0; i < n; ++i) {
        double* out = attn.data() + i * d + off;
        std::memset(out, 0, sizeof(double) * static_cast<size_t>(dh));
        const double* ar = alpha.data() + i * n;
        for (int64_t j = 0; j < n; ++j)
          axpy(ar[j], vsum.data() + j * dh, out, dh);
      }
    }

    Tensor attn_out = matmul_t(attn, L.self.wo->value);
    add_inplace(attn_out, x);
    x = layer_norm_t(attn_out, L.ln1_g->value, L.ln1_b->value);
    Tensor f = ffn_t(x, L.ffn_w1, L.ffn_b1, L.ffn_w2, L.ffn_b2);
    add_inplace(f, x);
    x = layer_norm_t(f, L.ln2_g->value, L.ln2_b->value);
  }

  Memory mem;
  mem.mask = seq.mask;
  for (const RecModel::DecLayer& L : model_->decoder_layers()) {
    mem.cross_k.push_back(matmul_t(x, L.cross.wk->value));
    mem.cross_v.push_back(matmul_t(x, L.cross.wv->value));
  }
  mem.states = std::move(x);
  return mem;
}

InferenceModel::DecodeState InferenceModel::start_state(int64_t beams) const {
  DecodeState st;
  st.beams = beams;
  const RecModelConfig& cfg = model_->config();
  const size_t cache = static_cast<size_t>(beams * cfg.id_length * cfg.dim);
  st.self_k.assign(static_cast<size_t>(cfg.layers), std::vector<double>(cache, 0.0));
  st.self_v = st.self_k;
  return st;
}

void InferenceModel::decoder_layer_step(const Memory& mem, DecodeState& st,
                                        int layer, Tensor& x) const {
  const RecModelConfig& cfg = model_->config();
  const RecModel::DecLayer& L = model_->decoder_layers()[static_cast<size_t>(layer)];
  const int64_t b_count = st.beams, d = cfg.dim, t = st.steps;
  const int64_t dh = d / cfg.heads;
  const int64_t cap = cfg.id_length;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  // causal self-attention over this beam's cached positions
  Tensor q = matmul_t(x, L.self.wq->value);
  Tensor k = matmul_t(x, L.self.wk->value);
  Tensor v = matmul_t(x, L.self.wv->value);
  auto& kc = st.self_k[static_cast<size_t>(layer)];
  auto& vc = st.self_v[static_cast<size_t>(layer)];
  for (int64_t b = 0; b < b_count; ++b) {
    std::memcpy(&kc[static_cast<size_t>(((b * cap) + t) * d)], k.data() + b * d,
                sizeof(double) * static_cast<size_t>(d));
    std::memcpy(&vc[static_cast<size_t>(((b * cap) + t) * d)], v.data() + b * d,
                sizeof(double) * static_cast<size_t>(d));
  }

  Tensor attn({b_count, d});
  std::vector<double> scores(static_cast<size_t>(t + 1));
  for (int64_t b = 0; b < b_count; ++b) {
    for (int a = 0; a < cfg.heads; ++a) {
      const int64_t off = a * dh;
      const double* qb = q.data() + b * d + off;
      for (int64_t tau = 0; tau <= t; ++tau)
        scores[static_cast<size_t>(tau)] =
            dot(qb, &kc[static_cast<size_t>(((b * cap) + tau) * d + off)], dh) *
            inv_sqrt_dh;
      softmax_span(scores.data(), t + 1);
      double* out = attn.data() + b * d + off;
      for (int64_t tau = 0; tau <= t; ++tau)
        axpy(scores[static_cast<size_t>(tau)],
             &vc[static_cast<size_t>(((b * cap) + tau) * d + off)], out, dh);
    }
  }
  Tensor h = matmul_t(attn, L.self.wo->value);
  add_inplace(h, x);
  x = layer_norm_t(h, L.ln1_g->value, L.ln1_b->value);

  // cross-attention to the encoder memory
  const Tensor& ck = mem.cross_k[static_cast<size_t>(layer)];
  const Tensor& cv = mem.cross_v[static_cast<size_t>(layer)];
  const int64_t n = ck.rows();
  Tensor q2 = matmul_t(x, L.cross.wq->value);
  Tensor cross({b_count, d});
  std::vector<double> cscores(static_cast<size_t>(n));
  for (int64_t b = 0; b < b_count; ++b) {
    for (int a = 0; a < cfg.heads; ++a) {
      const int64_t off = a * dh;
      const double* qb = q2.data() + b * d + off;
      for (int64_t j = 0; j < n; ++j) {
        double s = dot(qb, ck.data() + j * d + off, dh) * inv_sqrt_dh;
        if (!mem.mask[static_cast<size_t>(j)]) s += kMaskValue;
        cscores[static_cast<size_t>(j)] = s;
      }
      softmax_span(cscores.data(), n);
      double* out = cross.data() + b * d + off;
      for (int64_t j = 0; j < n; ++j)
        axpy(cscores[static_cast<size_t>(j)], cv.data() + j * d + off, out, dh);
    }
  }
  Tensor h2 = matmul_t(cross, L.cross.wo->value);
  add_inplace(h2, x);
  x = layer_norm_t(h2, L.ln2_g->value, L.ln2_b->value);

  Tensor f = ffn_t(x, L.ffn_w1, L.ffn_b1, L.ffn_w2, L.ffn_b2);
  add_inplace(f, x);
  x = layer_norm_t(f, L.ln3_g->value, L.ln3_b->value);
}

Tensor InferenceModel::step(const Memory& mem, DecodeState& st,
                            const std::vector<int64_t>& tokens) const {
  const RecModelConfig& cfg = model_->config();
  if (static_cast<int64_t>(tokens.size()) != st.beams)
    throw NumericError("decode step: expected one token per beam");
  if (st.steps >= cfg.id_length)
    throw NumericError("decode step: sequence already complete");

  const int64_t d = cfg.dim;
  const Tensor& emb = model_->token_embedding().value;
  const Tensor pe = sinusoid_table(st.steps + 1, d);
  Tensor x({st.beams, d});
  for (int64_t b = 0; b < st.beams; ++b) {
    const int64_t tok = tokens[static_cast<size_t>(b)];
    if (tok < 0 || tok >= emb.rows())
      throw NumericError("decode step: token " + std::to_string(tok) +
                         " outside vocabulary");
    for (int64_t j = 0; j < d; ++j)
      x.at(b, j) = emb.at(tok, j) + pe.at(st.steps, j);
  }

  for (int l = 0; l < cfg.layers; ++l) decoder_layer_step(mem, st, l, x);
  st.steps++;

  Tensor logits = matmul_t(x, model_->output_weight().value);
  add_rowvec_inplace(logits, model_->output_bias().value);
  return logits;
}

void InferenceModel::reorder(DecodeState& st, const std::vector<int64_t>& parents) const {
  const RecModelConfig& cfg = model_->config();
  const int64_t cap = cfg.id_length, d = cfg.dim;
  const int64_t nb = static_cast<int64_t>(parents.size());
  DecodeState next = st;
  next.beams = nb;
  for (size_t l = 0; l < st.self_k.size(); ++l) {
    next.self_k[l].assign(static_cast<size_t>(nb * cap * d), 0.0);
    next.self_v[l].assign(static_cast<size_t>(nb * cap * d), 0.0);
    for (int64_t b = 0; b < nb; ++b) {
      const int64_t p = parents[static_cast<size_t>(b)];
      if (p < 0 || p >= st.beams) throw NumericError("reorder: bad parent index");
      std::memcpy(&next.self_k[l][static_cast<size_t>(b * cap * d)],
                  &st.self_k[l][static_cast<size_t>(p * cap * d)],
                  sizeof(double) * static_cast<size_t>(st.steps * d));
      std::memcpy(&next.self_v[l][static_cast<size_t>(b * cap * d)],
                  &st.self_v[l][static_cast<size_t>(p * cap * d)],
                  sizeof(double) * static_cast<size_t>(st.steps * d));
    }
  }
  st = std::move(next);
}

Tensor InferenceModel::forced_logits(const Memory& mem,
                                     const std::vector<int64_t>& tokens_in) const {
  const int64_t t = static_cast<int64_t>(tokens_in.size());
  const int64_t v = model_->config().vocab;
  DecodeState st = start_state(1);
  Tensor out({t, v});
  for (int64_t p = 0; p < t; ++p) {
    Tensor row = step(mem, st, {tokens_in[static_cast<size_t>(p)]});
    std::memcpy(out.data() + p * v, row.data(), sizeof(double) * static_cast<size_t>(v));
  }
  return out;
}

}  // namespace genrec
