#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genrec/autodiff.hpp"
#include "genrec/optim.hpp"

namespace genrec {

struct RqVaeConfig {
  int64_t input_dim = 64;      // representation width D
  int64_t latent_dim = 32;     // encoder output width
  int64_t hidden_dim = 64;     // MLP hidden width
  int levels = 3;              // quantization stages (tokens per item)
  int64_t codebook_size = 128; // entries per level
  double beta = 0.25;          // commitment weight
};

// Residual quantizer with MLP encoder/decoder and one codebook per level.
// Training uses the straight-through estimator: the decoder sees the
// quantized latent, gradients reach the encoder as if it saw the raw one.
class RqVae {
public:
  RqVae(const RqVaeConfig& cfg, Rng& rng);

  Var encode(const Var& h) const;  // B x D -> B x latent_dim
  Var decode(const Var& x) const;  // B x latent_dim -> B x D

  struct QuantizeResult {
    std::vector<std::vector<int32_t>> codes;  // [level][row]
    Tensor quantized;       // sum of selected codewords, B x latent_dim
    Tensor final_residual;  // what the levels left unexplained
  };
  QuantizeResult quantize(const Tensor& z) const;

  // Full training objective for a batch: reconstruction plus per-level
  // codebook and commitment terms; sums over rows.
  Var loss(const Var& h, const std::vector<std::vector<int32_t>>& codes) const;

  // Codewords per item, [item][level]; forward only.
  std::vector<std::vector<int32_t>> assign_codewords(const Tensor& h_items) const;

  // Replace codebook entries that went unselected for a whole epoch with
  // residuals of randomly chosen rows of `h_sample`.
  // usage[level][entry] = selection count. Returns entries reseeded.
  int64_t reseed_dead_codes(const std::vector<std::vector<int64_t>>& usage,
                            const Tensor& h_sample, Rng& rng);

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const RqVaeConfig& config() const { return cfg_; }
  const Tensor& codebook(int level) const { return codebooks_[level]->value; }

private:
  Var mlp2(const Var& x, Parameter* w1, Parameter* b1, Parameter* w2,
           Parameter* b2) const;

  RqVaeConfig cfg_;
  ParamStore params_;
  Parameter *enc_w1_, *enc_b1_, *enc_w2_, *enc_b2_;
  Parameter *dec_w1_, *dec_b1_, *dec_w2_, *dec_b2_;
  std::vector<Parameter*> codebooks_;  // each codebook_size x latent_dim
};

// `item_id c1 c2 ...` per line.
void save_codewords(const std::string& path,
                    const std::vector<std::vector<int32_t>>& codes_per_item);
std::vector<std::vector<int32_t>> load_codewords(const std::string& path);

}  // namespace genrec
