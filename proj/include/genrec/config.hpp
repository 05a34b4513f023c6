#pragma once

#include <cstdint>
#include <string>

#include "genrec/tensor.hpp"

namespace genrec {

class UsageError : public std::runtime_error {
public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Every knob of the pipeline. Plain-text `key=value` files round-trip
// through parse/serialize; unknown keys are rejected.
struct Config {
  uint64_t seed = 1;
  int threads = 0;  // 0 = library default

  // model widths
  int64_t dim = 64;         // user/item representation width D
  int64_t latent_dim = 32;  // quantizer latent width
  int64_t id_length = 4;    // M: semantic levels + popularity token
  int64_t codebook = 128;   // L, entries per level
  double beta = 0.25;       // commitment weight

  // optimization
  double lr = 0.001;
  double l2 = 1e-5;
  int64_t batch = 500;
  int patience = 20;
  int rqvae_epochs = 200;
  int rec_epochs = 500;

  // transformer
  int64_t history = 20;  // encoder positions N
  int layers = 2;
  int heads = 4;
  int64_t ffn_dim = 128;
  std::string pos_encoding = "relation";     // relation | sinusoid | none
  std::string token_variant = "popularity";  // popularity | random

  // evaluation
  int64_t top_k = 10;

  // graph encoder
  int gcn_layers = 2;

  // synthetic data
  int64_t synth_users = 200;
  int64_t synth_items = 400;
  double synth_density = 0.05;
  int synth_rank = 8;
  double synth_noise = 0.1;
  int64_t dim_visual = 32;
  int64_t dim_acoustic = 16;
  int64_t dim_textual = 16;

  // baseline + benchmark
  double mf_lr = 0.05;
  double mf_l2 = 1e-4;
  int mf_epochs = 200;
  int64_t bench_base_items = 65536;
  int64_t bench_users = 8;
  int bench_reps = 5;

  void validate() const;
  std::string serialize() const;

  // applies `key=value` assignments from a file (later `set` calls and CLI
  // flags override). Unknown keys or malformed lines throw UsageError.
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
};

}  // namespace genrec
