#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "genrec/dataset.hpp"
#include "genrec/features.hpp"

namespace genrec {

// Synthetic catalog generator. Interactions come from a low-rank
// latent-factor preference model so that training has recoverable signal;
// features are noisy projections of the same item factors.
struct SynthConfig {
  int64_t users = 200;
  int64_t items = 400;
  double density = 0.05;      // expected interactions / (users * items)
  int rank = 8;               // latent factor dimension
  double noise = 0.1;         // preference noise, in score std units
  double feature_noise = 0.1;
  int64_t dim_visual = 32;    // 0 disables the modality
  int64_t dim_acoustic = 16;
  int64_t dim_textual = 16;
  uint64_t seed = 1;
};

struct SynthResult {
  InteractionDataset dataset;
  ItemFeatureBank bank;
  std::vector<std::pair<int32_t, int32_t>> pairs;  // raw interaction list
};

SynthResult synth_dataset(const SynthConfig& cfg);

}  // namespace genrec
