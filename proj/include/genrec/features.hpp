#pragma once

#include <array>
#include <string>

#include "genrec/tensor.hpp"

namespace genrec {

// Per-modality dense item features. A modality may be absent entirely
// (e.g. a catalog without audio); at least one must be present.
struct ItemFeatureBank {
  static constexpr int kModalities = 3;
  static constexpr std::array<const char*, kModalities> kNames = {
      "visual", "acoustic", "textual"};

  std::array<Tensor, kModalities> features;  // each I x D_m when present
  std::array<bool, kModalities> present = {false, false, false};
  int64_t item_count = 0;

  int64_t total_dim() const;
  // Row-wise concatenation of the present modalities, in fixed order.
  Tensor concat_features() const;
  void validate() const;
};

// Feature files are raw little-endian float32, row-major, with a sidecar
// text descriptor whose first line is `I D`. An empty path marks the
// modality as missing.
ItemFeatureBank load_features(const std::string& visual_path,
                              const std::string& acoustic_path,
                              const std::string& textual_path,
                              int64_t expected_items);

void save_feature_file(const std::string& bin_path, const Tensor& features);

}  // namespace genrec
