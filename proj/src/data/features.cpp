#include "genrec/features.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace genrec {

int64_t ItemFeatureBank::total_dim() const {
  int64_t d = 0;
  for (int m = 0; m < kModalities; ++m)
    if (present[m]) d += features[m].cols();
  return d;
}

Tensor ItemFeatureBank::concat_features() const {
  validate();
  const int64_t total = total_dim();
  Tensor out({item_count, total});
  int64_t off = 0;
  for (int m = 0; m < kModalities; ++m) {
    if (!present[m]) continue;
    const int64_t c = features[m].cols();
    for (int64_t r = 0; r < item_count; ++r)
      std::memcpy(out.data() + r * total + off, features[m].data() + r * c,
                  sizeof(double) * static_cast<size_t>(c));
    off += c;
  }
  return out;
}

void ItemFeatureBank::validate() const {
  bool any = false;
  for (int m = 0; m < kModalities; ++m) {
    if (!present[m]) continue;
    any = true;
    if (features[m].rows() != item_count)
      throw DataError(std::string(kNames[m]) + " features have " +
                      std::to_string(features[m].rows()) + " rows, expected " +
                      std::to_string(item_count));
  }
  if (!any) throw DataError("no modality present in feature bank");
}

namespace {

std::string desc_path_for(const std::string& bin_path) { return bin_path + ".desc"; }

Tensor load_one(const std::string& bin_path, const char* modality,
                int64_t expected_items) {
  std::ifstream desc(desc_path_for(bin_path));
  if (!desc)
    throw DataError(std::string(modality) + ": cannot open descriptor " +
                    desc_path_for(bin_path));
  int64_t rows = 0, cols = 0;
  std::string first_line;
  std::getline(desc, first_line);
  std::istringstream hs(first_line);
  if (!(hs >> rows >> cols) || rows <= 0 || cols <= 0)
    throw DataError(std::string(modality) + ": bad descriptor header `" +
                    first_line + "` in " + desc_path_for(bin_path));
  if (rows != expected_items)
    throw DataError(std::string(modality) + " features have " +
                    std::to_string(rows) + " rows, expected " +
                    std::to_string(expected_items));

  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw DataError(std::string(modality) + ": cannot open " + bin_path);
  std::vector<float> raw(static_cast<size_t>(rows * cols));
  bin.read(reinterpret_cast<char*>(raw.data()),
           static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!bin)
    throw DataError(std::string(modality) + ": " + bin_path + " holds fewer than " +
                    std::to_string(rows * cols) + " float32 values");
  char extra;
  if (bin.read(&extra, 1))
    throw DataError(std::string(modality) + ": " + bin_path +
                    " is larger than the descriptor says");

  Tensor t({rows, cols});
  for (size_t k = 0; k < raw.size(); ++k) t[static_cast<int64_t>(k)] = raw[k];
  return t;
}

}  // namespace

ItemFeatureBank load_features(const std::string& visual_path,
                              const std::string& acoustic_path,
                              const std::string& textual_path,
                              int64_t expected_items) {
  ItemFeatureBank bank;
  bank.item_count = expected_items;
  const std::array<const std::string*, 3> paths = {&visual_path, &acoustic_path,
                                                   &textual_path};
  for (int m = 0; m < ItemFeatureBank::kModalities; ++m) {
    if (paths[m]->empty()) continue;
    bank.features[m] = load_one(*paths[m], ItemFeatureBank::kNames[m], expected_items);
    bank.present[m] = true;
  }
  bank.validate();
  return bank;
}

void save_feature_file(const std::string& bin_path, const Tensor& features) {
  std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw DataError("cannot write " + bin_path);
  std::vector<float> raw(static_cast<size_t>(features.size()));
  for (int64_t k = 0; k < features.size(); ++k)
    raw[static_cast<size_t>(k)] = static_cast<float>(features[k]);
  bin.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
  std::ofstream desc(desc_path_for(bin_path), std::ios::trunc);
  desc << features.rows() << " " << features.cols() << "\n";
  if (!bin || !desc) throw DataError("write failed: " + bin_path);
}

}  // namespace genrec
