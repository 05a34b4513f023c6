#include "genrec/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace genrec {

namespace {
constexpr char kMagic[4] = {'G', 'R', 'C', 'K'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError("checkpoint truncated: " + path);
  return v;
}
}  // namespace

void save_checkpoint(const std::string& path,
                     const std::map<std::string, Tensor>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write checkpoint: " + path);
  os.write(kMagic, 4);
  write_pod(os, kVersion);
  write_pod(os, static_cast<uint64_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_pod(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(os, static_cast<uint32_t>(t.shape().size()));
    for (int64_t d : t.shape()) write_pod(os, d);
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!os) throw DataError("write failed: " + path);
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("not a checkpoint file: " + path);
  const auto version = read_pod<uint32_t>(is, path);
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version) +
                    ": " + path);
  const auto count = read_pod<uint64_t>(is, path);
  std::map<std::string, Tensor> out;
  for (uint64_t e = 0; e < count; ++e) {
    const auto name_len = read_pod<uint32_t>(is, path);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto ndim = read_pod<uint32_t>(is, path);
    std::vector<int64_t> shape(ndim);
    int64_t n = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      shape[d] = read_pod<int64_t>(is, path);
      n *= shape[d];
    }
    std::vector<double> data(static_cast<size_t>(n));
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw DataError("checkpoint truncated: " + path);
    out.emplace(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

std::map<std::string, Tensor> snapshot(const ParamStore& params) {
  std::map<std::string, Tensor> out;
  for (const auto& p : params.all()) out.emplace(p->name, p->value);
  return out;
}

void restore(ParamStore& params, const std::map<std::string, Tensor>& tensors) {
  for (const auto& p : params.all()) {
    auto it = tensors.find(p->name);
    if (it == tensors.end())
      throw DataError("checkpoint is missing parameter: " + p->name);
    if (it->second.shape() != p->value.shape())
      throw DataError("checkpoint shape mismatch for " + p->name + ": " +
                      it->second.shape_str() + " vs " + p->value.shape_str());
    p->value = it->second;
  }
}

}  // namespace genrec
