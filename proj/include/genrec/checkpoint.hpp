#pragma once

#include <map>
#include <string>
#include <vector>

#include "genrec/autodiff.hpp"
#include "genrec/tensor.hpp"

namespace genrec {

// Versioned binary tensor container: magic, format version, then named
// tensors with an explicit shape header each. Little-endian doubles.
void save_checkpoint(const std::string& path,
                     const std::map<std::string, Tensor>& tensors);
std::map<std::string, Tensor> load_checkpoint(const std::string& path);

// Convenience wrappers for whole parameter stores.
std::map<std::string, Tensor> snapshot(const ParamStore& params);
// Copies values into existing parameters by name; throws DataError when a
// parameter is missing from the map or shapes disagree.
void restore(ParamStore& params, const std::map<std::string, Tensor>& tensors);

}  // namespace genrec
