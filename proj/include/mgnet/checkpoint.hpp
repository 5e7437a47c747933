#pragma once

// Parameter checkpoints: magic string, format version, then per parameter
// (name, shape, raw little-endian 64-bit floats). Round trips byte-exactly.

#include <filesystem>
#include <span>
#include <vector>

#include "mgnet/tensor.hpp"

namespace mgnet::tk {

void save_checkpoint(const std::filesystem::path& path,
                     std::span<const Parameter> params);

std::vector<Parameter> load_checkpoint(const std::filesystem::path& path);

// loads values into existing parameters; names and shapes must match exactly
void load_checkpoint_into(const std::filesystem::path& path,
                          std::span<Parameter> params);

}  // namespace mgnet::tk
