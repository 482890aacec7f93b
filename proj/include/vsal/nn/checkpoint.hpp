#pragma once

#include <filesystem>

#include "vsal/nn/config.hpp"
#include "vsal/nn/train.hpp"

namespace vsal::nn {

struct Checkpoint {
  RunConfig config;
  Models models;
};

/// Binary layout (little-endian): "VSALCKPT", u32 version, u64 digest of
/// the config text, u32 length + config text, u32 matrix count, then per
/// matrix u32 name length + name, u32 rows, u32 cols, rows*cols f64 in
/// column-major order.
void save_checkpoint(const std::filesystem::path& path, const RunConfig& cfg, const Models& m);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace vsal::nn
