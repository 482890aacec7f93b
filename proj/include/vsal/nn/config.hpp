#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "vsal/nn/train.hpp"
#include "vsal/oracles.hpp"

namespace vsal::nn {

/// Everything needed to rebuild models and rerun training.
struct RunConfig {
  Task task = Task::Tree;
  TrainConfig train;
  GeneratorConfig gen;
  DiscriminatorConfig dis;
  ClassifierConfig cls;
  RenderParams render;  // h and w follow cls.resolution
  ReferenceSpec reference;

  /// Assigns one field by key; throws ParseError on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);

  /// One `key = value` line per field in a fixed order.
  std::string canonical() const;

  void validate() const;
};

/// Parses `key = value` lines. Blank lines, `#` comments and `[section]`
/// headers are ignored; values may be double-quoted.
RunConfig parse_run_config(std::string_view text, RunConfig base = {});
RunConfig read_run_config(const std::filesystem::path& path, RunConfig base = {});

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace vsal::nn
