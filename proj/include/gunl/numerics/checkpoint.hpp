#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "gunl/numerics/param_store.hpp"

namespace gunl {

/// Free-form `key=value` metadata stored alongside the tensors.
using CheckpointMeta = std::map<std::string, std::string>;

/// Writes `<stem>.manifest` (metadata lines `#key=value`, then `name RxC offset`
/// per tensor, offsets counted in doubles) and `<stem>.bin` (the values as
/// little-endian f64, concatenated in manifest order). Optimizer moments are
/// not saved.
void save_checkpoint(const std::filesystem::path& stem, const ParamStore& params,
                     const CheckpointMeta& meta = {});

struct Checkpoint {
  ParamStore params;
  CheckpointMeta meta;
};

/// Throws LoadError on missing files, truncated data or a malformed manifest.
Checkpoint load_checkpoint(const std::filesystem::path& stem);

}  // namespace gunl
