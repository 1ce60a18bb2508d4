#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gunl/graph/graph.hpp"
#include "gunl/unlearn/pipeline.hpp"

namespace gunl::bench {

struct DatasetSpec {
  enum class Kind { synthetic, files };
  Kind kind = Kind::synthetic;
  /// Directory with edges.txt, features.txt, labels.txt and optionally splits.txt.
  std::filesystem::path path;
  /// Class count for file datasets; 0 infers it from the labels.
  std::size_t n_classes = 0;
  /// Used when a file dataset has no splits.txt.
  std::uint64_t split_seed = 0;
  SynthParams synth;
};

struct DeleteSpec {
  /// Share of all nodes to delete, drawn from the training split.
  double fraction = 0.005;
  /// Explicit ids; when non-empty they replace the fraction.
  std::vector<NodeId> ids;
};

struct NoiseSpec {
  std::size_t nodes = 100;
  std::size_t edges_per_node = 10;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  PipelineConfig pipeline;
  DeleteSpec deletion;
  NoiseSpec noise;
  std::filesystem::path out = "runs";
  std::uint64_t seed = 0;
  /// Unset: each command picks its own default.
  std::optional<std::size_t> repetitions;
  std::size_t jobs = 1;

  void validate() const;
  /// Pipeline settings with the run seed and job count applied.
  PipelineConfig pipeline_for(std::uint64_t seed) const;
};

/// Parses `section.key = value` lines; `#` starts a comment. Unknown keys,
/// repeated keys and malformed values throw ConfigError naming the line.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Sorted `key = value` lines of every setting that affects results (run.out,
/// run.jobs, run.repetitions and the delete and noise specs are left out).
std::string canonical_config(const ExperimentConfig& config);
/// 16 hex digits of FNV-1a over canonical_config.
std::string config_hash(const ExperimentConfig& config);

/// Every known key, in canonical order.
std::vector<std::string> config_keys();

}  // namespace gunl::bench
