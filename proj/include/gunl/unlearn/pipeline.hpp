#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gunl/aggregate/aggregator.hpp"
#include "gunl/graph/graph.hpp"
#include "gunl/partition/partitioner.hpp"
#include "gunl/shard/shard_model.hpp"

namespace gunl {

enum class PartitionStrategy { trained, random };

/// Everything needed to rebuild a pipeline. `seed` overrides the seeds of the
/// nested configs.
struct PipelineConfig {
  PartitionStrategy strategy = PartitionStrategy::trained;
  PartitionConfig partition;
  TrainConfig train;
  AggTrainConfig aggregator;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  void validate() const;
  /// Copy with the global seed pushed into the nested configs.
  PipelineConfig seeded() const;
};

struct PipelineState {
  PipelineConfig config;
  /// Current graph: deleted nodes keep their ids but carry no data.
  Graph graph;
  /// Frozen after the build.
  Partition partition;
  std::vector<Shard> shards;
  std::vector<ShardModel> models;
  EncoderSet encoders;
  Aggregator aggregator;
  std::vector<NodeId> aggregator_sample;
  DeleteSet deleted;
};

struct BuildTimings {
  double partition_seconds = 0.0;
  double shards_seconds = 0.0;
  double aggregator_seconds = 0.0;
  double total_seconds = 0.0;
};

/// Trains the partitioner on the subgraph induced by the training split (or
/// draws a random partition), assigns the remaining nodes by inference on the
/// full graph, trains one sub-model per shard over its training nodes and
/// fits the aggregator.
PipelineState build_pipeline(const Graph& graph, const PipelineConfig& config,
                             BuildTimings* timings = nullptr);

/// Rebuilds everything, partition included, on `graph_minus_deletes`.
PipelineState full_retrain(const Graph& graph_minus_deletes, const PipelineConfig& config,
                           BuildTimings* timings = nullptr);

std::set<std::size_t> locate_affected(const Partition& partition, const DeleteSet& request);

struct UnlearnReport {
  std::size_t request_size = 0;
  std::vector<std::size_t> affected;    ///< ascending
  std::vector<double> shard_seconds;    ///< parallel to affected
  double shards_makespan_seconds = 0.0;
  double aggregator_seconds = 0.0;
  double total_seconds = 0.0;
  std::size_t untouched = 0;

  /// `key=value` lines.
  std::string to_record() const;
};

/// Removes `request` from the graph and from every affected shard, retrains
/// those sub-models with their counters advanced by one and refits the
/// aggregator from a fresh initialization. Throws ContractError for a node
/// already deleted and ValidationError for a node outside the training split.
UnlearnReport unlearn(PipelineState& state, const DeleteSet& request);

struct ExactnessReport {
  std::vector<double> max_delta;  ///< per shard
  bool exact() const;
};

/// Retrains every shard from scratch on its current content with the recorded
/// counter and compares parameters bitwise.
ExactnessReport verify_exactness(const PipelineState& state);

/// Throws ContractError for a deleted query.
Prediction predict(const PipelineState& state, std::span<const NodeId> queries);

/// One node id per line; blank lines and `#` comments ignored.
DeleteSet load_request(const std::filesystem::path& path);
void save_request(const std::filesystem::path& path, const DeleteSet& request);

/// Writes partition.txt, shard_<i> and aggregator checkpoints and
/// pipeline.manifest into `dir`. `tag` is stored and checked on load.
void save_pipeline(const std::filesystem::path& dir, const PipelineState& state, const std::string& tag);

/// Restores a saved pipeline over `original`, the graph it was built from.
/// Deleted nodes are removed again before the shards are induced. Throws
/// LoadError on missing files or when the stored tag differs from `tag`.
PipelineState load_pipeline(const std::filesystem::path& dir, const Graph& original,
                            const PipelineConfig& config, const std::string& tag);

}  // namespace gunl
