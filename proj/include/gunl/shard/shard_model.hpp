#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gunl/graph/graph.hpp"
#include "gunl/numerics/param_store.hpp"
#include "gunl/shard/gcn.hpp"

namespace gunl {

struct TrainConfig {
  std::size_t epochs = 100;
  double lr = 1e-2;
  double weight_decay = 1e-5;
  std::size_t hidden = 64;
  std::size_t embedding = 64;
  std::uint64_t seed = 0;  ///< global seed; shard id and retrain counter are mixed in

  void validate() const;
};

/// Seed of one sub-model training run.
std::uint64_t shard_seed(std::uint64_t global_seed, std::size_t shard_id, std::uint64_t retrain_counter);

struct ShardModel {
  std::size_t shard_id = 0;
  ParamStore params;
  std::uint64_t retrain_counter = 0;
  std::uint64_t train_seed = 0;
  std::size_t epochs_run = 0;
  double final_train_loss = 0.0;
  /// No training nodes: the model has no parameters and joins no aggregation.
  bool untrained = false;
};

/// Full-batch AdamW on the mean cross-entropy over the shard's training nodes.
/// Reads nothing but `shard`, so retraining one shard never touches another.
ShardModel train_submodel(const Shard& shard, std::size_t n_classes, const TrainConfig& config,
                          std::uint64_t retrain_counter = 0);

/// Mean training cross-entropy of `model` on `shard`.
double train_loss(const ShardModel& model, const Shard& shard);

/// Embeds arbitrary nodes of a graph against one trained shard.
///
/// A shard member gets its row of the shard's own forward pass. Any other node
/// u is embedded in a virtual view: the shard plus u, joined by u's edges whose
/// other endpoint lies in the shard. Only the 2-hop neighbourhood of u changes,
/// so the view is evaluated locally from cached first-layer products.
class ShardEncoder {
 public:
  ShardEncoder(const Shard& shard, const ShardModel& model);

  std::size_t shard_id() const { return shard_id_; }
  std::size_t embedding_dim() const { return w2_.cols(); }
  const Dense& member_embeddings() const { return embeddings_; }

  /// One row per query. `graph` supplies the query features and edges.
  Dense embed(const Graph& graph, std::span<const NodeId> queries) const;

 private:
  std::size_t shard_id_;
  std::vector<NodeId> node_ids_;
  Sparse adjacency_;
  std::vector<double> self_degree_;  ///< 1 + intra-shard degree
  Dense xw_;                         ///< X W1
  Dense w1_;
  Dense w2_;
  Dense embeddings_;
};

}  // namespace gunl
