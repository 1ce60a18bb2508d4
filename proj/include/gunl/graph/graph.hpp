#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gunl/numerics/dense.hpp"
#include "gunl/numerics/sparse.hpp"

namespace gunl {

using NodeId = std::size_t;

struct Splits {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;

  friend bool operator==(const Splits&, const Splits&) = default;
};

/// Attributed, labeled, undirected simple graph. Immutable once built.
class Graph {
 public:
  Graph() = default;
  /// Validates: square symmetric adjacency with zero diagonal, one feature
  /// row and one label in [0, n_classes) per node, disjoint in-range splits.
  Graph(Sparse adjacency, Dense features, std::vector<int> labels, std::size_t n_classes,
        Splits splits = {});

  std::size_t n_nodes() const { return adjacency_.rows(); }
  std::size_t n_classes() const { return n_classes_; }
  std::size_t n_features() const { return features_.cols(); }
  /// Undirected edge count (half the adjacency entries).
  std::size_t n_edges() const { return adjacency_.nnz() / 2; }

  const Sparse& adjacency() const { return adjacency_; }
  const Dense& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const Splits& splits() const { return splits_; }

  std::span<const std::size_t> neighbors(NodeId u) const { return adjacency_.row_cols(u); }
  std::size_t degree(NodeId u) const { return neighbors(u).size(); }
  std::vector<double> degrees() const { return adjacency_.row_sums(); }
  bool is_train(NodeId u) const { return train_mask_[u] != 0; }

  Graph with_splits(Splits splits) const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  Sparse adjacency_;
  Dense features_;
  std::vector<int> labels_;
  std::size_t n_classes_ = 0;
  Splits splits_;
  std::vector<char> train_mask_;
};

/// Hard node-to-shard assignment.
struct Partition {
  std::size_t n_shards = 0;
  std::vector<std::size_t> assignment;

  /// Throws ValidationError on ids outside [0, n_shards) or n_shards == 0.
  void validate() const;
  std::vector<std::size_t> shard_sizes() const;

  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Nodes of one shard with their induced (intra-shard) edges, in local indices.
struct Shard {
  std::size_t shard_id = 0;
  std::vector<NodeId> node_ids;        ///< sorted global ids; local index = position
  Sparse adjacency;                    ///< local, symmetric
  Dense features;                      ///< one row per local node
  std::vector<int> labels;
  std::vector<std::size_t> train_local;  ///< local indices of training-split nodes

  std::size_t size() const { return node_ids.size(); }
  bool empty() const { return node_ids.empty(); }
  std::optional<std::size_t> local_index(NodeId global) const;
  bool contains(NodeId global) const { return local_index(global).has_value(); }

  friend bool operator==(const Shard&, const Shard&) = default;
};

/// Sorted, duplicate-free set of node ids slated for removal.
class DeleteSet {
 public:
  DeleteSet() = default;
  explicit DeleteSet(std::vector<NodeId> ids);

  const std::vector<NodeId>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  bool contains(NodeId id) const;
  DeleteSet merged(const DeleteSet& other) const;

  friend bool operator==(const DeleteSet&, const DeleteSet&) = default;

 private:
  std::vector<NodeId> ids_;
};

/// Shuffles node ids with `seed`; val and test sizes are floor(ratio * N), the
/// remainder goes to train. Ratios must sum to 1 within 1e-9.
Graph split_random(const Graph& graph, std::array<double, 3> ratios, std::uint64_t seed);

/// Splits the nodes by `partition`, keeping only edges with both endpoints in
/// the same shard. With `members`, nodes outside that set join no shard.
std::vector<Shard> induce_shards(const Graph& graph, const Partition& partition);
std::vector<Shard> induce_shards(const Graph& graph, const Partition& partition,
                                 std::span<const NodeId> members);

/// Drops deleted nodes and their incident edges from a shard and re-indexes.
Shard remove_nodes(const Shard& shard, const DeleteSet& deleted);

/// Same node ids, but every deleted node loses its edges, its features (zeroed)
/// and its split membership. Nothing about a deleted node survives except its id.
Graph remove_nodes(const Graph& graph, const DeleteSet& deleted);

struct InducedSubgraph {
  Graph graph;                    ///< compact ids 0..k-1, every node in train
  std::vector<NodeId> original;   ///< compact id -> id in the source graph
};

/// Induced subgraph on `ids` (sorted, unique), relabelled compactly.
InducedSubgraph induced_subgraph(const Graph& graph, std::span<const NodeId> ids);

struct NoisyGraph {
  Graph graph;
  DeleteSet injected;
};

/// Appends `n_nodes` nodes, each with a label different from the node its
/// features were copied from, `edges_per_node` distinct edges to pre-existing
/// nodes, and membership in the train split.
NoisyGraph inject_noise(const Graph& graph, std::size_t n_nodes, std::size_t edges_per_node,
                        std::uint64_t seed);

struct SynthParams {
  std::uint64_t seed = 0;
  std::size_t n = 200;
  std::size_t n_classes = 4;
  std::size_t blocks = 4;
  double p_in = 0.1;
  double p_out = 0.005;
  /// Standard deviation of the Gaussian noise added to one-hot block features.
  double feature_noise = 0.1;
  /// Extra pure-noise feature columns appended after the block one-hot.
  std::size_t extra_dims = 0;
  std::array<double, 3> split_ratios{0.7, 0.2, 0.1};
};

/// Stochastic block model. Node i sits in block floor(i * blocks / n) and is
/// labelled block mod n_classes.
Graph synth_graph(const SynthParams& params);

/// Adjacency from an undirected edge list; self-loops and repeated edges are
/// dropped and counted.
struct EdgeBuild {
  Sparse adjacency;
  std::size_t self_loops = 0;
  std::size_t duplicates = 0;
};
EdgeBuild build_adjacency(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges);

}  // namespace gunl
