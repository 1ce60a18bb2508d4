#include "gunl/graph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gunl/errors.hpp"
#include "gunl/numerics/rng.hpp"

namespace gunl {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

void check_split(const std::vector<NodeId>& ids, std::size_t n, std::vector<char>& seen,
                 const char* name) {
  for (NodeId id : ids) {
    if (id >= n) {
      throw ValidationError(std::string("split '") + name + "' has node id " +
                            std::to_string(id) + " >= " + std::to_string(n));
    }
    if (seen[id]) {
      throw ValidationError("node " + std::to_string(id) + " appears in more than one split");
    }
    seen[id] = 1;
  }
}

}  // namespace

Graph::Graph(Sparse adjacency, Dense features, std::vector<int> labels, std::size_t n_classes,
             Splits splits)
    : adjacency_(std::move(adjacency)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      n_classes_(n_classes),
      splits_(std::move(splits)) {
  const std::size_t n = adjacency_.rows();
  if (adjacency_.cols() != n) throw ValidationError("adjacency is not square");
  if (!adjacency_.is_symmetric()) throw ValidationError("adjacency is not symmetric");
  if (!adjacency_.has_zero_diagonal()) throw ValidationError("adjacency has self-loops");
  if (features_.rows() != n) {
    throw ValidationError("features have " + std::to_string(features_.rows()) + " rows for " +
                          std::to_string(n) + " nodes");
  }
  if (labels_.size() != n) {
    throw ValidationError("labels have " + std::to_string(labels_.size()) + " entries for " +
                          std::to_string(n) + " nodes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= n_classes_) {
      throw ValidationError("label " + std::to_string(labels_[i]) + " of node " +
                            std::to_string(i) + " outside [0, " + std::to_string(n_classes_) + ")");
    }
  }
  std::vector<char> seen(n, 0);
  check_split(splits_.train, n, seen, "train");
  check_split(splits_.val, n, seen, "val");
  check_split(splits_.test, n, seen, "test");
  train_mask_.assign(n, 0);
  for (NodeId id : splits_.train) train_mask_[id] = 1;
}

Graph Graph::with_splits(Splits splits) const {
  return Graph(adjacency_, features_, labels_, n_classes_, std::move(splits));
}

void Partition::validate() const {
  if (n_shards == 0) throw ValidationError("partition needs at least one shard");
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= n_shards) {
      throw ValidationError("node " + std::to_string(i) + " assigned to shard " +
                            std::to_string(assignment[i]) + " of " + std::to_string(n_shards));
    }
  }
}

std::vector<std::size_t> Partition::shard_sizes() const {
  std::vector<std::size_t> sizes(n_shards, 0);
  for (std::size_t s : assignment) ++sizes.at(s);
  return sizes;
}

std::optional<std::size_t> Shard::local_index(NodeId global) const {
  auto it = std::lower_bound(node_ids.begin(), node_ids.end(), global);
  if (it == node_ids.end() || *it != global) return std::nullopt;
  return static_cast<std::size_t>(it - node_ids.begin());
}

DeleteSet::DeleteSet(std::vector<NodeId> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool DeleteSet::contains(NodeId id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }

DeleteSet DeleteSet::merged(const DeleteSet& other) const {
  std::vector<NodeId> all = ids_;
  all.insert(all.end(), other.ids_.begin(), other.ids_.end());
  return DeleteSet(std::move(all));
}

Graph split_random(const Graph& graph, std::array<double, 3> ratios, std::uint64_t seed) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9 || ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0) {
    throw ContractError("split ratios must be non-negative and sum to 1");
  }
  const std::size_t n = graph.n_nodes();
  std::vector<NodeId> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const auto n_val = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::floor(ratios[2] * static_cast<double>(n)));
  const std::size_t n_train = n - n_val - n_test;

  Splits s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  s.test.assign(order.begin() + n_train + n_val, order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return graph.with_splits(std::move(s));
}

std::vector<Shard> induce_shards(const Graph& graph, const Partition& partition) {
  std::vector<NodeId> all(graph.n_nodes());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return induce_shards(graph, partition, all);
}

std::vector<Shard> induce_shards(const Graph& graph, const Partition& partition,
                                 std::span<const NodeId> members) {
  const std::size_t n = graph.n_nodes();
  if (partition.assignment.size() != n) {
    throw ContractError("partition covers " + std::to_string(partition.assignment.size()) +
                        " nodes, graph has " + std::to_string(n));
  }
  partition.validate();

  std::vector<char> is_member(n, 0);
  for (NodeId u : members) {
    if (u >= n) throw ContractError("member id out of range");
    is_member[u] = 1;
  }

  std::vector<Shard> shards(partition.n_shards);
  std::vector<std::size_t> local(n, kNone);
  for (std::size_t s = 0; s < shards.size(); ++s) shards[s].shard_id = s;
  for (NodeId u = 0; u < n; ++u) {
    if (!is_member[u]) continue;
    Shard& sh = shards[partition.assignment[u]];
    local[u] = sh.node_ids.size();
    sh.node_ids.push_back(u);
  }

  const std::size_t f = graph.n_features();
  std::vector<std::vector<Triplet>> edges(shards.size());
  for (Shard& sh : shards) {
    sh.features = Dense(sh.node_ids.size(), f);
    sh.labels.reserve(sh.node_ids.size());
    for (std::size_t i = 0; i < sh.node_ids.size(); ++i) {
      const NodeId u = sh.node_ids[i];
      std::copy(graph.features().row(u).begin(), graph.features().row(u).end(),
                sh.features.row(i).begin());
      sh.labels.push_back(graph.labels()[u]);
      if (graph.is_train(u)) sh.train_local.push_back(i);
      for (NodeId v : graph.neighbors(u)) {
        if (is_member[v] && partition.assignment[v] == sh.shard_id) {
          edges[sh.shard_id].push_back({i, local[v], 1.0});
        }
      }
    }
  }
  for (Shard& sh : shards) {
    sh.adjacency = Sparse(sh.node_ids.size(), sh.node_ids.size(), std::move(edges[sh.shard_id]));
  }
  return shards;
}

Shard remove_nodes(const Shard& shard, const DeleteSet& deleted) {
  const std::size_t n = shard.size();
  std::vector<std::size_t> remap(n, kNone);
  Shard out;
  out.shard_id = shard.shard_id;
  for (std::size_t i = 0; i < n; ++i) {
    if (deleted.contains(shard.node_ids[i])) continue;
    remap[i] = out.node_ids.size();
    out.node_ids.push_back(shard.node_ids[i]);
  }
  if (out.node_ids.size() == n) return shard;

  out.features = Dense(out.node_ids.size(), shard.features.cols());
  std::vector<Triplet> edges;
  for (std::size_t i = 0; i < n; ++i) {
    if (remap[i] == kNone) continue;
    std::copy(shard.features.row(i).begin(), shard.features.row(i).end(),
              out.features.row(remap[i]).begin());
    out.labels.push_back(shard.labels[i]);
    auto cols = shard.adjacency.row_cols(i);
    auto vals = shard.adjacency.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (remap[cols[k]] != kNone) edges.push_back({remap[i], remap[cols[k]], vals[k]});
    }
  }
  for (std::size_t i : shard.train_local) {
    if (remap[i] != kNone) out.train_local.push_back(remap[i]);
  }
  out.adjacency = Sparse(out.node_ids.size(), out.node_ids.size(), std::move(edges));
  return out;
}

Graph remove_nodes(const Graph& graph, const DeleteSet& deleted) {
  if (deleted.empty()) return graph;
  const std::size_t n = graph.n_nodes();
  for (NodeId id : deleted.ids()) {
    if (id >= n) throw ContractError("delete id " + std::to_string(id) + " out of range");
  }
  std::vector<Triplet> edges;
  edges.reserve(graph.adjacency().nnz());
  for (const Triplet& t : graph.adjacency().entries()) {
    if (!deleted.contains(t.row) && !deleted.contains(t.col)) edges.push_back(t);
  }
  Dense features = graph.features();
  for (NodeId id : deleted.ids())
    for (double& v : features.row(id)) v = 0.0;

  auto keep = [&](const std::vector<NodeId>& ids) {
    std::vector<NodeId> out;
    for (NodeId id : ids)
      if (!deleted.contains(id)) out.push_back(id);
    return out;
  };
  Splits splits{keep(graph.splits().train), keep(graph.splits().val), keep(graph.splits().test)};
  return Graph(Sparse(n, n, std::move(edges)), std::move(features), graph.labels(),
               graph.n_classes(), std::move(splits));
}

InducedSubgraph induced_subgraph(const Graph& graph, std::span<const NodeId> ids) {
  const std::size_t n = graph.n_nodes();
  std::vector<std::size_t> local(n, kNone);
  InducedSubgraph out;
  out.original.assign(ids.begin(), ids.end());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= n || (i > 0 && ids[i] <= ids[i - 1])) {
      throw ContractError("induced_subgraph: ids must be sorted, unique and in range");
    }
    local[ids[i]] = i;
  }
  const std::size_t k = ids.size();
  Dense features(k, graph.n_features());
  std::vector<int> labels(k);
  std::vector<Triplet> edges;
  Splits splits;
  for (std::size_t i = 0; i < k; ++i) {
    const NodeId u = ids[i];
    std::copy(graph.features().row(u).begin(), graph.features().row(u).end(),
              features.row(i).begin());
    labels[i] = graph.labels()[u];
    splits.train.push_back(i);
    for (NodeId v : graph.neighbors(u))
      if (local[v] != kNone) edges.push_back({i, local[v], 1.0});
  }
  out.graph = Graph(Sparse(k, k, std::move(edges)), std::move(features), std::move(labels),
                    graph.n_classes(), std::move(splits));
  return out;
}

NoisyGraph inject_noise(const Graph& graph, std::size_t n_nodes, std::size_t edges_per_node,
                        std::uint64_t seed) {
  const std::size_t n = graph.n_nodes();
  if (n_nodes == 0) return {graph, DeleteSet{}};
  if (n < edges_per_node || n == 0) {
    throw ContractError("inject_noise: graph has fewer nodes than edges_per_node");
  }
  if (graph.n_classes() < 2) throw ContractError("inject_noise: wrong labels need >= 2 classes");

  Rng rng(seed);
  const std::size_t total = n + n_nodes;
  std::vector<Triplet> edges = graph.adjacency().entries();
  Dense features(total, graph.n_features());
  std::copy(graph.features().values().begin(), graph.features().values().end(), features.data());
  std::vector<int> labels = graph.labels();
  labels.resize(total);
  Splits splits = graph.splits();
  std::vector<NodeId> injected;

  const auto c = static_cast<std::size_t>(graph.n_classes());
  for (std::size_t k = 0; k < n_nodes; ++k) {
    const NodeId id = n + k;
    injected.push_back(id);
    const NodeId donor = rng.below(n);
    std::copy(graph.features().row(donor).begin(), graph.features().row(donor).end(),
              features.row(id).begin());
    // uniform over the classes other than the donor's
    std::size_t lbl = rng.below(c - 1);
    if (lbl >= static_cast<std::size_t>(graph.labels()[donor])) ++lbl;
    labels[id] = static_cast<int>(lbl);

    std::vector<NodeId> targets;
    while (targets.size() < edges_per_node) {
      const NodeId v = rng.below(n);
      if (std::find(targets.begin(), targets.end(), v) == targets.end()) targets.push_back(v);
    }
    for (NodeId v : targets) {
      edges.push_back({id, v, 1.0});
      edges.push_back({v, id, 1.0});
    }
    splits.train.push_back(id);
  }
  std::sort(splits.train.begin(), splits.train.end());
  Graph noisy(Sparse(total, total, std::move(edges)), std::move(features), std::move(labels),
              graph.n_classes(), std::move(splits));
  return {std::move(noisy), DeleteSet(std::move(injected))};
}

Graph synth_graph(const SynthParams& p) {
  if (!(0.0 <= p.p_out && p.p_out <= p.p_in && p.p_in <= 1.0)) {
    throw ContractError("synth_graph: need 0 <= p_out <= p_in <= 1");
  }
  if (p.blocks == 0 || p.n_classes == 0) throw ContractError("synth_graph: blocks and classes must be >= 1");
  Rng rng(p.seed);
  const std::size_t n = p.n;
  std::vector<std::size_t> block(n);
  for (std::size_t i = 0; i < n; ++i) block[i] = i * p.blocks / n;

  std::vector<Triplet> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double prob = block[i] == block[j] ? p.p_in : p.p_out;
      if (prob > 0.0 && rng.bernoulli(prob)) {
        edges.push_back({i, j, 1.0});
        edges.push_back({j, i, 1.0});
      }
    }
  }

  const std::size_t f = p.blocks + p.extra_dims;
  Dense features(n, f);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    features(i, block[i]) = 1.0;
    for (std::size_t c = 0; c < f; ++c) features(i, c) += p.feature_noise * rng.normal();
    labels[i] = static_cast<int>(block[i] % p.n_classes);
  }
  Graph g(Sparse(n, n, std::move(edges)), std::move(features), std::move(labels), p.n_classes);
  return split_random(g, p.split_ratios, derive_seed({p.seed, 0x5b1170ULL}));
}

EdgeBuild build_adjacency(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges) {
  EdgeBuild out;
  std::vector<std::pair<NodeId, NodeId>> canon;
  canon.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a >= n || b >= n) {
      throw ValidationError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                            ") references a node >= " + std::to_string(n));
    }
    if (a == b) {
      ++out.self_loops;
      continue;
    }
    canon.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(canon.begin(), canon.end());
  std::vector<Triplet> trip;
  trip.reserve(canon.size() * 2);
  for (std::size_t i = 0; i < canon.size(); ++i) {
    if (i > 0 && canon[i] == canon[i - 1]) {
      ++out.duplicates;
      continue;
    }
    trip.push_back({canon[i].first, canon[i].second, 1.0});
    trip.push_back({canon[i].second, canon[i].first, 1.0});
  }
  out.adjacency = Sparse(n, n, std::move(trip));
  return out;
}

}  // namespace gunl
