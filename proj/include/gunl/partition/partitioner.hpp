#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "gunl/graph/graph.hpp"
#include "gunl/numerics/dense.hpp"
#include "gunl/numerics/param_store.hpp"
#include "gunl/numerics/tape.hpp"

namespace gunl {

/// Row-stochastic N x S soft assignment. Construction validates rows.
class AssignmentMatrix {
 public:
  /// Throws ContractError unless every row sums to 1 within 1e-9 with entries in [0, 1].
  explicit AssignmentMatrix(Dense p);

  const Dense& matrix() const { return p_; }
  std::size_t n_nodes() const { return p_.rows(); }
  std::size_t n_shards() const { return p_.cols(); }

 private:
  Dense p_;
};

struct PartitionConfig {
  std::size_t n_shards = 20;
  std::size_t hidden = 64;
  double lambda_time = 1e-3;
  double lambda_sem = 1e-3;
  /// L2 coefficient; the loss carries gamma/2 * ||theta||^2.
  double gamma = 1e-5;
  double lr = 1e-3;
  std::size_t epochs = 30;
  /// +1 adds the label entropy to the minimized loss, -1 rewards it.
  int sem_sign = -1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Parameters "w1" (F x h), "w2" (h x h), "w_out" (h x S), Glorot-uniform.
ParamStore init_partitioner(std::size_t n_features, const PartitionConfig& config);

Var psi_forward(Tape& tape, const Graph& graph, const ParamStore& params);
AssignmentMatrix psi_forward(const Graph& graph, const ParamStore& params);

// Vectorized partition objectives; P is an N x S tape node.

/// (1/N) sum_i (1'P_i) * 1'[(P_i P_i') .* A] 1
Var loss_time(Var P, const Graph& graph);
/// sum_i cut_i / max(vol_i, 1e-12), cut and volume in expectation under P.
Var loss_struct(Var P, const Graph& graph);
/// Mean over shards of the entropy of the expected label mix (natural log).
Var loss_sem(Var P, const Graph& graph);
/// lambda_time*time + struct + sem_sign*lambda_sem*sem + gamma/2 ||params||^2
Var loss_part(Var P, const Graph& graph, const PartitionConfig& config, const ParamStore& params);

struct PartitionLosses {
  double time = 0.0;
  double structure = 0.0;
  double semantic = 0.0;
};
PartitionLosses evaluate_losses(const AssignmentMatrix& P, const Graph& graph);

struct PartitionerResult {
  ParamStore params;
  std::vector<double> loss_trace;  ///< loss_part before each update
};

/// Full-batch AdamW on loss_part over all nodes of `graph`. Throws
/// TrainingError on a non-finite loss.
PartitionerResult train_partitioner(const Graph& graph, const PartitionConfig& config);

/// Row argmax, ties to the lowest shard index.
Partition infer_partition(const AssignmentMatrix& P);

/// Independent uniform shard per node.
Partition random_partition(std::size_t n, std::size_t s, std::uint64_t seed);

/// Text file: `#shards=S`, then one shard id per line in node order.
void save_partition(const std::filesystem::path& path, const Partition& partition);
Partition load_partition(const std::filesystem::path& path);

}  // namespace gunl
