#pragma once

#include <functional>
#include <vector>

#include "gunl/graph/graph.hpp"
#include "gunl/numerics/dense.hpp"
#include "gunl/numerics/param_store.hpp"

// Slow loop-form references for the partition objectives, computed straight
// from their probabilistic reading: P(j, i) is the chance node j lands in
// shard i, and every statistic is an expectation under independent
// assignments. Edge and cut counts walk ordered adjacency entries, so an
// undirected intra-shard edge counts twice and a cut edge once per direction.
// Nothing here shares code with the vectorized losses.
namespace gunl::oracle {

struct ShardStats {
  double exp_nodes = 0.0;
  double exp_edges = 0.0;
  double exp_cut = 0.0;
  double exp_degree_sum = 0.0;
  std::vector<double> exp_label_counts;
};

/// One entry per column of P. Throws ContractError unless P is N x S with
/// rows summing to 1 within 1e-6.
std::vector<ShardStats> expected_stats(const Dense& P, const Graph& graph);

/// sum_i (E|V_i| / N) * E|E_i|
double loss_time(const Dense& P, const Graph& graph);
/// sum_i E[cut_i] / max(E[deg sum_i], 1e-12)
double loss_struct(const Dense& P, const Graph& graph);
/// Mean over shards of the entropy (natural log) of the expected label mix.
double loss_sem(const Dense& P, const Graph& graph);

using LossFn = std::function<double(const ParamStore&)>;

/// Central differences, one entry at a time. Throws ContractError if the loss
/// is non-finite at any probe.
GradMap finite_diff(const LossFn& loss, const ParamStore& params, double step = 1e-5);

}  // namespace gunl::oracle
