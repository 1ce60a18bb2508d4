#pragma once

#include <cstdint>
#include <vector>

#include "gunl/graph/graph.hpp"
#include "gunl/numerics/dense.hpp"
#include "gunl/numerics/param_store.hpp"
#include "gunl/numerics/rng.hpp"

namespace gunl::testing {

/// Path 0-1-2-3, features [[i, 1]], labels [0,1,0,1], every node in train.
Graph p4_graph();

/// Erdos-Renyi graph with Gaussian features, uniform labels, all nodes in train.
Graph random_graph(std::size_t n, double p, std::size_t n_features, std::size_t n_classes,
                   std::uint64_t seed);

/// Citation-network surrogate shaped like Cora: 2708 nodes in 7 classes of
/// Cora's sizes, 1433 binary word features (18 words per node, each from the
/// node's class vocabulary with probability `topic_share`), 5278 edges of
/// which `homophily` join same-class nodes, split 0.7/0.2/0.1.
Graph cora_like_graph(std::uint64_t seed, double topic_share = 0.3, double homophily = 0.81);

/// Row-stochastic n x s matrix with strictly positive random rows.
Dense random_assignment(std::size_t n, std::size_t s, Rng& rng);
/// One-hot rows from a hard assignment.
Dense one_hot(const std::vector<std::size_t>& assignment, std::size_t s);

Dense random_dense(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0);

/// Relative error with an absolute floor: |a-b| / max(|a|, |b|, floor).
double rel_err(double a, double b, double floor = 1e-6);

/// Largest entrywise rel_err across two gradient maps with the same keys.
double max_rel_err(const GradMap& a, const GradMap& b, double floor = 1e-6);

}  // namespace gunl::testing
