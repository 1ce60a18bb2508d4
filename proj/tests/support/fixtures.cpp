#include "support/fixtures.hpp"

#include <algorithm>
#include <cmath>

namespace gunl::testing {

Graph p4_graph() {
  std::vector<std::pair<NodeId, NodeId>> edges{{0, 1}, {1, 2}, {2, 3}};
  auto built = build_adjacency(4, edges);
  Dense x = Dense::from_rows({{0, 1}, {1, 1}, {2, 1}, {3, 1}});
  Splits s;
  s.train = {0, 1, 2, 3};
  return Graph(std::move(built.adjacency), std::move(x), {0, 1, 0, 1}, 2, s);
}

Graph random_graph(std::size_t n, double p, std::size_t n_features, std::size_t n_classes,
                   std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(p)) edges.emplace_back(i, j);
  auto built = build_adjacency(n, edges);
  Dense x = random_dense(n, n_features, rng);
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(rng.below(n_classes));
  Splits s;
  for (std::size_t i = 0; i < n; ++i) s.train.push_back(i);
  return Graph(std::move(built.adjacency), std::move(x), std::move(labels), n_classes, s);
}

Graph cora_like_graph(std::uint64_t seed, double topic_share, double homophily) {
  constexpr std::size_t kWords = 1433, kVocab = 150, kWordsPerNode = 18, kEdges = 5278;
  const std::vector<std::size_t> sizes{351, 217, 418, 818, 426, 298, 180};
  Rng rng(seed);

  std::vector<int> labels;
  for (std::size_t c = 0; c < sizes.size(); ++c) labels.insert(labels.end(), sizes[c], static_cast<int>(c));
  rng.shuffle(labels);
  const std::size_t n = labels.size();
  std::vector<std::vector<NodeId>> members(sizes.size());
  for (NodeId v = 0; v < n; ++v) members[static_cast<std::size_t>(labels[v])].push_back(v);

  std::vector<std::vector<std::size_t>> vocab(sizes.size());
  for (auto& words : vocab)
    for (std::size_t k = 0; k < kVocab; ++k) words.push_back(rng.below(kWords));

  Dense x(n, kWords);
  for (NodeId v = 0; v < n; ++v) {
    const auto& words = vocab[static_cast<std::size_t>(labels[v])];
    for (std::size_t k = 0; k < kWordsPerNode; ++k) {
      const std::size_t w = rng.bernoulli(topic_share) ? words[rng.below(kVocab)] : rng.below(kWords);
      x(v, w) = 1.0;
    }
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<std::pair<NodeId, NodeId>> seen;
  while (edges.size() < kEdges) {
    const NodeId u = rng.below(n);
    const auto& same = members[static_cast<std::size_t>(labels[u])];
    NodeId v = u;
    if (rng.bernoulli(homophily)) {
      v = same[rng.below(same.size())];
    } else {
      while (labels[v] == labels[u]) v = rng.below(n);
    }
    if (u == v) continue;
    const auto key = std::minmax(u, v);
    const auto it = std::lower_bound(seen.begin(), seen.end(), std::pair<NodeId, NodeId>(key));
    if (it != seen.end() && *it == std::pair<NodeId, NodeId>(key)) continue;
    seen.insert(it, key);
    edges.emplace_back(u, v);
  }
  auto built = build_adjacency(n, edges);
  const Graph g(std::move(built.adjacency), std::move(x), std::move(labels), sizes.size());
  return split_random(g, {0.7, 0.2, 0.1}, derive_seed({seed, 0xc0aaULL}));
}

Dense random_assignment(std::size_t n, std::size_t s, Rng& rng) {
  Dense p(n, s);
  for (std::size_t r = 0; r < n; ++r) {
    double z = 0.0;
    for (std::size_t c = 0; c < s; ++c) z += (p(r, c) = rng.uniform(0.05, 1.0));
    for (std::size_t c = 0; c < s; ++c) p(r, c) /= z;
  }
  return p;
}

Dense one_hot(const std::vector<std::size_t>& assignment, std::size_t s) {
  Dense p(assignment.size(), s);
  for (std::size_t r = 0; r < assignment.size(); ++r) p(r, assignment[r]) = 1.0;
  return p;
}

Dense random_dense(std::size_t rows, std::size_t cols, Rng& rng, double scale) {
  Dense d(rows, cols);
  for (double& v : d.values()) v = scale * rng.uniform(-1.0, 1.0);
  return d;
}

double rel_err(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double max_rel_err(const GradMap& a, const GradMap& b, double floor) {
  double worst = 0.0;
  for (const auto& [name, ga] : a) {
    const Dense& gb = b.at(name);
    for (std::size_t k = 0; k < ga.size(); ++k)
      worst = std::max(worst, rel_err(ga.data()[k], gb.data()[k], floor));
  }
  return worst;
}

}  // namespace gunl::testing
