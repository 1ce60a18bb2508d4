#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include <unistd.h>

#include "gunl/errors.hpp"
#include "gunl/graph/graph.hpp"
#include "gunl/graph/io.hpp"
#include "gunl/numerics/rng.hpp"
#include "support/fixtures.hpp"

namespace gunl {
namespace {

namespace fs = std::filesystem;
using testing::p4_graph;
using testing::random_graph;

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("gunl_graph_" + std::to_string(::getpid()) + "_" +
                                                 std::to_string(counter_++))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path write(const std::string& name, const std::string& body) const {
    std::ofstream(path_ / name) << body;
    return path_ / name;
  }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

Partition random_partition_of(std::size_t n, std::size_t s, std::uint64_t seed) {
  Rng rng(seed);
  Partition p{s, std::vector<std::size_t>(n)};
  for (auto& a : p.assignment) a = rng.below(s);
  return p;
}

TEST(LoadGraph, PathGraphFiles) {
  TempDir dir;
  auto e = dir.write("e.txt", "# path\n0\t1\n1\t2\n2\t3\n3\t3\n1\t0\n");
  auto f = dir.write("f.txt", "0 1\n1 1\n2 1\n3 1\n");
  auto l = dir.write("l.txt", "0\n1\n0\n1\n");
  auto s = dir.write("s.txt", "train: 0 1\nval: 2\ntest: 3\n");
  LoadedGraph lg = load_graph(e, f, l, s);
  EXPECT_EQ(lg.graph.n_nodes(), 4u);
  EXPECT_EQ(lg.graph.n_classes(), 2u);
  EXPECT_EQ(lg.graph.adjacency().nnz(), 6u);
  EXPECT_EQ(lg.report.self_loops_dropped, 1u);
  EXPECT_EQ(lg.report.duplicates_dropped, 1u);
  EXPECT_EQ(lg.graph.splits().val, std::vector<NodeId>{2});
}

TEST(LoadGraph, MalformedLineReportsLineNumber) {
  TempDir dir;
  auto e = dir.write("e.txt", "0\t1\n1 x 2\n");
  auto f = dir.write("f.txt", "0\n1\n2\n");
  auto l = dir.write("l.txt", "0\n1\n0\n");
  try {
    load_graph(e, f, l, "");
    FAIL() << "expected ParseError";
  } catch (const ParseError& err) {
    EXPECT_EQ(err.line(), 2u);
  }
}

TEST(LoadGraph, LabelOutOfRangeIsValidationError) {
  TempDir dir;
  auto e = dir.write("e.txt", "0\t1\n");
  auto f = dir.write("f.txt", "0\n1\n");
  auto l = dir.write("l.txt", "0\n5\n");
  EXPECT_THROW(load_graph(e, f, l, "", 2), ValidationError);
}

TEST(LoadGraph, SaveRoundTrips) {
  TempDir dir;
  Graph g = synth_graph({.seed = 3, .n = 40});
  const auto p = dir.path();
  save_graph(g, p / "e", p / "f", p / "l", p / "s");
  Graph back = load_graph(p / "e", p / "f", p / "l", p / "s", g.n_classes()).graph;
  EXPECT_EQ(back, g);
}

TEST(SplitRandom, TenNodes) {
  Graph g = split_random(random_graph(10, 0.3, 2, 2, 1), {0.7, 0.2, 0.1}, 5);
  EXPECT_EQ(g.splits().train.size(), 7u);
  EXPECT_EQ(g.splits().val.size(), 2u);
  EXPECT_EQ(g.splits().test.size(), 1u);
}

TEST(SplitRandom, DeterministicPerSeed) {
  Graph base = random_graph(30, 0.1, 2, 2, 1);
  EXPECT_EQ(split_random(base, {0.7, 0.2, 0.1}, 9).splits(),
            split_random(base, {0.7, 0.2, 0.1}, 9).splits());
  EXPECT_NE(split_random(base, {0.7, 0.2, 0.1}, 9).splits(),
            split_random(base, {0.7, 0.2, 0.1}, 10).splits());
}

TEST(SplitRandom, CoraSizedFloorRule) {
  auto built = build_adjacency(2708, {});
  Graph g(std::move(built.adjacency), Dense(2708, 1), std::vector<int>(2708, 0), 1);
  Graph s = split_random(g, {0.7, 0.2, 0.1}, 1);
  // floor(0.2 N) = 541, floor(0.1 N) = 270, remainder to train
  EXPECT_EQ(s.splits().val.size(), 541u);
  EXPECT_EQ(s.splits().test.size(), 270u);
  EXPECT_EQ(s.splits().train.size(), 1897u);
}

TEST(SplitRandom, BadRatiosThrow) {
  EXPECT_THROW(split_random(p4_graph(), {0.5, 0.2, 0.1}, 1), ContractError);
}

TEST(InduceShards, PathSplitDropsMiddleEdge) {
  auto shards = induce_shards(p4_graph(), Partition{2, {0, 0, 1, 1}});
  ASSERT_EQ(shards.size(), 2u);
  EXPECT_EQ(shards[0].node_ids, (std::vector<NodeId>{0, 1}));
  EXPECT_EQ(shards[1].node_ids, (std::vector<NodeId>{2, 3}));
  EXPECT_EQ(shards[0].adjacency.nnz(), 2u);
  EXPECT_TRUE(shards[0].adjacency.contains(0, 1));
  EXPECT_TRUE(shards[1].adjacency.contains(0, 1));
}

TEST(InduceShards, SingleShardKeepsAdjacency) {
  Graph g = random_graph(15, 0.3, 2, 2, 4);
  auto shards = induce_shards(g, Partition{1, std::vector<std::size_t>(15, 0)});
  EXPECT_EQ(shards[0].adjacency, g.adjacency());
  EXPECT_EQ(shards[0].features, g.features());
}

TEST(InduceShards, MatchesEdgeFilterOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Graph g = random_graph(50, 0.1, 2, 3, seed);
    Partition p = random_partition_of(50, 4, seed + 100);
    auto shards = induce_shards(g, p);

    std::set<NodeId> seen;
    std::size_t intra = 0;
    for (const Shard& sh : shards) {
      for (NodeId u : sh.node_ids) EXPECT_TRUE(seen.insert(u).second);
      intra += sh.adjacency.nnz();
      std::set<std::pair<NodeId, NodeId>> want, got;
      for (const Triplet& t : g.adjacency().entries())
        if (p.assignment[t.row] == sh.shard_id && p.assignment[t.col] == sh.shard_id)
          want.insert({t.row, t.col});
      for (const Triplet& t : sh.adjacency.entries())
        got.insert({sh.node_ids[t.row], sh.node_ids[t.col]});
      EXPECT_EQ(got, want);
      EXPECT_TRUE(sh.adjacency.is_symmetric());
    }
    EXPECT_EQ(seen.size(), 50u);
    std::size_t cross = 0;
    for (const Triplet& t : g.adjacency().entries())
      if (p.assignment[t.row] != p.assignment[t.col]) ++cross;
    EXPECT_EQ(g.adjacency().nnz(), intra + cross);
  }
}

TEST(InduceShards, EmptyShardIsLegal) {
  auto shards = induce_shards(p4_graph(), Partition{3, {0, 0, 2, 2}});
  EXPECT_TRUE(shards[1].empty());
  EXPECT_EQ(shards[1].adjacency.rows(), 0u);
}

TEST(RemoveNodes, EmptyDeleteIsNoOp) {
  auto shards = induce_shards(p4_graph(), Partition{2, {0, 0, 1, 1}});
  EXPECT_EQ(remove_nodes(shards[0], DeleteSet{}), shards[0]);
}

TEST(RemoveNodes, DropsNodeAndIncidentEdge) {
  auto shards = induce_shards(p4_graph(), Partition{2, {0, 0, 1, 1}});
  Shard s = remove_nodes(shards[0], DeleteSet({1}));
  EXPECT_EQ(s.node_ids, std::vector<NodeId>{0});
  EXPECT_EQ(s.adjacency.nnz(), 0u);
  EXPECT_EQ(s.labels, std::vector<int>{0});
  EXPECT_EQ(s.train_local, std::vector<std::size_t>{0});
}

TEST(RemoveNodes, EqualsReinductionFromReducedGraph) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Graph g = random_graph(30, 0.2, 3, 2, seed);
    Partition p = random_partition_of(30, 3, seed);
    Rng rng(seed + 7);
    std::vector<NodeId> del;
    while (del.size() < 3) {
      NodeId v = rng.below(30);
      if (std::find(del.begin(), del.end(), v) == del.end()) del.push_back(v);
    }
    DeleteSet d(del);
    Graph reduced = remove_nodes(g, d);
    std::vector<NodeId> keep;
    for (NodeId u = 0; u < 30; ++u)
      if (!d.contains(u)) keep.push_back(u);
    auto before = induce_shards(g, p);
    auto after = induce_shards(reduced, p, keep);
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(remove_nodes(before[i], d), after[i]);
  }
}

TEST(RemoveNodes, GraphLosesEdgesFeaturesAndSplits) {
  Graph g = remove_nodes(p4_graph(), DeleteSet({1}));
  EXPECT_EQ(g.n_nodes(), 4u);
  EXPECT_EQ(g.degree(1), 0u);
  EXPECT_EQ(g.adjacency().nnz(), 2u);
  EXPECT_EQ(g.features()(1, 0), 0.0);
  EXPECT_EQ(g.features()(1, 1), 0.0);
  EXPECT_FALSE(g.is_train(1));
}

TEST(InjectNoise, ZeroNodesIsIdentity) {
  Graph g = synth_graph({.seed = 1, .n = 50});
  NoisyGraph ng = inject_noise(g, 0, 10, 3);
  EXPECT_EQ(ng.graph, g);
  EXPECT_TRUE(ng.injected.empty());
}

TEST(InjectNoise, OneNodeAddsTwentyEntries) {
  Graph g = synth_graph({.seed = 1, .n = 50});
  NoisyGraph ng = inject_noise(g, 1, 10, 3);
  EXPECT_EQ(ng.graph.n_nodes(), 51u);
  EXPECT_EQ(ng.graph.adjacency().nnz(), g.adjacency().nnz() + 20);
  EXPECT_EQ(ng.injected.ids(), std::vector<NodeId>{50});
  EXPECT_TRUE(ng.graph.is_train(50));
}

TEST(InjectNoise, HundredNodesGrowDegreeSumByTwoThousand) {
  Graph g = synth_graph({.seed = 2, .n = 300, .n_classes = 3, .blocks = 3});
  NoisyGraph ng = inject_noise(g, 100, 10, 4);
  auto sum = [](const std::vector<double>& d) { return std::accumulate(d.begin(), d.end(), 0.0); };
  EXPECT_DOUBLE_EQ(sum(ng.graph.degrees()) - sum(g.degrees()), 2000.0);
  for (NodeId id : ng.injected.ids()) {
    EXPECT_EQ(ng.graph.degree(id), 10u);
    for (NodeId v : ng.graph.neighbors(id)) EXPECT_LT(v, 300u);
  }
}

TEST(InjectNoise, LabelDiffersFromFeatureDonor) {
  Graph g = synth_graph({.seed = 2, .n = 100, .feature_noise = 0.0});
  NoisyGraph ng = inject_noise(g, 40, 5, 8);
  for (NodeId id : ng.injected.ids()) {
    bool found_donor = false;
    for (NodeId u = 0; u < 100; ++u) {
      if (std::equal(g.features().row(u).begin(), g.features().row(u).end(),
                     ng.graph.features().row(id).begin())) {
        EXPECT_NE(g.labels()[u], ng.graph.labels()[id]);
        found_donor = true;
        break;
      }
    }
    EXPECT_TRUE(found_donor);
  }
}

TEST(SynthGraph, NoEdgesWhenProbabilitiesZero) {
  EXPECT_EQ(synth_graph({.seed = 1, .n = 30, .p_in = 0, .p_out = 0}).n_edges(), 0u);
}

TEST(SynthGraph, WithinBlockEdgesDominate) {
  SynthParams sp{.seed = 11};
  Graph g = synth_graph(sp);
  std::size_t within = 0, across = 0;
  for (const Triplet& t : g.adjacency().entries()) {
    (t.row * 4 / 200 == t.col * 4 / 200 ? within : across) += 1;
  }
  EXPECT_GT(within, across);
  for (NodeId u = 0; u < 200; ++u) EXPECT_EQ(g.labels()[u], static_cast<int>(u * 4 / 200));
}

TEST(SynthGraph, DeterministicPerSeed) {
  EXPECT_EQ(synth_graph({.seed = 5}), synth_graph({.seed = 5}));
  EXPECT_NE(synth_graph({.seed = 5}).adjacency(), synth_graph({.seed = 6}).adjacency());
}

TEST(Graph, RejectsAsymmetricAdjacency) {
  EXPECT_THROW(Graph(Sparse(2, 2, {{0, 1, 1}}), Dense(2, 1), {0, 0}, 1), ValidationError);
}

TEST(Graph, RejectsOverlappingSplits) {
  Splits s{{0, 1}, {1}, {}};
  EXPECT_THROW(p4_graph().with_splits(s), ValidationError);
}

TEST(Partition, ValidateRejectsOutOfRange) {
  EXPECT_THROW((Partition{2, {0, 2}}).validate(), ValidationError);
  EXPECT_THROW((Partition{0, {}}).validate(), ValidationError);
}

TEST(DeleteSet, SortsAndDeduplicates) {
  DeleteSet d({5, 1, 5, 3});
  EXPECT_EQ(d.ids(), (std::vector<NodeId>{1, 3, 5}));
  EXPECT_EQ(d.merged(DeleteSet({2, 3})).ids(), (std::vector<NodeId>{1, 2, 3, 5}));
}

TEST(InducedSubgraph, RelabelsCompactly) {
  InducedSubgraph sub = induced_subgraph(p4_graph(), std::vector<NodeId>{1, 2, 3});
  EXPECT_EQ(sub.graph.n_nodes(), 3u);
  EXPECT_EQ(sub.graph.n_edges(), 2u);
  EXPECT_EQ(sub.original, (std::vector<NodeId>{1, 2, 3}));
  EXPECT_EQ(sub.graph.labels(), (std::vector<int>{1, 0, 1}));
}

}  // namespace
}  // namespace gunl
