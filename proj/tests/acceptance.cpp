// Acceptance checks, one line per criterion. Exit status: 0 when every
// selected criterion passes, 77 when all selected ones were skipped, 1 on any
// failure. Criteria 5-7 need GUNL_CORA_DIR (edges.txt, features.txt,
// labels.txt, optional splits.txt); without it they run on a Cora-shaped
// synthetic graph, print the numbers and report SKIP.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gunl/aggregate/aggregator.hpp"
#include "gunl/bench/bench.hpp"
#include "gunl/errors.hpp"
#include "gunl/oracles/oracles.hpp"
#include "gunl/partition/partitioner.hpp"
#include "gunl/unlearn/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace gunl;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status = Status::pass;
  std::string detail;
};

// Collects failed sub-checks so one criterion reports all of them.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  Outcome outcome() const {
    Outcome o;
    o.status = failures_.empty() ? Status::pass : Status::fail;
    std::vector<std::string> parts = failures_;
    parts.insert(parts.end(), notes_.begin(), notes_.end());
    for (std::size_t i = 0; i < parts.size(); ++i) o.detail += (i ? "; " : "") + parts[i];
    return o;
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string num(double v, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

std::size_t jobs() {
  if (const char* j = std::getenv("GUNL_JOBS")) return std::max<std::size_t>(1, std::stoul(j));
  return std::max(1u, std::thread::hardware_concurrency());
}

std::optional<Graph> cora() {
  const char* dir = std::getenv("GUNL_CORA_DIR");
  if (!dir || !*dir) return std::nullopt;
  bench::DatasetSpec spec;
  spec.kind = bench::DatasetSpec::Kind::files;
  spec.path = dir;
  return bench::load_dataset(spec);
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double eval(Var (*loss)(Var, const Graph&), const Dense& P, const Graph& g) {
  Tape t;
  return loss(t.constant_ref(P), g).value().item();
}

Outcome loss_oracle_agreement() {
  Checks c;
  Rng rng(2024);
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 50; ++k) {
    const std::size_t n = 2 + rng.below(19);
    const std::size_t s = 1 + rng.below(5);
    const Graph g = testing::random_graph(n, 0.3, 3, 1 + rng.below(4), 100 + k);
    const Dense P = testing::random_assignment(n, s, rng);
    const double d[] = {std::abs(eval(loss_time, P, g) - oracle::loss_time(P, g)),
                        std::abs(eval(loss_struct, P, g) - oracle::loss_struct(P, g)),
                        std::abs(eval(loss_sem, P, g) - oracle::loss_sem(P, g))};
    for (double v : d) worst = std::max(worst, v);
    c.expect(d[0] <= 1e-10 && d[1] <= 1e-10 && d[2] <= 1e-10,
             "instance " + std::to_string(k) + " (N=" + std::to_string(n) + ", S=" + std::to_string(s) +
                 ") differs by " + num(std::max({d[0], d[1], d[2]})));
  }
  c.note("50 instances, max |vectorized - oracle| = " + num(worst, 3));
  return c.outcome();
}

Outcome path_graph_values() {
  Checks c;
  const Graph g = testing::p4_graph();
  const Dense P = testing::one_hot({0, 0, 1, 1}, 2);
  const double time = eval(loss_time, P, g);
  const double structure = eval(loss_struct, P, g);
  const double semantic = eval(loss_sem, P, g);
  c.expect(std::abs(time - 2.0) <= 1e-12, "time loss " + num(time, 10) + " != 2.0");
  c.expect(std::abs(structure - 0.666667) <= 5e-7, "structure loss " + num(structure, 10) + " != 0.666667");
  c.expect(std::abs(semantic - 0.693147) <= 5e-7, "semantic loss " + num(semantic, 10) + " != 0.693147");
  c.note("time=" + num(time) + " struct=" + num(structure) + " sem=" + num(semantic));
  return c.outcome();
}

Outcome gradient_checks() {
  Checks c;
  double worst_part = 0.0, worst_aggr = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = testing::random_graph(10, 0.3, 4, 3, seed);
    {
      const PartitionConfig cfg{.n_shards = 3, .hidden = 5, .lambda_time = 1e-1, .lambda_sem = 1e-1,
                                .gamma = 1e-2, .seed = seed};
      const ParamStore ps = init_partitioner(4, cfg);
      Tape t;
      const GradMap analytic = gradients(loss_part(psi_forward(t, g, ps), g, cfg, ps), ps);
      const GradMap numeric = oracle::finite_diff(
          [&](const ParamStore& p) {
            Tape t2;
            return loss_part(psi_forward(t2, g, p), g, cfg, p).value().item();
          },
          ps);
      const double err = testing::max_rel_err(analytic, numeric, 1e-6);
      worst_part = std::max(worst_part, err);
      c.expect(err <= 1e-4, "partition loss seed " + std::to_string(seed) + " rel err " + num(err, 3));
    }
    {
      Rng rng(seed);
      Partition p{3, std::vector<std::size_t>(10)};
      for (auto& a : p.assignment) a = rng.below(3);
      std::vector<NodeId> nodes(10);
      for (NodeId v = 0; v < 10; ++v) nodes[v] = v;
      BatchEmbeddings b;
      for (std::size_t s = 0; s < 3; ++s) {
        b.shard_ids.push_back(s);
        b.per_shard.push_back(testing::random_dense(10, 4, rng));
      }
      const AggTrainConfig cfg{.lambda_contra = 0.5, .lambda_recon = 0.5, .gamma = 1e-2, .seed = seed};
      const Aggregator agg = init_aggregator(3, 4, 3, cfg);
      const EpochDraw draw = draw_epoch(b, recon_candidates(g, p, nodes), 0.5, rng);
      const std::vector<int> labels(g.labels().begin(), g.labels().end());
      Tape t;
      const GradMap analytic = gradients(loss_aggr(t, b, labels, draw, agg, cfg), agg.params);
      const GradMap numeric = oracle::finite_diff(
          [&](const ParamStore& ps) {
            Aggregator probe = agg;
            probe.params = ps;
            Tape t2;
            return loss_aggr(t2, b, labels, draw, probe, cfg).value().item();
          },
          agg.params);
      const double err = testing::max_rel_err(analytic, numeric, 1e-6);
      worst_aggr = std::max(worst_aggr, err);
      c.expect(err <= 1e-4, "aggregator loss seed " + std::to_string(seed) + " rel err " + num(err, 3));
    }
  }
  c.note("20 seeds, max rel err partition=" + num(worst_part, 3) + " aggregator=" + num(worst_aggr, 3));
  return c.outcome();
}

PipelineConfig small_config(std::size_t shards, std::uint64_t seed) {
  PipelineConfig c;
  c.partition = {.n_shards = shards, .hidden = 16, .epochs = 10};
  c.train = {.epochs = 30, .hidden = 16, .embedding = 16};
  c.aggregator = {.sample_size = 60, .epochs = 10};
  c.seed = seed;
  return c;
}

Graph small_graph() { return synth_graph({.seed = 7, .n = 200, .p_in = 0.1, .p_out = 0.01, .feature_noise = 0.6}); }

std::vector<NodeId> train_nodes_of(const PipelineState& st, std::size_t s) {
  std::vector<NodeId> out;
  for (NodeId v : st.graph.splits().train)
    if (st.partition.assignment[v] == s && !st.deleted.contains(v)) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

Outcome scripted_unlearning() {
  Checks c;
  const auto dir = std::filesystem::temp_directory_path() / "gunl_acceptance_exactness";
  std::filesystem::remove_all(dir);
  PipelineState st = build_pipeline(small_graph(), small_config(4, 11));

  std::vector<std::size_t> nonempty;
  for (std::size_t s = 0; s < 4; ++s)
    if (train_nodes_of(st, s).size() >= 3) nonempty.push_back(s);
  if (nonempty.size() < 2) {
    c.expect(false, "fewer than two shards with three training nodes");
    return c.outcome();
  }
  const std::size_t a = nonempty[0], b = nonempty[1], z = nonempty.back();

  // Each step picks nodes from the current state so earlier deletions are respected.
  const std::vector<std::function<DeleteSet()>> script{
      [&] { return DeleteSet({train_nodes_of(st, a)[0]}); },
      [&] {
        const auto na = train_nodes_of(st, a), nb = train_nodes_of(st, b);
        return DeleteSet({na[0], nb[0], nb[1]});
      },
      [&] { return DeleteSet({train_nodes_of(st, z).back()}); }};

  for (std::size_t step = 0; step < script.size(); ++step) {
    const DeleteSet request = script[step]();
    save_pipeline(dir, st, "acceptance");
    std::vector<std::string> before;
    for (std::size_t s = 0; s < 4; ++s) {
      const std::string stem = "shard_0" + std::to_string(s);
      before.push_back(file_bytes(dir / (stem + ".bin")) + file_bytes(dir / (stem + ".manifest")));
    }
    const UnlearnReport r = unlearn(st, request);
    save_pipeline(dir, st, "acceptance");
    const ExactnessReport ex = verify_exactness(st);
    double worst = 0.0;
    for (double d : ex.max_delta) worst = std::max(worst, d);
    c.expect(ex.exact(), "step " + std::to_string(step + 1) + " not exact, max delta " + num(worst, 3));
    std::size_t untouched_same = 0;
    for (std::size_t s = 0; s < 4; ++s) {
      if (std::find(r.affected.begin(), r.affected.end(), s) != r.affected.end()) continue;
      const std::string stem = "shard_0" + std::to_string(s);
      const bool same = file_bytes(dir / (stem + ".bin")) + file_bytes(dir / (stem + ".manifest")) == before[s];
      untouched_same += same;
      c.expect(same, "step " + std::to_string(step + 1) + " changed untouched shard " + std::to_string(s));
    }
    c.note("step " + std::to_string(step + 1) + ": " + std::to_string(request.size()) + " nodes, " +
           std::to_string(r.affected.size()) + " retrained, " + std::to_string(untouched_same) +
           " checkpoints byte-identical");
  }
  std::filesystem::remove_all(dir);
  return c.outcome();
}

// The Cora criteria share this shape: run on Cora when present, otherwise on
// the surrogate for information.
template <class Fn>
Outcome on_cora(Fn&& fn) {
  if (auto g = cora()) return fn(*g);
  std::cout << "  info: GUNL_CORA_DIR not set; running the Cora-shaped synthetic graph instead\n";
  Outcome o = fn(testing::cora_like_graph(1));
  o.detail = "no Cora data; surrogate " + std::string(o.status == Status::pass ? "meets" : "misses") +
             " the bound: " + o.detail;
  o.status = Status::skip;
  return o;
}

Outcome unlearn_cost(const Graph& graph) {
  Checks c;
  PipelineConfig pc;
  pc.seed = 0;
  pc.jobs = jobs();
  BuildTimings build;
  PipelineState state = build_pipeline(graph, pc, &build);
  const DeleteSet request = bench::draw_request(state, {}, derive_seed({0, 0xde1e7eULL, 0}));
  BuildTimings retrain;
  full_retrain(remove_nodes(graph, request), pc, &retrain);
  const UnlearnReport r = unlearn(state, request);
  const double ratio = r.total_seconds / retrain.total_seconds;
  c.expect(ratio <= 0.5, "unlearn " + num(r.total_seconds, 3) + "s is " + num(ratio, 3) + " of full retrain " +
                             num(retrain.total_seconds, 3) + "s");
  c.note("jobs=" + std::to_string(pc.jobs) + ", " + std::to_string(request.size()) + " nodes hit " +
         std::to_string(r.affected.size()) + "/20 shards; unlearn " + num(r.total_seconds, 3) + "s (shards " +
         num(r.shards_makespan_seconds, 3) + "s, aggregator " + num(r.aggregator_seconds, 3) +
         "s) vs retrain " + num(retrain.total_seconds, 3) + "s (partition " + num(retrain.partition_seconds, 3) +
         "s, shards " + num(retrain.shards_seconds, 3) + "s, aggregator " + num(retrain.aggregator_seconds, 3) +
         "s), ratio " + num(ratio, 3));
  return c.outcome();
}

bench::ExperimentConfig five_seeds() {
  bench::ExperimentConfig cfg;
  cfg.repetitions = 5;
  cfg.seed = 0;
  cfg.jobs = jobs();
  return cfg;
}

Outcome utility_order(const Graph& graph) {
  Checks c;
  std::ostringstream log;
  const auto outcome = bench::run_bench_compare(graph, five_seeds(), log);
  double retrain = 0, random = 0, trained = 0;
  for (const auto& [name, s] : outcome.f1) {
    if (name == "retrain") retrain = s.mean;
    if (name == "random") random = s.mean;
    if (name == "trained") trained = s.mean;
  }
  c.expect(retrain > trained, "retrain " + num(retrain, 4) + " <= trained " + num(trained, 4));
  c.expect(trained > random, "trained " + num(trained, 4) + " <= random " + num(random, 4));
  c.expect(trained >= 0.60, "trained " + num(trained, 4) + " < 0.60");
  c.note("mean F1 over 5 seeds: retrain " + num(retrain, 4) + ", trained " + num(trained, 4) + ", random " +
         num(random, 4));
  return c.outcome();
}

Outcome noise_recovery(const Graph& graph) {
  Checks c;
  std::ostringstream log;
  const auto o = bench::run_noise_recovery(graph, five_seeds(), log);
  const double clean = o.clean_f1.mean, poisoned = o.poisoned_f1.mean, unlearned = o.unlearned_f1.mean;
  c.expect(poisoned < unlearned, "poisoned " + num(poisoned, 4) + " >= unlearned " + num(unlearned, 4));
  c.expect(unlearned <= clean, "unlearned " + num(unlearned, 4) + " > clean " + num(clean, 4));
  c.note("mean F1 over 5 seeds: poisoned " + num(poisoned, 4) + ", unlearned " + num(unlearned, 4) + ", clean " +
         num(clean, 4));
  return c.outcome();
}

Outcome edge_cases() {
  Checks c;
  const Graph g = small_graph();

  // Single shard.
  {
    const PipelineConfig pc = small_config(1, 3);
    const PartitionerResult psi = train_partitioner(g, pc.seeded().partition);
    const double structure = evaluate_losses(psi_forward(g, psi.params), g).structure;
    c.expect(std::abs(structure) <= 1e-12, "S=1 structure loss " + num(structure, 3));
    c.expect(eval(loss_struct, Dense(g.n_nodes(), 1, 1.0), g) == 0.0, "S=1 one-hot structure loss not 0");
    PipelineState st = build_pipeline(g, pc);
    const auto& test = st.graph.splits().test;
    c.expect(predict(st, test).labels.size() == test.size(), "S=1 prediction size");
    unlearn(st, DeleteSet({st.graph.splits().train.front()}));
    c.expect(verify_exactness(st).exact(), "S=1 unlearn not exact");
  }

  // Empty delete set.
  {
    PipelineState st = build_pipeline(g, small_config(4, 5));
    const PipelineState before = st;
    const UnlearnReport r = unlearn(st, DeleteSet{});
    bool same = r.affected.empty() && st.graph.n_nodes() == before.graph.n_nodes() &&
                st.aggregator.params.same_values(before.aggregator.params);
    for (std::size_t i = 0; i < st.models.size(); ++i)
      same = same && st.models[i].params.same_values(before.models[i].params) &&
             st.models[i].retrain_counter == before.models[i].retrain_counter;
    c.expect(same, "empty delete set changed the pipeline");
  }

  // A shard with no nodes, through training and prediction.
  {
    Partition p{4, std::vector<std::size_t>(g.n_nodes())};
    for (NodeId v = 0; v < g.n_nodes(); ++v) p.assignment[v] = v % 3;  // shard 3 stays empty
    const auto shards = induce_shards(g, p, g.splits().train);
    EncoderSet encoders;
    bool untrained_ok = true;
    for (const Shard& sh : shards) {
      const ShardModel m = train_submodel(sh, g.n_classes(), {.epochs = 20, .hidden = 16, .embedding = 16});
      untrained_ok = untrained_ok && (m.untrained == (sh.shard_id == 3));
      encoders.push_back(m.untrained ? std::nullopt : std::optional<ShardEncoder>(ShardEncoder(sh, m)));
    }
    c.expect(untrained_ok, "only the empty shard should be untrained");
    const auto agg = train_aggregator(encoders, g, p, {.sample_size = 60, .epochs = 5});
    const auto& test = g.splits().test;
    const Prediction pred = predict(encoders, agg.aggregator, g, test);
    bool finite = pred.labels.size() == test.size();
    for (double v : pred.probabilities.values()) finite = finite && std::isfinite(v);
    c.expect(finite, "empty shard broke prediction");
  }

  // InfoNCE with identical embeddings.
  {
    const Dense e(5, 4, 0.5);
    Tape t;
    const std::vector<std::size_t> negatives{1, 2, 3, 4, 0};
    const double v = loss_contra(t.constant_ref(e), t.constant_ref(e), negatives, 0.5).value().item();
    c.expect(std::abs(v - std::log(3.0)) <= 1e-9, "identical-embedding InfoNCE " + num(v, 12) + " != ln 3");
  }
  c.note("S=1, empty delete set, empty shard and identical-embedding InfoNCE all hold");
  return c.outcome();
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
  double limit_seconds;  // 0 means no limit
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "vectorized partition losses match the oracles", loss_oracle_agreement, 5.0},
      {2, "path-graph loss values", path_graph_values, 1.0},
      {3, "analytic gradients match finite differences", gradient_checks, 0.0},
      {4, "scripted unlearning is exact and leaves untouched shards byte-identical", scripted_unlearning, 120.0},
      {5, "Cora: unlearning costs at most half of a full retrain", [] { return on_cora(unlearn_cost); }, 0.0},
      {6, "Cora: F1 retrain > trained > random, trained >= 0.60", [] { return on_cora(utility_order); }, 0.0},
      {7, "Cora: poisoned < unlearned <= clean", [] { return on_cora(noise_recovery); }, 0.0},
      {8, "edge cases", edge_cases, 0.0},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else {
      std::cerr << "usage: " << argv[0] << " [--criterion N]...\n";
      return 2;
    }
  }

  std::size_t failed = 0, skipped = 0, ran = 0;
  for (const auto& cr : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), cr.id) == selected.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.limit_seconds > 0 && seconds > cr.limit_seconds && o.status == Status::pass) {
      o = {Status::fail, "took " + num(seconds, 3) + "s, limit " + num(cr.limit_seconds, 3) + "s; " + o.detail};
    }
    const char* tag = o.status == Status::pass ? "[PASS]" : o.status == Status::fail ? "[FAIL]" : "[SKIP]";
    std::cout << tag << ' ' << cr.id << ' ' << cr.name << " (" << num(seconds, 3) << "s): " << o.detail << std::endl;
    failed += o.status == Status::fail;
    skipped += o.status == Status::skip;
  }
  if (ran == 0) {
    std::cerr << "no such criterion\n";
    return 2;
  }
  if (failed) return 1;
  return skipped == ran ? 77 : 0;
}
