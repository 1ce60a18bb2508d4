#include "gunl/bench/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "gunl/errors.hpp"
#include "gunl/graph/io.hpp"
#include "gunl/numerics/rng.hpp"

namespace gunl::bench {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_text(const std::filesystem::path& path, const std::string& text, bool append = false) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw LoadError("cannot write " + path.string());
  out << text;
  if (!out) throw LoadError("short write on " + path.string());
}

std::filesystem::path state_dir(const ExperimentConfig& config) { return config.out / "state"; }

MetricsRecord build_record(const std::string& run_id, double f1, const BuildTimings& t, std::uint64_t seed,
                           const std::string& hash) {
  return {run_id,
          f1,
          {{"partition", t.partition_seconds},
           {"shards", t.shards_seconds},
           {"aggregator", t.aggregator_seconds},
           {"total", t.total_seconds}},
          seed,
          hash};
}

std::string summary_lines(const std::string& prefix, const Summary& s) {
  return prefix + "_mean=" + fmt(s.mean) + '\n' + prefix + "_std=" + fmt(s.stddev) + '\n' + prefix +
         "_min=" + fmt(s.min) + '\n';
}

std::vector<double> f1_of(const std::vector<MetricsRecord>& records) {
  std::vector<double> out;
  for (const auto& r : records) out.push_back(r.f1);
  return out;
}

double seconds_of(const MetricsRecord& r, const std::string& stage) {
  for (const auto& [name, s] : r.seconds)
    if (name == stage) return s;
  return 0.0;
}

std::string records_text(const std::vector<MetricsRecord>& records) {
  std::string out;
  for (const auto& r : records) out += r.to_record() + '\n';
  return out;
}

}  // namespace

double f1_micro(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) throw ContractError("f1_micro: length mismatch");
  if (predicted.empty()) throw ContractError("f1_micro: empty input");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) ok += predicted[i] == actual[i];
  return static_cast<double>(ok) / static_cast<double>(predicted.size());
}

double evaluate_f1(const PipelineState& state) {
  const auto& test = state.graph.splits().test;
  const Prediction p = predict(state, test);
  std::vector<int> actual;
  actual.reserve(test.size());
  for (NodeId v : test) actual.push_back(state.graph.labels()[v]);
  return f1_micro(p.labels, actual);
}

Graph load_dataset(const DatasetSpec& spec) {
  if (spec.kind == DatasetSpec::Kind::synthetic) return synth_graph(spec.synth);
  const auto splits = spec.path / "splits.txt";
  Graph g = load_graph(spec.path / "edges.txt", spec.path / "features.txt", spec.path / "labels.txt",
                       std::filesystem::exists(splits) ? splits : std::filesystem::path{}, spec.n_classes)
                .graph;
  if (g.splits().train.empty()) g = split_random(g, spec.synth.split_ratios, spec.split_seed);
  return g;
}

std::string MetricsRecord::to_record() const {
  std::string out = "run_id=" + run_id + "\nf1=" + fmt(f1) + '\n';
  for (const auto& [stage, s] : seconds) out += "seconds." + stage + "=" + fmt(s) + '\n';
  out += "seed=" + std::to_string(seed) + "\nconfig_hash=" + config_hash + '\n';
  return out;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) return {};
  Summary s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  s.min = *std::min_element(values.begin(), values.end());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

DeleteSet draw_request(const PipelineState& state, const DeleteSpec& spec, std::uint64_t seed) {
  if (!spec.ids.empty()) return DeleteSet(spec.ids);
  const auto count = static_cast<std::size_t>(std::ceil(spec.fraction * static_cast<double>(state.graph.n_nodes())));
  std::vector<NodeId> pool = state.graph.splits().train;
  std::sort(pool.begin(), pool.end());
  if (count > pool.size()) throw ValidationError("delete request larger than the training split");
  Rng rng(seed);
  rng.shuffle(pool);
  pool.resize(count);
  return DeleteSet(std::move(pool));
}

BuildOutcome cmd_build(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const std::string hash = config_hash(config);
  const Graph graph = load_dataset(config.dataset);
  std::filesystem::create_directories(config.out);

  BuildOutcome outcome;
  const std::size_t reps = config.repetitions.value_or(10);
  for (std::size_t r = 0; r < reps; ++r) {
    const std::uint64_t seed = config.seed + r;
    BuildTimings t;
    const PipelineState state = build_pipeline(graph, config.pipeline_for(seed), &t);
    const double f1 = evaluate_f1(state);
    outcome.records.push_back(build_record("build-" + std::to_string(r), f1, t, seed, hash));
    log << "build seed=" << seed << " f1=" << fmt(f1) << " seconds=" << fmt(t.total_seconds) << '\n';
    if (r == 0) save_pipeline(state_dir(config), state, hash);
  }
  const std::vector<double> f1 = f1_of(outcome.records);
  outcome.f1 = summarize(f1);

  std::vector<double> totals;
  for (const auto& rec : outcome.records) totals.push_back(seconds_of(rec, "total"));
  write_text(config.out / "metrics.txt", records_text(outcome.records));
  write_text(config.out / "summary.txt", "command=build\nconfig_hash=" + hash + "\nrepetitions=" +
                                             std::to_string(reps) + '\n' + summary_lines("f1", outcome.f1) +
                                             summary_lines("seconds_total", summarize(totals)));
  log << "f1 " << fmt(outcome.f1.mean) << " +- " << fmt(outcome.f1.stddev) << '\n';
  return outcome;
}

UnlearnOutcome cmd_unlearn(const ExperimentConfig& config, const std::optional<DeleteSet>& request,
                           std::ostream& log) {
  config.validate();
  const std::string hash = config_hash(config);
  const Graph graph = load_dataset(config.dataset);
  PipelineState state = load_pipeline(state_dir(config), graph, config.pipeline_for(config.seed), hash);

  const DeleteSet req = request ? *request
                                : draw_request(state, config.deletion,
                                               derive_seed({config.seed, 0xde1e7eULL, state.deleted.size()}));
  UnlearnOutcome outcome;
  outcome.report = unlearn(state, req);
  const double f1 = evaluate_f1(state);
  outcome.record = {"unlearn-" + std::to_string(state.deleted.size()),
                    f1,
                    {{"shards", outcome.report.shards_makespan_seconds},
                     {"aggregator", outcome.report.aggregator_seconds},
                     {"total", outcome.report.total_seconds}},
                    config.seed,
                    hash};
  save_pipeline(state_dir(config), state, hash);
  save_request(config.out / "last_request.txt", req);
  write_text(config.out / "unlearn_ledger.txt", outcome.report.to_record() + outcome.record.to_record() + '\n', true);
  log << "unlearn t=" << req.size() << " affected=" << outcome.report.affected.size()
      << " untouched=" << outcome.report.untouched << " seconds=" << fmt(outcome.report.total_seconds)
      << " f1=" << fmt(f1) << '\n';
  return outcome;
}

NoiseOutcome run_noise_recovery(const Graph& graph, const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const std::string hash = config_hash(config);
  NoiseOutcome outcome;
  const std::size_t reps = config.repetitions.value_or(5);
  for (std::size_t r = 0; r < reps; ++r) {
    const std::uint64_t seed = config.seed + r;
    const PipelineConfig pc = config.pipeline_for(seed);
    const std::string id = std::to_string(r);

    BuildTimings t;
    const PipelineState clean = build_pipeline(graph, pc, &t);
    outcome.clean.push_back(build_record("clean-" + id, evaluate_f1(clean), t, seed, hash));

    const NoisyGraph noisy =
        inject_noise(graph, config.noise.nodes, config.noise.edges_per_node, derive_seed({seed, 0x9015eULL}));
    PipelineState poisoned = build_pipeline(noisy.graph, pc, &t);
    outcome.poisoned.push_back(build_record("poisoned-" + id, evaluate_f1(poisoned), t, seed, hash));

    const UnlearnReport rep = unlearn(poisoned, noisy.injected);
    outcome.unlearned.push_back({"unlearned-" + id,
                                 evaluate_f1(poisoned),
                                 {{"shards", rep.shards_makespan_seconds},
                                  {"aggregator", rep.aggregator_seconds},
                                  {"total", rep.total_seconds}},
                                 seed,
                                 hash});
    log << "noise seed=" << seed << " clean=" << fmt(outcome.clean.back().f1)
        << " poisoned=" << fmt(outcome.poisoned.back().f1) << " unlearned=" << fmt(outcome.unlearned.back().f1)
        << '\n';
  }
  outcome.clean_f1 = summarize(f1_of(outcome.clean));
  outcome.poisoned_f1 = summarize(f1_of(outcome.poisoned));
  outcome.unlearned_f1 = summarize(f1_of(outcome.unlearned));
  return outcome;
}

NoiseOutcome cmd_noise_recovery(const ExperimentConfig& config, std::ostream& log) {
  const NoiseOutcome outcome = run_noise_recovery(load_dataset(config.dataset), config, log);
  const std::string hash = config_hash(config);
  const std::size_t reps = outcome.clean.size();
  std::filesystem::create_directories(config.out);
  write_text(config.out / "noise_metrics.txt",
             records_text(outcome.clean) + records_text(outcome.poisoned) + records_text(outcome.unlearned));
  write_text(config.out / "noise_summary.txt",
             "command=noise-recovery\nconfig_hash=" + hash + "\nrepetitions=" + std::to_string(reps) + '\n' +
                 summary_lines("f1_clean", outcome.clean_f1) + summary_lines("f1_poisoned", outcome.poisoned_f1) +
                 summary_lines("f1_unlearned", outcome.unlearned_f1));
  return outcome;
}

std::string format_table(std::span<const ComparisonRow> rows) {
  std::string out = "strategy\tseed\tf1\tunlearn_seconds\tretrain_seconds\n";
  for (const auto& r : rows) {
    out += r.strategy + '\t' + std::to_string(r.seed) + '\t' + fmt(r.f1) + '\t' + fmt(r.unlearn_seconds) + '\t' +
           fmt(r.retrain_seconds) + '\n';
  }
  return out;
}

std::vector<ComparisonRow> parse_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "strategy\tseed\tf1\tunlearn_seconds\tretrain_seconds") {
    throw ParseError("comparison table: bad header", 1);
  }
  std::vector<ComparisonRow> rows;
  std::size_t ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      cells.push_back(line.substr(start, tab - start));
    }
    cells.push_back(line.substr(start));
    if (cells.size() != 5) throw ParseError("comparison table: expected 5 columns", ln);
    ComparisonRow r;
    r.strategy = cells[0];
    auto number = [&](const std::string& s, auto& out) {
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      if (ec != std::errc() || p != s.data() + s.size()) throw ParseError("comparison table: bad number '" + s + "'", ln);
    };
    number(cells[1], r.seed);
    number(cells[2], r.f1);
    number(cells[3], r.unlearn_seconds);
    number(cells[4], r.retrain_seconds);
    rows.push_back(std::move(r));
  }
  return rows;
}

ComparisonOutcome run_bench_compare(const Graph& graph, const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  ComparisonOutcome outcome;
  const std::size_t reps = config.repetitions.value_or(10);
  for (std::size_t r = 0; r < reps; ++r) {
    const std::uint64_t seed = config.seed + r;
    const std::uint64_t request_seed = derive_seed({seed, 0xde1e7eULL, 0});

    // Single shard: unlearning means retraining the one model.
    PipelineConfig whole = config.pipeline_for(seed);
    whole.strategy = PartitionStrategy::random;
    whole.partition.n_shards = 1;
    {
      const PipelineState state = build_pipeline(graph, whole);
      const DeleteSet req = draw_request(state, config.deletion, request_seed);
      BuildTimings t;
      full_retrain(remove_nodes(graph, req), whole, &t);
      outcome.rows.push_back({"retrain", seed, evaluate_f1(state), t.total_seconds, t.total_seconds});
    }
    for (const auto strategy : {PartitionStrategy::random, PartitionStrategy::trained}) {
      PipelineConfig pc = config.pipeline_for(seed);
      pc.strategy = strategy;
      PipelineState state = build_pipeline(graph, pc);
      const double f1 = evaluate_f1(state);
      const DeleteSet req = draw_request(state, config.deletion, request_seed);
      BuildTimings t;
      full_retrain(remove_nodes(graph, req), pc, &t);
      const UnlearnReport rep = unlearn(state, req);
      outcome.rows.push_back({strategy == PartitionStrategy::random ? "random" : "trained", seed, f1,
                              rep.total_seconds, t.total_seconds});
    }
    for (std::size_t k = outcome.rows.size() - 3; k < outcome.rows.size(); ++k) {
      const auto& row = outcome.rows[k];
      log << row.strategy << " seed=" << seed << " f1=" << fmt(row.f1) << " unlearn=" << fmt(row.unlearn_seconds)
          << "s retrain=" << fmt(row.retrain_seconds) << "s\n";
    }
  }

  for (const char* name : {"retrain", "random", "trained"}) {
    std::vector<double> f1;
    for (const auto& row : outcome.rows)
      if (row.strategy == name) f1.push_back(row.f1);
    outcome.f1.emplace_back(name, summarize(f1));
  }
  return outcome;
}

ComparisonOutcome cmd_bench_compare(const ExperimentConfig& config, std::ostream& log) {
  const ComparisonOutcome outcome = run_bench_compare(load_dataset(config.dataset), config, log);
  const std::string hash = config_hash(config);
  std::filesystem::create_directories(config.out);
  std::string summary = "command=bench-compare\nconfig_hash=" + hash +
                        "\nrepetitions=" + std::to_string(outcome.rows.size() / 3) + '\n';
  for (const auto& [name, f1_summary] : outcome.f1) {
    std::vector<double> unl, ret;
    for (const auto& row : outcome.rows) {
      if (row.strategy != name) continue;
      unl.push_back(row.unlearn_seconds);
      ret.push_back(row.retrain_seconds);
    }
    summary += summary_lines("f1_" + name, f1_summary) + summary_lines("unlearn_seconds_" + name, summarize(unl)) +
               summary_lines("retrain_seconds_" + name, summarize(ret));
  }
  write_text(config.out / "compare.tsv", format_table(outcome.rows));
  write_text(config.out / "compare_summary.txt", summary);
  return outcome;
}

ExactnessReport cmd_verify_exactness(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const std::string hash = config_hash(config);
  const Graph graph = load_dataset(config.dataset);
  const PipelineState state = load_pipeline(state_dir(config), graph, config.pipeline_for(config.seed), hash);
  const ExactnessReport report = verify_exactness(state);
  std::string text = "exact=" + std::string(report.exact() ? "1" : "0") + '\n';
  for (std::size_t i = 0; i < report.max_delta.size(); ++i) {
    text += "shard." + std::to_string(i) + ".max_delta=" + fmt(report.max_delta[i]) + '\n';
  }
  write_text(config.out / "exactness.txt", text);
  log << text;
  return report;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const LoadError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const ValidationError*>(&e)) {
    return 3;
  }
  return 4;
}

}  // namespace gunl::bench
