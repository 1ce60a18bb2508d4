#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gunl/bench/config.hpp"
#include "gunl/unlearn/pipeline.hpp"

namespace gunl::bench {

/// Share of positions where the labels agree. Throws ContractError on empty
/// or unequal inputs.
double f1_micro(std::span<const int> predicted, std::span<const int> actual);

/// Micro-F1 of the pipeline on its graph's test split.
double evaluate_f1(const PipelineState& state);

Graph load_dataset(const DatasetSpec& spec);

struct MetricsRecord {
  std::string run_id;
  double f1 = 0.0;
  std::vector<std::pair<std::string, double>> seconds;  ///< stage name, wall-clock
  std::uint64_t seed = 0;
  std::string config_hash;

  /// `key=value` lines, stages as `seconds.<stage>=...`.
  std::string to_record() const;
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  ///< sample (n - 1); 0 for a single value
  double min = 0.0;
};
Summary summarize(std::span<const double> values);

/// The explicit ids of `spec`, or else ceil(fraction * N) nodes drawn with
/// `seed` from the live training split.
DeleteSet draw_request(const PipelineState& state, const DeleteSpec& spec, std::uint64_t seed);

struct BuildOutcome {
  std::vector<MetricsRecord> records;
  Summary f1;
};

/// Builds `repetitions` pipelines (default 10) with seeds seed, seed+1, ...,
/// persists the first under <out>/state and writes metrics.txt and summary.txt.
BuildOutcome cmd_build(const ExperimentConfig& config, std::ostream& log);

struct UnlearnOutcome {
  UnlearnReport report;
  MetricsRecord record;
};

/// Loads <out>/state, deletes `request` (or the config's delete spec), saves
/// the result back and appends the report to unlearn_ledger.txt.
UnlearnOutcome cmd_unlearn(const ExperimentConfig& config, const std::optional<DeleteSet>& request,
                           std::ostream& log);

struct NoiseOutcome {
  std::vector<MetricsRecord> clean;
  std::vector<MetricsRecord> poisoned;
  std::vector<MetricsRecord> unlearned;
  Summary clean_f1;
  Summary poisoned_f1;
  Summary unlearned_f1;
};

/// Per repetition (default 5): build on the clean graph, on the graph with
/// injected noise nodes, then unlearn the injected nodes.
NoiseOutcome run_noise_recovery(const Graph& graph, const ExperimentConfig& config, std::ostream& log);
/// run_noise_recovery on the configured dataset; writes noise_metrics.txt and
/// noise_summary.txt.
NoiseOutcome cmd_noise_recovery(const ExperimentConfig& config, std::ostream& log);

struct ComparisonRow {
  std::string strategy;  ///< "retrain", "random" or "trained"
  std::uint64_t seed = 0;
  double f1 = 0.0;
  double unlearn_seconds = 0.0;
  double retrain_seconds = 0.0;

  friend bool operator==(const ComparisonRow&, const ComparisonRow&) = default;
};

/// Tab-separated with a header line; doubles printed to round-trip exactly.
std::string format_table(std::span<const ComparisonRow> rows);
/// Throws ParseError on a malformed table.
std::vector<ComparisonRow> parse_table(const std::string& text);

struct ComparisonOutcome {
  std::vector<ComparisonRow> rows;
  /// Mean F1 per strategy in the order retrain, random, trained.
  std::vector<std::pair<std::string, Summary>> f1;
};

/// Per repetition (default 10): a single-shard pipeline as the retrain
/// baseline, a random-partition pipeline and a trained-partition pipeline.
/// Sharded strategies also time one unlearn request against full_retrain.
ComparisonOutcome run_bench_compare(const Graph& graph, const ExperimentConfig& config, std::ostream& log);
/// run_bench_compare on the configured dataset; writes compare.tsv and
/// compare_summary.txt.
ComparisonOutcome cmd_bench_compare(const ExperimentConfig& config, std::ostream& log);

/// Loads <out>/state and replays every shard.
ExactnessReport cmd_verify_exactness(const ExperimentConfig& config, std::ostream& log);

/// Exit status for an exception escaping a command: 2 for configuration
/// errors, 3 for data errors, 4 otherwise.
int exit_code_for(const std::exception& e);

}  // namespace gunl::bench
