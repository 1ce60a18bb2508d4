#include "gunl/unlearn/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "gunl/errors.hpp"
#include "gunl/numerics/checkpoint.hpp"
#include "gunl/numerics/parallel.hpp"

namespace gunl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string text(double v) { return format_double(v); }
std::string text(std::size_t v) { return std::to_string(v); }

template <class Range>
std::string join(const Range& values) {
  std::string out;
  for (const auto& v : values) out += (out.empty() ? "" : " ") + text(v);
  return out;
}

std::vector<NodeId> parse_ids(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  std::vector<NodeId> out;
  std::string tok;
  while (in >> tok) {
    std::size_t pos = 0;
    try {
      out.push_back(std::stoull(tok, &pos));
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size()) throw LoadError(what + ": bad node id '" + tok + "'");
  }
  return out;
}

Partition trained_partition(const Graph& graph, const PartitionConfig& config) {
  std::vector<NodeId> train = graph.splits().train;
  if (train.empty()) throw ValidationError("build: the training split is empty");
  std::sort(train.begin(), train.end());
  const InducedSubgraph sub = induced_subgraph(graph, train);
  const PartitionerResult fit = train_partitioner(sub.graph, config);

  Partition partition = infer_partition(psi_forward(graph, fit.params));
  const Partition local = infer_partition(psi_forward(sub.graph, fit.params));
  for (std::size_t k = 0; k < sub.original.size(); ++k) {
    partition.assignment[sub.original[k]] = local.assignment[k];
  }
  return partition;
}

EncoderSet make_encoders(const std::vector<Shard>& shards, const std::vector<ShardModel>& models) {
  EncoderSet encoders(shards.size());
  for (std::size_t i = 0; i < shards.size(); ++i) {
    if (!models[i].untrained) encoders[i].emplace(shards[i], models[i]);
  }
  return encoders;
}

std::vector<Shard> member_shards(const Graph& graph, const Partition& partition) {
  return induce_shards(graph, partition, graph.splits().train);
}

std::string shard_stem(std::size_t i) {
  std::string id = std::to_string(i);
  if (id.size() < 2) id.insert(0, 2 - id.size(), '0');
  return "shard_" + id;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("missing " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path.filename().string() + ": expected key=value", ln);
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key,
                           const std::string& where) {
  auto it = kv.find(key);
  if (it == kv.end()) throw LoadError(where + ": missing '" + key + "'");
  return it->second;
}

std::uint64_t to_u64(const std::string& s, const std::string& where) {
  std::size_t pos = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw LoadError(where + ": bad integer '" + s + "'");
  return v;
}

}  // namespace

void PipelineConfig::validate() const {
  partition.validate();
  train.validate();
  aggregator.validate();
}

PipelineConfig PipelineConfig::seeded() const {
  PipelineConfig out = *this;
  out.partition.seed = seed;
  out.train.seed = seed;
  out.aggregator.seed = seed;
  return out;
}

PipelineState build_pipeline(const Graph& graph, const PipelineConfig& config, BuildTimings* timings) {
  config.validate();
  const auto start = Clock::now();
  PipelineState state;
  state.config = config.seeded();
  state.graph = graph;
  const auto& cfg = state.config;

  auto t = Clock::now();
  state.partition = cfg.strategy == PartitionStrategy::trained
                        ? trained_partition(graph, cfg.partition)
                        : random_partition(graph.n_nodes(), cfg.partition.n_shards, cfg.seed);
  const double partition_seconds = seconds_since(t);

  t = Clock::now();
  state.shards = member_shards(graph, state.partition);
  state.models.resize(state.shards.size());
  parallel_for(state.shards.size(), cfg.jobs, [&](std::size_t i) {
    state.models[i] = train_submodel(state.shards[i], graph.n_classes(), cfg.train, 0);
  });
  state.encoders = make_encoders(state.shards, state.models);
  const double shards_seconds = seconds_since(t);

  t = Clock::now();
  AggregatorTrainResult agg = train_aggregator(state.encoders, graph, state.partition, cfg.aggregator, cfg.jobs);
  state.aggregator = std::move(agg.aggregator);
  state.aggregator_sample = std::move(agg.sample);
  const double aggregator_seconds = seconds_since(t);

  if (timings) *timings = {partition_seconds, shards_seconds, aggregator_seconds, seconds_since(start)};
  return state;
}

PipelineState full_retrain(const Graph& graph_minus_deletes, const PipelineConfig& config,
                           BuildTimings* timings) {
  return build_pipeline(graph_minus_deletes, config, timings);
}

std::set<std::size_t> locate_affected(const Partition& partition, const DeleteSet& request) {
  std::set<std::size_t> out;
  for (NodeId v : request.ids()) {
    if (v >= partition.assignment.size()) throw ContractError("locate_affected: node " + std::to_string(v) + " out of range");
    out.insert(partition.assignment[v]);
  }
  return out;
}

std::string UnlearnReport::to_record() const {
  std::ostringstream s;
  s << "request_size=" << request_size << '\n'
    << "affected=" << join(affected) << '\n'
    << "shard_seconds=" << join(shard_seconds) << '\n'
    << "shards_makespan_seconds=" << format_double(shards_makespan_seconds) << '\n'
    << "aggregator_seconds=" << format_double(aggregator_seconds) << '\n'
    << "total_seconds=" << format_double(total_seconds) << '\n'
    << "untouched=" << untouched << '\n';
  return s.str();
}

UnlearnReport unlearn(PipelineState& state, const DeleteSet& request) {
  const auto start = Clock::now();
  for (NodeId v : request.ids()) {
    if (state.deleted.contains(v)) throw ContractError("unlearn: node " + std::to_string(v) + " was already deleted");
    if (v >= state.graph.n_nodes() || !state.graph.is_train(v)) {
      throw ValidationError("unlearn: node " + std::to_string(v) + " is not a training node");
    }
  }
  const auto& cfg = state.config;
  const std::set<std::size_t> affected_set = locate_affected(state.partition, request);

  UnlearnReport report;
  report.request_size = request.size();
  report.affected.assign(affected_set.begin(), affected_set.end());
  report.shard_seconds.assign(report.affected.size(), 0.0);
  report.untouched = state.shards.size() - report.affected.size();

  state.graph = remove_nodes(state.graph, request);
  state.deleted = state.deleted.merged(request);

  auto t = Clock::now();
  parallel_for(report.affected.size(), cfg.jobs, [&](std::size_t k) {
    const auto shard_start = Clock::now();
    const std::size_t i = report.affected[k];
    state.shards[i] = remove_nodes(state.shards[i], request);
    state.models[i] = train_submodel(state.shards[i], state.graph.n_classes(), cfg.train,
                                     state.models[i].retrain_counter + 1);
    report.shard_seconds[k] = seconds_since(shard_start);
  });
  for (std::size_t i : report.affected) {
    state.encoders[i].reset();
    if (!state.models[i].untrained) state.encoders[i].emplace(state.shards[i], state.models[i]);
  }
  report.shards_makespan_seconds = seconds_since(t);

  t = Clock::now();
  AggregatorTrainResult agg = train_aggregator(state.encoders, state.graph, state.partition, cfg.aggregator, cfg.jobs);
  state.aggregator = std::move(agg.aggregator);
  state.aggregator_sample = std::move(agg.sample);
  report.aggregator_seconds = seconds_since(t);
  report.total_seconds = seconds_since(start);
  return report;
}

bool ExactnessReport::exact() const {
  return std::all_of(max_delta.begin(), max_delta.end(), [](double d) { return d == 0.0; });
}

ExactnessReport verify_exactness(const PipelineState& state) {
  const std::vector<Shard> fresh = member_shards(state.graph, state.partition);
  ExactnessReport report;
  report.max_delta.assign(fresh.size(), 0.0);
  parallel_for(fresh.size(), state.config.jobs, [&](std::size_t i) {
    const ShardModel& current = state.models[i];
    const ShardModel replay =
        train_submodel(fresh[i], state.graph.n_classes(), state.config.train, current.retrain_counter);
    double delta = 0.0;
    if (replay.untrained != current.untrained) {
      delta = std::numeric_limits<double>::infinity();
    } else if (!replay.params.same_values(current.params)) {
      try {
        delta = std::max(replay.params.max_abs_delta(current.params), std::numeric_limits<double>::denorm_min());
      } catch (const ShapeError&) {
        delta = std::numeric_limits<double>::infinity();
      }
    }
    report.max_delta[i] = delta;
  });
  return report;
}

Prediction predict(const PipelineState& state, std::span<const NodeId> queries) {
  for (NodeId q : queries) {
    if (q >= state.graph.n_nodes()) throw ContractError("predict: node " + std::to_string(q) + " out of range");
    if (state.deleted.contains(q)) throw ContractError("predict: node " + std::to_string(q) + " was deleted");
  }
  return predict(state.encoders, state.aggregator, state.graph, queries, state.config.jobs);
}

DeleteSet load_request(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("missing request file " + path.string());
  std::vector<NodeId> ids;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string tok = line.substr(first, last - first + 1);
    std::size_t pos = 0;
    try {
      ids.push_back(std::stoull(tok, &pos));
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != tok.size()) throw ParseError(path.filename().string() + ": bad node id", ln);
  }
  return DeleteSet(std::move(ids));
}

void save_request(const std::filesystem::path& path, const DeleteSet& request) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path.string());
  for (NodeId v : request.ids()) out << v << '\n';
}

void save_pipeline(const std::filesystem::path& dir, const PipelineState& state, const std::string& tag) {
  std::filesystem::create_directories(dir);
  save_partition(dir / "partition.txt", state.partition);
  for (std::size_t i = 0; i < state.models.size(); ++i) {
    const ShardModel& m = state.models[i];
    save_checkpoint(dir / shard_stem(i), m.params,
                    {{"shard_id", std::to_string(m.shard_id)},
                     {"retrain_counter", std::to_string(m.retrain_counter)},
                     {"train_seed", std::to_string(m.train_seed)},
                     {"epochs_run", std::to_string(m.epochs_run)},
                     {"final_train_loss", format_double(m.final_train_loss)},
                     {"untrained", m.untrained ? "1" : "0"}});
  }
  save_aggregator(dir / "aggregator", state.aggregator);

  std::ofstream out(dir / "pipeline.manifest");
  if (!out) throw LoadError("cannot write " + (dir / "pipeline.manifest").string());
  out << "format=gunl-pipeline-1\n"
      << "tag=" << tag << '\n'
      << "seed=" << state.config.seed << '\n'
      << "nodes=" << state.graph.n_nodes() << '\n'
      << "shards=" << state.partition.n_shards << '\n'
      << "deleted=" << join(state.deleted.ids()) << '\n'
      << "aggregator_sample=" << join(state.aggregator_sample) << '\n';
  if (!out) throw LoadError("short write on " + (dir / "pipeline.manifest").string());
}

PipelineState load_pipeline(const std::filesystem::path& dir, const Graph& original,
                            const PipelineConfig& config, const std::string& tag) {
  const std::string where = (dir / "pipeline.manifest").string();
  const auto kv = read_key_values(dir / "pipeline.manifest");
  if (require(kv, "format", where) != "gunl-pipeline-1") throw LoadError(where + ": unknown format");
  if (require(kv, "tag", where) != tag) {
    throw LoadError(where + ": stored tag '" + kv.at("tag") + "' does not match '" + tag + "'");
  }
  PipelineState state;
  state.config = config.seeded();
  if (to_u64(require(kv, "seed", where), where) != state.config.seed) throw LoadError(where + ": seed mismatch");
  if (to_u64(require(kv, "nodes", where), where) != original.n_nodes()) throw LoadError(where + ": node count mismatch");

  state.deleted = DeleteSet(parse_ids(require(kv, "deleted", where), where));
  state.aggregator_sample = parse_ids(require(kv, "aggregator_sample", where), where);
  state.graph = state.deleted.empty() ? original : remove_nodes(original, state.deleted);

  state.partition = load_partition(dir / "partition.txt");
  if (state.partition.assignment.size() != original.n_nodes() ||
      state.partition.n_shards != to_u64(require(kv, "shards", where), where)) {
    throw LoadError(where + ": partition does not match the manifest");
  }
  state.shards = member_shards(state.graph, state.partition);

  state.models.resize(state.shards.size());
  for (std::size_t i = 0; i < state.shards.size(); ++i) {
    const std::string stem = (dir / shard_stem(i)).string();
    Checkpoint ck = load_checkpoint(dir / shard_stem(i));
    ShardModel& m = state.models[i];
    m.shard_id = to_u64(require(ck.meta, "shard_id", stem), stem);
    m.retrain_counter = to_u64(require(ck.meta, "retrain_counter", stem), stem);
    m.train_seed = to_u64(require(ck.meta, "train_seed", stem), stem);
    m.epochs_run = to_u64(require(ck.meta, "epochs_run", stem), stem);
    m.final_train_loss = std::stod(require(ck.meta, "final_train_loss", stem));
    m.untrained = require(ck.meta, "untrained", stem) == "1";
    m.params = std::move(ck.params);
    if (m.shard_id != i || m.untrained != state.shards[i].train_local.empty()) {
      throw LoadError(stem + ": checkpoint does not match the shard content");
    }
  }
  state.encoders = make_encoders(state.shards, state.models);
  state.aggregator = load_aggregator(dir / "aggregator", state.partition.n_shards);
  return state;
}

}  // namespace gunl
