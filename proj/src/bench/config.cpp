#include "gunl/bench/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "gunl/errors.hpp"

namespace gunl::bench {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("expected a non-negative integer, got '" + v + "'");
  return out;
}

std::size_t to_size(const std::string& v) { return static_cast<std::size_t>(to_u64(v)); }

int to_int(const std::string& v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("expected an integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("expected a finite number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

std::vector<std::string> words(const std::string& v) {
  std::istringstream in(v);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

struct Entry {
  std::string key;
  bool hashed;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define GUNL_FIELD(key, hashed, member, parse)                                            \
  Entry {                                                                                 \
    key, hashed, [](ExperimentConfig& c, const std::string& v) { c.member = parse(v); }, \
        [](const ExperimentConfig& c) { return fmt(c.member); }                          \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    t.push_back({"dataset.kind", true,
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "synthetic") c.dataset.kind = DatasetSpec::Kind::synthetic;
                   else if (v == "files") c.dataset.kind = DatasetSpec::Kind::files;
                   else throw ConfigError("expected synthetic or files, got '" + v + "'");
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.dataset.kind == DatasetSpec::Kind::files ? "files" : "synthetic");
                 }});
    t.push_back({"dataset.path", true,
                 [](ExperimentConfig& c, const std::string& v) { c.dataset.path = v; },
                 [](const ExperimentConfig& c) { return c.dataset.path.string(); }});
    t.push_back(GUNL_FIELD("dataset.classes", true, dataset.n_classes, to_size));
    t.push_back(GUNL_FIELD("dataset.split_seed", true, dataset.split_seed, to_u64));
    t.push_back({"dataset.split_ratios", true,
                 [](ExperimentConfig& c, const std::string& v) {
                   const auto w = words(v);
                   if (w.size() != 3) throw ConfigError("expected three ratios, got '" + v + "'");
                   for (std::size_t i = 0; i < 3; ++i) c.dataset.synth.split_ratios[i] = to_double(w[i]);
                 },
                 [](const ExperimentConfig& c) {
                   const auto& r = c.dataset.synth.split_ratios;
                   return fmt(r[0]) + " " + fmt(r[1]) + " " + fmt(r[2]);
                 }});
    t.push_back(GUNL_FIELD("dataset.seed", true, dataset.synth.seed, to_u64));
    t.push_back(GUNL_FIELD("dataset.nodes", true, dataset.synth.n, to_size));
    t.push_back(GUNL_FIELD("dataset.synth_classes", true, dataset.synth.n_classes, to_size));
    t.push_back(GUNL_FIELD("dataset.blocks", true, dataset.synth.blocks, to_size));
    t.push_back(GUNL_FIELD("dataset.p_in", true, dataset.synth.p_in, to_double));
    t.push_back(GUNL_FIELD("dataset.p_out", true, dataset.synth.p_out, to_double));
    t.push_back(GUNL_FIELD("dataset.feature_noise", true, dataset.synth.feature_noise, to_double));
    t.push_back(GUNL_FIELD("dataset.extra_dims", true, dataset.synth.extra_dims, to_size));

    t.push_back({"partition.strategy", true,
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "trained") c.pipeline.strategy = PartitionStrategy::trained;
                   else if (v == "random") c.pipeline.strategy = PartitionStrategy::random;
                   else throw ConfigError("expected trained or random, got '" + v + "'");
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.pipeline.strategy == PartitionStrategy::random ? "random" : "trained");
                 }});
    t.push_back(GUNL_FIELD("partition.shards", true, pipeline.partition.n_shards, to_size));
    t.push_back(GUNL_FIELD("partition.hidden", true, pipeline.partition.hidden, to_size));
    t.push_back(GUNL_FIELD("partition.lambda_time", true, pipeline.partition.lambda_time, to_double));
    t.push_back(GUNL_FIELD("partition.lambda_sem", true, pipeline.partition.lambda_sem, to_double));
    t.push_back(GUNL_FIELD("partition.gamma", true, pipeline.partition.gamma, to_double));
    t.push_back(GUNL_FIELD("partition.lr", true, pipeline.partition.lr, to_double));
    t.push_back(GUNL_FIELD("partition.epochs", true, pipeline.partition.epochs, to_size));
    t.push_back(GUNL_FIELD("partition.sem_sign", true, pipeline.partition.sem_sign, to_int));

    t.push_back(GUNL_FIELD("train.epochs", true, pipeline.train.epochs, to_size));
    t.push_back(GUNL_FIELD("train.lr", true, pipeline.train.lr, to_double));
    t.push_back(GUNL_FIELD("train.weight_decay", true, pipeline.train.weight_decay, to_double));
    t.push_back(GUNL_FIELD("train.hidden", true, pipeline.train.hidden, to_size));
    t.push_back(GUNL_FIELD("train.embedding", true, pipeline.train.embedding, to_size));

    t.push_back(GUNL_FIELD("aggregator.sample_size", true, pipeline.aggregator.sample_size, to_size));
    t.push_back(GUNL_FIELD("aggregator.tau", true, pipeline.aggregator.tau, to_double));
    t.push_back(GUNL_FIELD("aggregator.lambda_contra", true, pipeline.aggregator.lambda_contra, to_double));
    t.push_back(GUNL_FIELD("aggregator.lambda_recon", true, pipeline.aggregator.lambda_recon, to_double));
    t.push_back(GUNL_FIELD("aggregator.gamma", true, pipeline.aggregator.gamma, to_double));
    t.push_back(GUNL_FIELD("aggregator.lr", true, pipeline.aggregator.lr, to_double));
    t.push_back(GUNL_FIELD("aggregator.epochs", true, pipeline.aggregator.epochs, to_size));
    t.push_back(GUNL_FIELD("aggregator.mask_rate", true, pipeline.aggregator.mask_rate, to_double));
    t.push_back(GUNL_FIELD("aggregator.paper_literal_infonce", true, pipeline.aggregator.paper_literal_infonce, to_bool));
    t.push_back(GUNL_FIELD("aggregator.paper_literal_triplet", true, pipeline.aggregator.paper_literal_triplet, to_bool));
    t.push_back(GUNL_FIELD("aggregator.uniform_attention", true, pipeline.aggregator.uniform_attention, to_bool));

    t.push_back(GUNL_FIELD("delete.fraction", false, deletion.fraction, to_double));
    t.push_back({"delete.ids", false,
                 [](ExperimentConfig& c, const std::string& v) {
                   c.deletion.ids.clear();
                   for (const auto& w : words(v)) c.deletion.ids.push_back(to_size(w));
                 },
                 [](const ExperimentConfig& c) {
                   std::string s;
                   for (NodeId id : c.deletion.ids) s += (s.empty() ? "" : " ") + std::to_string(id);
                   return s;
                 }});
    t.push_back(GUNL_FIELD("noise.nodes", false, noise.nodes, to_size));
    t.push_back(GUNL_FIELD("noise.edges_per_node", false, noise.edges_per_node, to_size));

    t.push_back(GUNL_FIELD("run.seed", true, seed, to_u64));
    t.push_back({"run.out", false, [](ExperimentConfig& c, const std::string& v) { c.out = v; },
                 [](const ExperimentConfig& c) { return c.out.string(); }});
    t.push_back({"run.repetitions", false,
                 [](ExperimentConfig& c, const std::string& v) { c.repetitions = to_size(v); },
                 [](const ExperimentConfig& c) { return c.repetitions ? std::to_string(*c.repetitions) : ""; }});
    t.push_back(GUNL_FIELD("run.jobs", false, jobs, to_size));
    return t;
  }();
  return table;
}

#undef GUNL_FIELD

}  // namespace

void ExperimentConfig::validate() const {
  pipeline.validate();
  if (!(deletion.fraction >= 0.0 && deletion.fraction < 1.0)) throw ConfigError("delete.fraction must lie in [0, 1)");
  if (repetitions && *repetitions == 0) throw ConfigError("run.repetitions must be at least 1");
  if (jobs == 0) throw ConfigError("run.jobs must be at least 1");
  const auto& r = dataset.synth.split_ratios;
  for (double x : r)
    if (x < 0.0) throw ConfigError("dataset.split_ratios must be non-negative");
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) throw ConfigError("dataset.split_ratios must sum to 1");
  if (dataset.kind == DatasetSpec::Kind::files) {
    if (dataset.path.empty()) throw ConfigError("dataset.path is required for file datasets");
  } else {
    const auto& s = dataset.synth;
    if (s.n == 0 || s.n_classes == 0 || s.blocks == 0) throw ConfigError("synthetic dataset sizes must be positive");
    if (!(0.0 <= s.p_out && s.p_out <= s.p_in && s.p_in <= 1.0)) {
      throw ConfigError("synthetic dataset needs 0 <= p_out <= p_in <= 1");
    }
    if (s.feature_noise < 0.0) throw ConfigError("dataset.feature_noise must be non-negative");
  }
}

PipelineConfig ExperimentConfig::pipeline_for(std::uint64_t run_seed) const {
  PipelineConfig c = pipeline;
  c.seed = run_seed;
  c.jobs = jobs;
  return c.seeded();
}

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, const Entry*> index;
  for (const Entry& e : entries()) index[e.key] = &e;

  ExperimentConfig config;
  std::set<std::string> seen;
  std::size_t ln = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++ln;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(ln) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'section.key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    auto it = index.find(key);
    if (it == index.end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "repeated key '" + key + "'");
    try {
      it->second->set(config, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config(s.str());
}

std::string canonical_config(const ExperimentConfig& config) {
  std::vector<std::string> lines;
  for (const Entry& e : entries())
    if (e.hashed) lines.push_back(e.key + " = " + e.get(config));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + '\n';
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_config(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Entry& e : entries()) out.push_back(e.key);
  return out;
}

}  // namespace gunl::bench
