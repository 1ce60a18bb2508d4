#include "gunl/partition/partitioner.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "gunl/errors.hpp"
#include "gunl/numerics/nn.hpp"
#include "gunl/numerics/rng.hpp"
#include "gunl/shard/gcn.hpp"

namespace gunl {

AssignmentMatrix::AssignmentMatrix(Dense p) : p_(std::move(p)) {
  for (std::size_t r = 0; r < p_.rows(); ++r) {
    double s = 0.0;
    for (double v : p_.row(r)) {
      if (!(v >= 0.0 && v <= 1.0)) throw ContractError("assignment entry outside [0,1] in row " + std::to_string(r));
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ContractError("assignment row " + std::to_string(r) + " is not stochastic");
  }
}

void PartitionConfig::validate() const {
  if (n_shards == 0) throw ConfigError("partition: n_shards must be >= 1");
  if (hidden == 0) throw ConfigError("partition: hidden must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("partition: lr must be positive");
  if (sem_sign != 1 && sem_sign != -1) throw ConfigError("partition: sem_sign must be +1 or -1");
  if (lambda_time < 0 || lambda_sem < 0 || gamma < 0) throw ConfigError("partition: weights must be >= 0");
}

ParamStore init_partitioner(std::size_t n_features, const PartitionConfig& config) {
  config.validate();
  Rng rng(derive_seed({config.seed, 0x9a47ULL}));
  ParamStore ps;
  ps.add("w1", nn::glorot_uniform(n_features, config.hidden, rng));
  ps.add("w2", nn::glorot_uniform(config.hidden, config.hidden, rng));
  ps.add("w_out", nn::glorot_uniform(config.hidden, config.n_shards, rng));
  return ps;
}

namespace {

// The normalized adjacency must outlive any tape that references it, so
// training keeps one per graph and the free-standing forward builds its own.
Var psi_forward_with(Tape& tape, const NormalizedAdjacency& a_hat, const Graph& graph,
                     const ParamStore& params) {
  if (params.value("w1").rows() != graph.n_features()) {
    throw ContractError("psi_forward: feature width " + std::to_string(graph.n_features()) +
                        " does not match w1");
  }
  Var e = two_layer_propagate(tape, a_hat, graph.features(), tape.param(params, "w1"),
                              tape.param(params, "w2"));
  return ad::row_softmax(ad::matmul(e, tape.param(params, "w_out")));
}

Dense degree_column(const Graph& graph) {
  const auto deg = graph.degrees();
  return Dense(deg.size(), 1, deg);
}

}  // namespace

Var psi_forward(Tape& tape, const Graph& graph, const ParamStore& params) {
  // Owned by the tape through a constant so the Sparse outlives the record.
  auto a_hat = std::make_shared<NormalizedAdjacency>(normalize_adjacency(graph.adjacency()));
  Var out = psi_forward_with(tape, *a_hat, graph, params);
  tape.keep_alive(std::move(a_hat));
  return out;
}

AssignmentMatrix psi_forward(const Graph& graph, const ParamStore& params) {
  Tape tape;
  return AssignmentMatrix(psi_forward(tape, graph, params).value());
}

Var loss_time(Var P, const Graph& graph) {
  Var ap = ad::spmm(graph.adjacency(), P);
  Var edges = ad::col_sums(ad::mul(P, ap));
  Var nodes = ad::col_sums(P);
  return ad::scale(ad::sum(ad::mul(nodes, edges)), 1.0 / static_cast<double>(graph.n_nodes()));
}

Var loss_struct(Var P, const Graph& graph) {
  Tape& t = *P.tape;
  Var deg = ad::broadcast_cols(t.constant(degree_column(graph)), P.cols());
  Var volume = ad::col_sums(ad::mul(P, deg));
  // cut_i = sum_jk P_ji A_jk (1 - P_ki) = vol_i - internal_i
  Var internal = ad::col_sums(ad::mul(P, ad::spmm(graph.adjacency(), P)));
  Var cut = ad::sub(volume, internal);
  return ad::sum(ad::div(cut, ad::clamp_min(volume, 1e-12)));
}

Var loss_sem(Var P, const Graph& graph) {
  Tape& t = *P.tape;
  const std::size_t s = P.cols();
  Dense y(graph.n_nodes(), graph.n_classes());
  for (std::size_t j = 0; j < graph.n_nodes(); ++j) y(j, static_cast<std::size_t>(graph.labels()[j])) = 1.0;
  Var counts = ad::matmul(ad::transpose(P), t.constant(std::move(y)));  // S x C
  Var nodes = ad::transpose(ad::col_sums(P));                             // S x 1
  Var p = ad::div(counts, ad::broadcast_cols(ad::clamp_min(nodes, 1e-12), graph.n_classes()));
  Var entropy = ad::neg(ad::sum(ad::mul(p, ad::log(p))));
  return ad::scale(entropy, 1.0 / static_cast<double>(s));
}

Var loss_part(Var P, const Graph& graph, const PartitionConfig& config, const ParamStore& params) {
  Tape& t = *P.tape;
  Var loss = loss_struct(P, graph);
  if (config.lambda_time != 0.0) loss = ad::add(loss, ad::scale(loss_time(P, graph), config.lambda_time));
  if (config.lambda_sem != 0.0) {
    loss = ad::add(loss, ad::scale(loss_sem(P, graph), config.sem_sign * config.lambda_sem));
  }
  if (config.gamma != 0.0) {
    for (const auto& name : params.names()) {
      Var w = t.param(params, name);
      loss = ad::add(loss, ad::scale(ad::sum(ad::mul(w, w)), config.gamma / 2.0));
    }
  }
  return loss;
}

PartitionLosses evaluate_losses(const AssignmentMatrix& P, const Graph& graph) {
  Tape t;
  Var p = t.constant_ref(P.matrix());
  return {loss_time(p, graph).value().item(), loss_struct(p, graph).value().item(),
          loss_sem(p, graph).value().item()};
}

PartitionerResult train_partitioner(const Graph& graph, const PartitionConfig& config) {
  PartitionerResult out{init_partitioner(graph.n_features(), config), {}};
  const NormalizedAdjacency a_hat = normalize_adjacency(graph.adjacency());
  const AdamWOptions opts{.lr = config.lr, .weight_decay = 0.0};
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Tape tape;
    Var P = psi_forward_with(tape, a_hat, graph, out.params);
    Var loss = loss_part(P, graph, config, out.params);
    const double value = loss.value().item();
    if (!std::isfinite(value)) throw TrainingError("partitioner: non-finite loss", epoch);
    out.loss_trace.push_back(value);
    adamw_step(out.params, gradients(loss, out.params), opts);
  }
  return out;
}

Partition infer_partition(const AssignmentMatrix& P) {
  return Partition{P.n_shards(), nn::argmax_rows(P.matrix())};
}

Partition random_partition(std::size_t n, std::size_t s, std::uint64_t seed) {
  if (s == 0) throw ContractError("random_partition: need at least one shard");
  Rng rng(derive_seed({seed, 0x4a2dULL}));
  Partition p{s, std::vector<std::size_t>(n)};
  for (auto& a : p.assignment) a = rng.below(s);
  return p;
}

void save_partition(const std::filesystem::path& path, const Partition& partition) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path.string());
  out << "#shards=" << partition.n_shards << '\n';
  for (std::size_t a : partition.assignment) out << a << '\n';
  if (!out) throw LoadError("short write on " + path.string());
}

Partition load_partition(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("missing partition file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("#shards=", 0) != 0) {
    throw ParseError(path.filename().string() + ": expected '#shards=S' header", 1);
  }
  Partition p;
  try {
    p.n_shards = std::stoull(line.substr(8));
  } catch (const std::exception&) {
    throw ParseError(path.filename().string() + ": bad shard count", 1);
  }
  std::size_t ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    std::size_t pos = 0;
    std::size_t v = 0;
    try {
      v = std::stoull(line, &pos);
    } catch (const std::exception&) {
      throw ParseError(path.filename().string() + ": bad shard id", ln);
    }
    if (pos != line.size()) throw ParseError(path.filename().string() + ": bad shard id", ln);
    p.assignment.push_back(v);
  }
  p.validate();
  return p;
}

}  // namespace gunl
