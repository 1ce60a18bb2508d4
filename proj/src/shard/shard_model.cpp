#include "gunl/shard/shard_model.hpp"

#include <algorithm>
#include <cmath>

#include "gunl/errors.hpp"
#include "gunl/numerics/nn.hpp"

namespace gunl {

void TrainConfig::validate() const {
  if (!(lr > 0.0) || weight_decay < 0.0 || hidden == 0 || embedding == 0) {
    throw ConfigError("train config: lr must be positive, weight_decay non-negative, sizes >= 1");
  }
}

std::uint64_t shard_seed(std::uint64_t global_seed, std::size_t shard_id, std::uint64_t retrain_counter) {
  return derive_seed({global_seed, 0x5ba7dULL, shard_id, retrain_counter});
}

namespace {

std::vector<int> train_labels(const Shard& shard) {
  std::vector<int> out;
  out.reserve(shard.train_local.size());
  for (std::size_t i : shard.train_local) out.push_back(shard.labels[i]);
  return out;
}

}  // namespace

ShardModel train_submodel(const Shard& shard, std::size_t n_classes, const TrainConfig& config,
                          std::uint64_t retrain_counter) {
  config.validate();
  ShardModel model;
  model.shard_id = shard.shard_id;
  model.retrain_counter = retrain_counter;
  model.train_seed = shard_seed(config.seed, shard.shard_id, retrain_counter);
  if (shard.train_local.empty()) {
    model.untrained = true;
    return model;
  }

  Rng rng(model.train_seed);
  model.params = init_gcn({shard.features.cols(), config.hidden, config.embedding, n_classes}, rng);
  const NormalizedAdjacency a_hat = normalize_adjacency(shard.adjacency);
  const std::vector<int> labels = train_labels(shard);
  const AdamWOptions opts{.lr = config.lr, .weight_decay = config.weight_decay};

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Tape tape;
    GcnVars out = gcn_forward(tape, a_hat, shard.features, model.params);
    Var loss = nn::cross_entropy(ad::gather_rows(out.logits, shard.train_local), labels);
    if (!std::isfinite(loss.value().item())) {
      throw TrainingError("shard " + std::to_string(shard.shard_id) + ": non-finite loss", epoch);
    }
    adamw_step(model.params, gradients(loss, model.params), opts);
  }
  model.epochs_run = config.epochs;
  model.final_train_loss = train_loss(model, shard);
  return model;
}

double train_loss(const ShardModel& model, const Shard& shard) {
  if (model.untrained || shard.train_local.empty()) return 0.0;
  const GcnOutput out = gcn_forward(normalize_adjacency(shard.adjacency), shard.features, model.params);
  double total = 0.0;
  const Dense p = nn::softmax_rows(out.logits);
  for (std::size_t i : shard.train_local) {
    total -= std::log(std::max(p(i, static_cast<std::size_t>(shard.labels[i])), 1e-12));
  }
  return total / static_cast<double>(shard.train_local.size());
}

ShardEncoder::ShardEncoder(const Shard& shard, const ShardModel& model)
    : shard_id_(shard.shard_id), node_ids_(shard.node_ids), adjacency_(shard.adjacency) {
  if (model.untrained) throw ContractError("ShardEncoder: shard " + std::to_string(shard.shard_id) + " is untrained");
  w1_ = model.params.value("w1");
  w2_ = model.params.value("w2");
  const auto deg = adjacency_.row_sums();
  self_degree_.resize(deg.size());
  for (std::size_t i = 0; i < deg.size(); ++i) self_degree_[i] = deg[i] + 1.0;
  xw_ = dense::matmul(shard.features, w1_);
  embeddings_ = gcn_forward(normalize_adjacency(adjacency_), shard.features, model.params).embeddings;
}

Dense ShardEncoder::embed(const Graph& graph, std::span<const NodeId> queries) const {
  const std::size_t h = w1_.cols();
  const std::size_t d = w2_.cols();
  Dense out(queries.size(), d);
  if (graph.n_features() != w1_.rows()) throw ShapeError("embed: feature width does not match the shard model");

  std::vector<char> linked(node_ids_.size(), 0);
  std::vector<std::size_t> nbrs;
  std::vector<double> hidden(h), z(d), xu(h);

  for (std::size_t q = 0; q < queries.size(); ++q) {
    const NodeId u = queries[q];
    if (u >= graph.n_nodes()) throw ContractError("embed: query id out of range");
    auto it = std::lower_bound(node_ids_.begin(), node_ids_.end(), u);
    if (it != node_ids_.end() && *it == u) {
      auto src = embeddings_.row(static_cast<std::size_t>(it - node_ids_.begin()));
      std::copy(src.begin(), src.end(), out.row(q).begin());
      continue;
    }

    nbrs.clear();
    for (NodeId v : graph.neighbors(u)) {
      auto jt = std::lower_bound(node_ids_.begin(), node_ids_.end(), v);
      if (jt != node_ids_.end() && *jt == v) nbrs.push_back(static_cast<std::size_t>(jt - node_ids_.begin()));
    }
    for (std::size_t v : nbrs) linked[v] = 1;
    const double du = static_cast<double>(nbrs.size()) + 1.0;
    auto deg_of = [&](std::size_t w) { return self_degree_[w] + (linked[w] ? 1.0 : 0.0); };

    std::fill(xu.begin(), xu.end(), 0.0);
    const auto xrow = graph.features().row(u);
    for (std::size_t f = 0; f < xrow.size(); ++f) {
      if (xrow[f] == 0.0) continue;
      const auto wrow = w1_.row(f);
      for (std::size_t k = 0; k < h; ++k) xu[k] += xrow[f] * wrow[k];
    }

    auto out_row = out.row(q);
    // Second layer at u sums over u itself and its shard neighbours.
    auto accumulate = [&](double coeff) {
      std::fill(z.begin(), z.end(), 0.0);
      for (std::size_t k = 0; k < h; ++k) {
        const double hv = std::max(hidden[k], 0.0);
        if (hv == 0.0) continue;
        const auto wrow = w2_.row(k);
        for (std::size_t j = 0; j < d; ++j) z[j] += hv * wrow[j];
      }
      for (std::size_t j = 0; j < d; ++j) out_row[j] += coeff * z[j];
    };

    // u's own first-layer value.
    for (std::size_t k = 0; k < h; ++k) hidden[k] = xu[k] / du;
    for (std::size_t v : nbrs) {
      const double c = 1.0 / std::sqrt(du * deg_of(v));
      const auto xv = xw_.row(v);
      for (std::size_t k = 0; k < h; ++k) hidden[k] += c * xv[k];
    }
    accumulate(1.0 / du);

    for (std::size_t v : nbrs) {
      const double dv = deg_of(v);
      for (std::size_t k = 0; k < h; ++k) hidden[k] = xw_(v, k) / dv + xu[k] / std::sqrt(dv * du);
      auto cols = adjacency_.row_cols(v);
      for (std::size_t w : cols) {
        const double c = 1.0 / std::sqrt(dv * deg_of(w));
        const auto xw = xw_.row(w);
        for (std::size_t k = 0; k < h; ++k) hidden[k] += c * xw[k];
      }
      accumulate(1.0 / std::sqrt(du * dv));
    }
    for (std::size_t v : nbrs) linked[v] = 0;
  }
  return out;
}

}  // namespace gunl
