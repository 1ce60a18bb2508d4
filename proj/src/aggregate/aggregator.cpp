#include "gunl/aggregate/aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gunl/errors.hpp"
#include "gunl/numerics/checkpoint.hpp"
#include "gunl/numerics/nn.hpp"
#include "gunl/numerics/parallel.hpp"

namespace gunl {

namespace {

std::string proj_w(std::size_t i) { return "proj_w/" + std::to_string(i); }
std::string proj_b(std::size_t i) { return "proj_b/" + std::to_string(i); }

}  // namespace

void AggTrainConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("aggregator: tau must be positive");
  if (!(mask_rate > 0.0 && mask_rate < 1.0)) throw ConfigError("aggregator: mask_rate must lie in (0,1)");
  if (!(lr > 0.0)) throw ConfigError("aggregator: lr must be positive");
  if (lambda_contra < 0 || lambda_recon < 0 || gamma < 0) throw ConfigError("aggregator: weights must be >= 0");
}

std::size_t resolve_sample_size(const AggTrainConfig& config, std::size_t n_train) {
  if (config.sample_size == 0) return n_train > 10000 ? n_train / 10 : std::min<std::size_t>(1000, n_train);
  if (config.sample_size > n_train) {
    throw ContractError("aggregator sample of " + std::to_string(config.sample_size) +
                        " exceeds the " + std::to_string(n_train) + " training nodes");
  }
  return config.sample_size;
}

Aggregator init_aggregator(std::size_t n_shards, std::size_t dim, std::size_t n_classes,
                           const AggTrainConfig& config) {
  Aggregator agg{n_shards, dim, n_classes, config.tau, config.paper_literal_infonce,
                 config.paper_literal_triplet, config.uniform_attention, {}};
  Rng rng(derive_seed({config.seed, 0xa66ULL}));
  for (std::size_t i = 0; i < n_shards; ++i) {
    agg.params.add(proj_w(i), nn::glorot_uniform(dim, dim, rng));
    agg.params.add(proj_b(i), Dense(1, dim));
  }
  agg.params.add("attn", nn::glorot_uniform(dim, 1, rng));
  agg.params.add("head_w", nn::glorot_uniform(dim, n_classes, rng));
  agg.params.add("head_b", Dense(1, n_classes));
  return agg;
}

BatchEmbeddings embed_batch(const EncoderSet& encoders, const Graph& graph,
                            std::span<const NodeId> nodes, std::size_t jobs) {
  BatchEmbeddings out;
  for (std::size_t i = 0; i < encoders.size(); ++i)
    if (encoders[i]) out.shard_ids.push_back(i);
  out.per_shard.resize(out.shard_ids.size());
  parallel_for(out.shard_ids.size(), jobs, [&](std::size_t k) {
    out.per_shard[k] = encoders[out.shard_ids[k]]->embed(graph, nodes);
  });
  return out;
}

FusedBatch attentive_fuse(Tape& tape, const BatchEmbeddings& batch, const Aggregator& agg) {
  const std::size_t live = batch.live();
  if (live == 0) throw ContractError("attentive_fuse: no live shard");
  const std::size_t m = batch.batch_size();
  FusedBatch out;
  std::vector<Var> scores;
  for (std::size_t k = 0; k < live; ++k) {
    const std::size_t sid = batch.shard_ids[k];
    if (sid >= agg.n_shards) throw ContractError("attentive_fuse: shard id beyond aggregator");
    Var e = tape.constant_ref(batch.per_shard[k]);
    out.embeddings.push_back(e);
    if (agg.uniform_attention) continue;
    Var proj = ad::add(ad::matmul(e, tape.param(agg.params, proj_w(sid))),
                       ad::broadcast_rows(tape.param(agg.params, proj_b(sid)), m));
    scores.push_back(ad::matmul(ad::relu(proj), tape.param(agg.params, "attn")));
  }
  out.alpha = agg.uniform_attention ? tape.constant(Dense(m, live, 1.0 / static_cast<double>(live)))
                                    : ad::row_softmax(ad::concat_cols(scores));
  Var sum;
  for (std::size_t k = 0; k < live; ++k) {
    Var w = ad::broadcast_cols(ad::slice_cols(out.alpha, k, k + 1), agg.dim);
    Var term = ad::mul(w, out.embeddings[k]);
    sum = k == 0 ? term : ad::add(sum, term);
  }
  out.fused = ad::scale(sum, 1.0 / static_cast<double>(live));
  return out;
}

Dense sample_masks(std::size_t batch, std::size_t live, double mask_rate, Rng& rng) {
  Dense m(batch, live);
  for (std::size_t r = 0; r < batch; ++r) {
    auto row = m.row(r);
    double kept = 0;
    while (kept == 0) {
      kept = 0;
      for (double& v : row) kept += (v = rng.bernoulli(1.0 - mask_rate) ? 1.0 : 0.0);
    }
  }
  return m;
}

Var local_view(const FusedBatch& fused, const Dense& masks) {
  Tape& tape = *fused.alpha.tape;
  const std::size_t live = fused.embeddings.size();
  if (masks.rows() != fused.alpha.rows() || masks.cols() != live) throw ShapeError("local_view: mask shape");
  Dense coeff(masks.rows(), live);
  for (std::size_t r = 0; r < masks.rows(); ++r) {
    double kept = 0;
    for (double v : masks.row(r)) kept += v;
    if (kept < 1) throw ContractError("local_view: mask row keeps no shard");
    for (std::size_t k = 0; k < live; ++k) coeff(r, k) = static_cast<double>(live) * masks(r, k) / kept;
  }
  Var weights = ad::mul(fused.alpha, tape.constant(std::move(coeff)));
  const std::size_t d = fused.embeddings.front().cols();
  Var sum;
  for (std::size_t k = 0; k < live; ++k) {
    Var term = ad::mul(ad::broadcast_cols(ad::slice_cols(weights, k, k + 1), d), fused.embeddings[k]);
    sum = k == 0 ? term : ad::add(sum, term);
  }
  return sum;
}

std::vector<std::size_t> sample_negatives(std::size_t batch, Rng& rng) {
  if (batch < 2) throw ContractError("contrastive loss needs a batch of at least 2 nodes");
  std::vector<std::size_t> out(batch);
  for (std::size_t u = 0; u < batch; ++u) {
    std::size_t v = rng.below(batch - 1);
    out[u] = v >= u ? v + 1 : v;
  }
  return out;
}

Var loss_contra(Var fused, Var local, std::span<const std::size_t> negatives, double tau,
                bool paper_literal) {
  if (fused.rows() < 2) throw ContractError("loss_contra: batch of 1");
  if (negatives.size() != fused.rows()) throw ShapeError("loss_contra: one negative per anchor");
  Var pos = nn::cosine_rows(fused, local);
  Var neg_global = nn::cosine_rows(fused, ad::gather_rows(fused, negatives));
  Var neg_local = nn::cosine_rows(fused, ad::gather_rows(local, negatives));
  const std::vector<Var> parts{pos, neg_global, neg_local};
  Var logp = ad::log(ad::row_softmax(ad::scale(ad::concat_cols(parts), 1.0 / tau)));
  Var mean_pos = ad::mean(ad::slice_cols(logp, 0, 1));
  return paper_literal ? mean_pos : ad::neg(mean_pos);
}

ReconCandidates recon_candidates(const Graph& graph, const Partition& partition,
                                 std::span<const NodeId> batch) {
  std::vector<std::size_t> position(graph.n_nodes(), static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < batch.size(); ++i) position[batch[i]] = i;
  ReconCandidates out;
  out.cross_neighbors.resize(batch.size());
  out.neighbors.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const NodeId u = batch[i];
    for (NodeId v : graph.neighbors(u)) {
      const std::size_t j = position[v];
      if (j == static_cast<std::size_t>(-1)) continue;
      out.neighbors[i].push_back(j);
      if (partition.assignment[v] != partition.assignment[u]) out.cross_neighbors[i].push_back(j);
    }
    std::sort(out.neighbors[i].begin(), out.neighbors[i].end());
  }
  return out;
}

std::vector<ReconTriple> sample_triples(const ReconCandidates& candidates, Rng& rng) {
  const std::size_t m = candidates.neighbors.size();
  std::vector<ReconTriple> out;
  for (std::size_t u = 0; u < m; ++u) {
    const auto& cross = candidates.cross_neighbors[u];
    const auto& nbrs = candidates.neighbors[u];
    if (cross.empty() || nbrs.size() + 1 >= m) continue;
    const std::size_t pos = cross[rng.below(cross.size())];
    std::size_t neg;
    do {
      neg = rng.below(m);
    } while (neg == u || std::binary_search(nbrs.begin(), nbrs.end(), neg));
    out.push_back({u, pos, neg});
  }
  return out;
}

Var loss_recon(Var fused, std::span<const ReconTriple> triples, bool paper_literal) {
  Tape& tape = *fused.tape;
  if (triples.empty()) return tape.constant(Dense::scalar(0.0));
  std::vector<std::size_t> a, p, n;
  for (const auto& t : triples) {
    a.push_back(t.anchor);
    p.push_back(t.positive);
    n.push_back(t.negative);
  }
  Var anchors = ad::gather_rows(fused, a);
  Var sim_pos = nn::cosine_rows(anchors, ad::gather_rows(fused, p));
  Var sim_neg = nn::cosine_rows(anchors, ad::gather_rows(fused, n));
  Var gap = paper_literal ? ad::sub(sim_pos, sim_neg) : ad::sub(sim_neg, sim_pos);
  return ad::mean(ad::relu(ad::add_scalar(gap, 1.0)));
}

Var head_logits(Var fused, const Aggregator& agg) {
  Tape& tape = *fused.tape;
  return ad::add(ad::matmul(fused, tape.param(agg.params, "head_w")),
                 ad::broadcast_rows(tape.param(agg.params, "head_b"), fused.rows()));
}

Var loss_cls(Var fused, const Aggregator& agg, std::span<const int> labels) {
  return nn::cross_entropy(head_logits(fused, agg), labels);
}

EpochDraw draw_epoch(const BatchEmbeddings& batch, const ReconCandidates& candidates,
                     double mask_rate, Rng& rng) {
  EpochDraw d;
  d.masks = sample_masks(batch.batch_size(), batch.live(), mask_rate, rng);
  d.negatives = sample_negatives(batch.batch_size(), rng);
  d.triples = sample_triples(candidates, rng);
  return d;
}

Var loss_aggr(Tape& tape, const BatchEmbeddings& batch, std::span<const int> labels,
              const EpochDraw& draw, const Aggregator& agg, const AggTrainConfig& config) {
  FusedBatch fb = attentive_fuse(tape, batch, agg);
  Var loss = loss_cls(fb.fused, agg, labels);
  if (config.lambda_contra != 0.0) {
    Var contra = loss_contra(fb.fused, local_view(fb, draw.masks), draw.negatives, agg.tau,
                             agg.paper_literal_infonce);
    loss = ad::add(loss, ad::scale(contra, config.lambda_contra));
  }
  if (config.lambda_recon != 0.0) {
    Var recon = loss_recon(fb.fused, draw.triples, agg.paper_literal_triplet);
    loss = ad::add(loss, ad::scale(recon, config.lambda_recon));
  }
  if (config.gamma != 0.0) {
    for (const auto& name : agg.params.names()) {
      Var w = tape.param(agg.params, name);
      loss = ad::add(loss, ad::scale(ad::sum(ad::mul(w, w)), config.gamma / 2.0));
    }
  }
  return loss;
}

AggregatorTrainResult train_aggregator(const EncoderSet& encoders, const Graph& graph,
                                       const Partition& partition, const AggTrainConfig& config,
                                       std::size_t jobs) {
  config.validate();
  if (encoders.size() != partition.n_shards) throw ContractError("train_aggregator: one encoder slot per shard");
  std::size_t dim = 0;
  for (const auto& e : encoders)
    if (e) dim = e->embedding_dim();
  if (dim == 0) throw ContractError("train_aggregator: no live shard model");

  const auto& train = graph.splits().train;
  const std::size_t m = resolve_sample_size(config, train.size());
  Rng rng(derive_seed({config.seed, 0xa6f1ULL}));
  std::vector<NodeId> pool = train;
  rng.shuffle(pool);
  AggregatorTrainResult out;
  out.sample.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(out.sample.begin(), out.sample.end());

  const BatchEmbeddings batch = embed_batch(encoders, graph, out.sample, jobs);
  std::vector<int> labels;
  labels.reserve(m);
  for (NodeId u : out.sample) labels.push_back(graph.labels()[u]);
  const ReconCandidates candidates = recon_candidates(graph, partition, out.sample);

  out.aggregator = init_aggregator(partition.n_shards, dim, graph.n_classes(), config);
  const AdamWOptions opts{.lr = config.lr, .weight_decay = 0.0};
  const bool contrast = config.lambda_contra != 0.0 && m >= 2;
  AggTrainConfig effective = config;
  if (!contrast) effective.lambda_contra = 0.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochDraw draw;
    if (contrast) {
      draw = draw_epoch(batch, candidates, config.mask_rate, rng);
    } else {
      draw.triples = sample_triples(candidates, rng);
    }
    Tape tape;
    Var loss = loss_aggr(tape, batch, labels, draw, out.aggregator, effective);
    const double value = loss.value().item();
    if (!std::isfinite(value)) throw TrainingError("aggregator: non-finite loss", epoch);
    out.loss_trace.push_back(value);
    adamw_step(out.aggregator.params, gradients(loss, out.aggregator.params), opts);
  }
  return out;
}

Prediction predict(const BatchEmbeddings& batch, const Aggregator& agg) {
  Tape tape;
  FusedBatch fb = attentive_fuse(tape, batch, agg);
  Prediction p;
  p.probabilities = nn::softmax_rows(head_logits(fb.fused, agg).value());
  for (std::size_t c : nn::argmax_rows(p.probabilities)) p.labels.push_back(static_cast<int>(c));
  return p;
}

Prediction predict(const EncoderSet& encoders, const Aggregator& agg, const Graph& graph,
                   std::span<const NodeId> queries, std::size_t jobs) {
  if (queries.empty()) return {};
  return predict(embed_batch(encoders, graph, queries, jobs), agg);
}

void save_aggregator(const std::filesystem::path& stem, const Aggregator& agg) {
  std::ostringstream tau;
  tau.precision(17);
  tau << agg.tau;
  save_checkpoint(stem, agg.params,
                  {{"shards", std::to_string(agg.n_shards)},
                   {"dim", std::to_string(agg.dim)},
                   {"classes", std::to_string(agg.n_classes)},
                   {"tau", tau.str()},
                   {"paper_literal_infonce", agg.paper_literal_infonce ? "1" : "0"},
                   {"paper_literal_triplet", agg.paper_literal_triplet ? "1" : "0"},
                   {"uniform_attention", agg.uniform_attention ? "1" : "0"}});
}

Aggregator load_aggregator(const std::filesystem::path& stem, std::size_t expected_shards) {
  Checkpoint ck = load_checkpoint(stem);
  auto get = [&](const char* key) {
    auto it = ck.meta.find(key);
    if (it == ck.meta.end()) throw LoadError(stem.string() + ": missing '" + key + "' in manifest");
    return it->second;
  };
  Aggregator agg;
  try {
    agg.n_shards = std::stoull(get("shards"));
    agg.dim = std::stoull(get("dim"));
    agg.n_classes = std::stoull(get("classes"));
    agg.tau = std::stod(get("tau"));
  } catch (const std::invalid_argument&) {
    throw LoadError(stem.string() + ": malformed aggregator metadata");
  }
  agg.paper_literal_infonce = get("paper_literal_infonce") == "1";
  agg.paper_literal_triplet = get("paper_literal_triplet") == "1";
  agg.uniform_attention = get("uniform_attention") == "1";
  if (agg.n_shards != expected_shards) {
    throw LoadError(stem.string() + ": aggregator built for " + std::to_string(agg.n_shards) +
                    " shards, pipeline has " + std::to_string(expected_shards));
  }
  agg.params = std::move(ck.params);
  return agg;
}

}  // namespace gunl
