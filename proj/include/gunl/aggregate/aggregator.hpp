#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gunl/graph/graph.hpp"
#include "gunl/numerics/param_store.hpp"
#include "gunl/numerics/rng.hpp"
#include "gunl/numerics/tape.hpp"
#include "gunl/shard/shard_model.hpp"

namespace gunl {

struct AggTrainConfig {
  /// Size of the training sample U. 0 picks min(1000, |train|), or 10% of the
  /// training nodes above 10000 of them.
  std::size_t sample_size = 0;
  double tau = 0.5;
  double lambda_contra = 1e-4;
  double lambda_recon = 1e-4;
  /// L2 coefficient; the loss carries gamma/2 * ||Theta||^2.
  double gamma = 1e-5;
  double lr = 1e-2;
  std::size_t epochs = 20;
  double mask_rate = 0.5;
  /// Positive over the sum, as printed; the default puts the positive on top.
  bool paper_literal_infonce = false;
  /// Margin on pos - neg instead of neg - pos.
  bool paper_literal_triplet = false;
  /// Ablation: fixes the attention to uniform weights.
  bool uniform_attention = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Throws ContractError when an explicit size exceeds `n_train`.
std::size_t resolve_sample_size(const AggTrainConfig& config, std::size_t n_train);

/// Parameters per shard i: "proj_w/i" (d x d), "proj_b/i" (1 x d); shared
/// "attn" (d x 1), "head_w" (d x C), "head_b" (1 x C).
struct Aggregator {
  std::size_t n_shards = 0;
  std::size_t dim = 0;
  std::size_t n_classes = 0;
  double tau = 0.5;
  bool paper_literal_infonce = false;
  bool paper_literal_triplet = false;
  bool uniform_attention = false;
  ParamStore params;
};

Aggregator init_aggregator(std::size_t n_shards, std::size_t dim, std::size_t n_classes,
                           const AggTrainConfig& config);

/// Null (untrained) shards are nullopt.
using EncoderSet = std::vector<std::optional<ShardEncoder>>;

/// Embeddings of one node batch against every live shard.
struct BatchEmbeddings {
  std::vector<std::size_t> shard_ids;  ///< live shards, ascending
  std::vector<Dense> per_shard;        ///< batch x d, parallel to shard_ids

  std::size_t batch_size() const { return per_shard.empty() ? 0 : per_shard.front().rows(); }
  std::size_t live() const { return shard_ids.size(); }
};

/// Embeds `nodes` with every live encoder, up to `jobs` shards at a time.
BatchEmbeddings embed_batch(const EncoderSet& encoders, const Graph& graph,
                            std::span<const NodeId> nodes, std::size_t jobs = 1);

struct FusedBatch {
  Var alpha;                    ///< batch x L attention over live shards
  Var fused;                    ///< (1/L) sum_i alpha_i e_i
  std::vector<Var> embeddings;  ///< constants, one per live shard
};

/// Throws ContractError when no shard is live.
FusedBatch attentive_fuse(Tape& tape, const BatchEmbeddings& batch, const Aggregator& agg);

/// One 0/1 row per node, entries kept with probability 1 - rate, redrawn
/// until at least one survives.
Dense sample_masks(std::size_t batch, std::size_t live, double mask_rate, Rng& rng);

/// (L / |m|_1) sum_i m_i alpha_i e_i per row.
Var local_view(const FusedBatch& fused, const Dense& masks);

/// One uniformly drawn partner v != u per anchor. Needs batch >= 2.
std::vector<std::size_t> sample_negatives(std::size_t batch, Rng& rng);

/// InfoNCE with the local view as positive and v's two views as negatives.
Var loss_contra(Var fused, Var local, std::span<const std::size_t> negatives, double tau,
                bool paper_literal = false);

struct ReconTriple {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;
};

/// Positions within a batch usable by the reconstruction loss.
struct ReconCandidates {
  std::vector<std::vector<std::size_t>> cross_neighbors;  ///< neighbours in another shard
  std::vector<std::vector<std::size_t>> neighbors;        ///< all in-batch neighbours, sorted
};

ReconCandidates recon_candidates(const Graph& graph, const Partition& partition,
                                 std::span<const NodeId> batch);

/// One triple per anchor with a cross-shard neighbour and a non-neighbour.
std::vector<ReconTriple> sample_triples(const ReconCandidates& candidates, Rng& rng);

/// Mean triplet margin over `triples`; 0 when there are none.
Var loss_recon(Var fused, std::span<const ReconTriple> triples, bool paper_literal = false);

Var head_logits(Var fused, const Aggregator& agg);
Var loss_cls(Var fused, const Aggregator& agg, std::span<const int> labels);

/// Random choices of one epoch.
struct EpochDraw {
  Dense masks;
  std::vector<std::size_t> negatives;
  std::vector<ReconTriple> triples;
};

EpochDraw draw_epoch(const BatchEmbeddings& batch, const ReconCandidates& candidates,
                     double mask_rate, Rng& rng);

/// cls + lambda_c contra + lambda_r recon + gamma/2 ||Theta||^2
Var loss_aggr(Tape& tape, const BatchEmbeddings& batch, std::span<const int> labels,
              const EpochDraw& draw, const Aggregator& agg, const AggTrainConfig& config);

struct AggregatorTrainResult {
  Aggregator aggregator;
  std::vector<NodeId> sample;      ///< U, sorted
  std::vector<double> loss_trace;  ///< loss before each update
};

/// Samples U from the training split of `graph`, embeds it with the frozen
/// encoders and fits the aggregator parameters. Throws ContractError without a
/// live encoder or when the sample would exceed the training split.
AggregatorTrainResult train_aggregator(const EncoderSet& encoders, const Graph& graph,
                                       const Partition& partition, const AggTrainConfig& config,
                                       std::size_t jobs = 1);

struct Prediction {
  std::vector<int> labels;
  Dense probabilities;
};

/// Fuses without masking and returns the head's argmax and softmax.
Prediction predict(const EncoderSet& encoders, const Aggregator& agg, const Graph& graph,
                   std::span<const NodeId> queries, std::size_t jobs = 1);
Prediction predict(const BatchEmbeddings& batch, const Aggregator& agg);

/// Checkpoint with S, tau and the flag states in its metadata.
void save_aggregator(const std::filesystem::path& stem, const Aggregator& agg);
/// Throws LoadError when the stored S differs from `expected_shards`.
Aggregator load_aggregator(const std::filesystem::path& stem, std::size_t expected_shards);

}  // namespace gunl
