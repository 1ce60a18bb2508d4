#pragma once

#include <cstddef>

#include "gunl/numerics/dense.hpp"
#include "gunl/numerics/param_store.hpp"
#include "gunl/numerics/rng.hpp"
#include "gunl/numerics/sparse.hpp"
#include "gunl/numerics/tape.hpp"

namespace gunl {

/// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
struct NormalizedAdjacency {
  Sparse matrix;
};

/// Expects a symmetric adjacency without self-loops; isolated nodes keep weight 1.
NormalizedAdjacency normalize_adjacency(const Sparse& adjacency);

struct GcnShape {
  std::size_t features = 0;
  std::size_t hidden = 64;
  std::size_t embedding = 64;
  std::size_t classes = 0;
};

/// Parameters "w1" (F x h), "w2" (h x d), "head" (d x C) and "bias" (1 x C),
/// Glorot-uniform weights and a zero bias.
ParamStore init_gcn(const GcnShape& shape, Rng& rng);

struct GcnOutput {
  Dense embeddings;  ///< A relu(A X W1) W2
  Dense logits;      ///< embeddings * head + bias
};

GcnOutput gcn_forward(const NormalizedAdjacency& a_hat, const Dense& x, const ParamStore& params);

struct GcnVars {
  Var embeddings;
  Var logits;
};

/// Taped version. `a_hat` and `x` must outlive the tape.
GcnVars gcn_forward(Tape& tape, const NormalizedAdjacency& a_hat, const Dense& x,
                    const ParamStore& params);

/// A relu(A X W1) W2 on a tape; shared with the partition network.
Var two_layer_propagate(Tape& tape, const NormalizedAdjacency& a_hat, const Dense& x, Var w1, Var w2);

}  // namespace gunl
