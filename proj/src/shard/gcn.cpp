#include "gunl/shard/gcn.hpp"

#include <cmath>
#include <vector>

#include "gunl/errors.hpp"
#include "gunl/numerics/nn.hpp"

namespace gunl {

NormalizedAdjacency normalize_adjacency(const Sparse& adjacency) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n) throw ShapeError("normalize_adjacency: matrix is not square");
  std::vector<double> inv_sqrt(n);
  const auto deg = adjacency.row_sums();
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(deg[i] + 1.0);

  std::vector<Triplet> t;
  t.reserve(adjacency.nnz() + n);
  for (std::size_t i = 0; i < n; ++i) {
    auto cols = adjacency.row_cols(i);
    auto vals = adjacency.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] == i) throw ContractError("normalize_adjacency: input has a self-loop");
      t.push_back({i, cols[k], vals[k] * inv_sqrt[i] * inv_sqrt[cols[k]]});
    }
    t.push_back({i, i, inv_sqrt[i] * inv_sqrt[i]});
  }
  return {Sparse(n, n, std::move(t))};
}

ParamStore init_gcn(const GcnShape& shape, Rng& rng) {
  if (shape.features == 0 || shape.hidden == 0 || shape.embedding == 0 || shape.classes == 0) {
    throw ContractError("init_gcn: every dimension must be positive");
  }
  ParamStore ps;
  ps.add("w1", nn::glorot_uniform(shape.features, shape.hidden, rng));
  ps.add("w2", nn::glorot_uniform(shape.hidden, shape.embedding, rng));
  ps.add("head", nn::glorot_uniform(shape.embedding, shape.classes, rng));
  ps.add("bias", Dense(1, shape.classes));
  return ps;
}

namespace {

void check_shapes(const NormalizedAdjacency& a_hat, const Dense& x, const ParamStore& params) {
  if (a_hat.matrix.rows() != x.rows()) {
    throw ContractError("gcn_forward: adjacency has " + std::to_string(a_hat.matrix.rows()) +
                        " rows, features " + std::to_string(x.rows()));
  }
  if (params.value("w1").rows() != x.cols()) {
    throw ContractError("gcn_forward: feature width " + std::to_string(x.cols()) +
                        " does not match w1");
  }
}

}  // namespace

GcnOutput gcn_forward(const NormalizedAdjacency& a_hat, const Dense& x, const ParamStore& params) {
  check_shapes(a_hat, x, params);
  Dense h = a_hat.matrix.multiply(dense::matmul(x, params.value("w1")));
  for (double& v : h.values()) v = std::max(v, 0.0);
  GcnOutput out;
  out.embeddings = a_hat.matrix.multiply(dense::matmul(h, params.value("w2")));
  out.logits = dense::matmul(out.embeddings, params.value("head"));
  const Dense& bias = params.value("bias");
  for (std::size_t r = 0; r < out.logits.rows(); ++r)
    for (std::size_t c = 0; c < out.logits.cols(); ++c) out.logits(r, c) += bias(0, c);
  return out;
}

Var two_layer_propagate(Tape& tape, const NormalizedAdjacency& a_hat, const Dense& x, Var w1, Var w2) {
  Var xw = ad::matmul(tape.constant_ref(x), w1);
  Var h = ad::relu(ad::spmm(a_hat.matrix, xw));
  return ad::spmm(a_hat.matrix, ad::matmul(h, w2));
}

GcnVars gcn_forward(Tape& tape, const NormalizedAdjacency& a_hat, const Dense& x,
                    const ParamStore& params) {
  check_shapes(a_hat, x, params);
  Var e = two_layer_propagate(tape, a_hat, x, tape.param(params, "w1"), tape.param(params, "w2"));
  Var logits = ad::add(ad::matmul(e, tape.param(params, "head")),
                       ad::broadcast_rows(tape.param(params, "bias"), x.rows()));
  return {e, logits};
}

}  // namespace gunl
