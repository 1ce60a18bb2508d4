#pragma once

#include <cstddef>
#include <span>

#include "gunl/numerics/dense.hpp"
#include "gunl/numerics/rng.hpp"
#include "gunl/numerics/tape.hpp"

namespace gunl::nn {

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Dense glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// Mean softmax cross-entropy of `logits` rows against integer labels.
Var cross_entropy(Var logits, std::span<const int> labels);

/// Cosine similarity of matching rows as an n x 1 column. Zero rows give 0.
Var cosine_rows(Var a, Var b);

/// Row-wise argmax, ties to the lowest column.
std::vector<std::size_t> argmax_rows(const Dense& m);

/// Plain row softmax (max-subtracted), for inference paths without a tape.
Dense softmax_rows(const Dense& m);

}  // namespace gunl::nn
