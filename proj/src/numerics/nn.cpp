#include "gunl/numerics/nn.hpp"

#include <algorithm>
#include <cmath>

#include "gunl/errors.hpp"

namespace gunl::nn {

Dense glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Dense w(fan_in, fan_out);
  for (double& v : w.values()) v = rng.uniform(-a, a);
  return w;
}

Var cross_entropy(Var logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(logits.rows()) + " rows");
  }
  Dense onehot(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto c = static_cast<std::size_t>(labels[r]);
    if (labels[r] < 0 || c >= logits.cols()) throw ContractError("cross_entropy: label out of range");
    onehot(r, c) = 1.0;
  }
  Tape& t = *logits.tape;
  Var logp = ad::log(ad::row_softmax(logits));
  Var picked = ad::sum(ad::mul(logp, t.constant(std::move(onehot))));
  return ad::scale(picked, -1.0 / static_cast<double>(labels.size()));
}

Var cosine_rows(Var a, Var b) {
  Var dot = ad::row_sums(ad::mul(a, b));
  Var norms = ad::mul(ad::row_l2norm(a), ad::row_l2norm(b));
  return ad::div(dot, ad::clamp_min(norms, 1e-12));
}

std::vector<std::size_t> argmax_rows(const Dense& m) {
  std::vector<std::size_t> out(m.rows(), 0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Dense softmax_rows(const Dense& m) {
  Dense out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    if (row.empty()) continue;
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& v : row) z += (v = std::exp(v - mx));
    for (double& v : row) v /= z;
  }
  return out;
}

}  // namespace gunl::nn
