#include "gunl/oracles/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gunl/errors.hpp"

namespace gunl::oracle {

namespace {

constexpr double kEps = 1e-12;

void check_assignment(const Dense& P, const Graph& graph) {
  if (P.rows() != graph.n_nodes() || P.cols() == 0) {
    throw ContractError("assignment matrix is " + std::to_string(P.rows()) + "x" +
                        std::to_string(P.cols()) + " for " + std::to_string(graph.n_nodes()) +
                        " nodes");
  }
  for (std::size_t j = 0; j < P.rows(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < P.cols(); ++i) s += P(j, i);
    if (std::abs(s - 1.0) > 1e-6) {
      throw ContractError("assignment row " + std::to_string(j) + " sums to " + std::to_string(s));
    }
  }
}

}  // namespace

std::vector<ShardStats> expected_stats(const Dense& P, const Graph& graph) {
  check_assignment(P, graph);
  const std::size_t n = graph.n_nodes();
  const std::size_t s = P.cols();
  const Sparse& A = graph.adjacency();
  std::vector<ShardStats> stats(s);

  for (std::size_t i = 0; i < s; ++i) {
    ShardStats& st = stats[i];
    st.exp_label_counts.assign(graph.n_classes(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      st.exp_nodes += P(j, i);
      st.exp_degree_sum += P(j, i) * static_cast<double>(graph.degree(j));
      st.exp_label_counts[static_cast<std::size_t>(graph.labels()[j])] += P(j, i);
    }
    // every ordered pair (j, k) with A[j,k] = 1
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k : A.row_cols(j)) {
        st.exp_edges += P(j, i) * P(k, i);
        st.exp_cut += P(j, i) * (1.0 - P(k, i));
      }
    }
  }
  return stats;
}

double loss_time(const Dense& P, const Graph& graph) {
  const auto stats = expected_stats(P, graph);
  const double n = static_cast<double>(graph.n_nodes());
  double total = 0.0;
  for (const auto& st : stats) total += (st.exp_nodes / n) * st.exp_edges;
  return total;
}

double loss_struct(const Dense& P, const Graph& graph) {
  const auto stats = expected_stats(P, graph);
  double total = 0.0;
  for (const auto& st : stats) total += st.exp_cut / std::max(st.exp_degree_sum, kEps);
  return total;
}

double loss_sem(const Dense& P, const Graph& graph) {
  const auto stats = expected_stats(P, graph);
  double total = 0.0;
  for (const auto& st : stats) {
    double h = 0.0;
    for (double c : st.exp_label_counts) {
      const double p = c / std::max(st.exp_nodes, kEps);
      if (p > 0.0) h -= p * std::log(p);
    }
    total += h;
  }
  return total / static_cast<double>(stats.size());
}

GradMap finite_diff(const LossFn& loss, const ParamStore& params, double step) {
  ParamStore probe = params;
  GradMap out;
  for (const auto& name : params.names()) {
    Dense& w = probe.value(name);
    Dense g(w.rows(), w.cols());
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double orig = w.data()[k];
      w.data()[k] = orig + step;
      const double up = loss(probe);
      w.data()[k] = orig - step;
      const double down = loss(probe);
      w.data()[k] = orig;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw ContractError("finite_diff: non-finite loss while probing '" + name + "'");
      }
      g.data()[k] = (up - down) / (2.0 * step);
    }
    out.emplace(name, std::move(g));
  }
  return out;
}

}  // namespace gunl::oracle
