#pragma once

#include <cstddef>
#include <filesystem>

#include "gunl/graph/graph.hpp"

namespace gunl {

struct LoadReport {
  std::size_t edge_lines = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_dropped = 0;
};

struct LoadedGraph {
  Graph graph;
  LoadReport report;
};

/// Reads the text formats:
///   edges     `src<TAB>dst` per line, 0-based, `#` starts a comment line
///   features  one whitespace-separated row of floats per node, in id order
///   labels    one integer per line in [0, n_classes); n_classes == 0 means
///             max label + 1
///   splits    lines `train: ids...`, `val: ids...`, `test: ids...`
/// An empty `splits` path leaves the splits empty.
LoadedGraph load_graph(const std::filesystem::path& edges, const std::filesystem::path& features,
                       const std::filesystem::path& labels, const std::filesystem::path& splits,
                       std::size_t n_classes = 0);

/// Writes the four files in the formats load_graph reads.
void save_graph(const Graph& graph, const std::filesystem::path& edges,
                const std::filesystem::path& features, const std::filesystem::path& labels,
                const std::filesystem::path& splits);

}  // namespace gunl
