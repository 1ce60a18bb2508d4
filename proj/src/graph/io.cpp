#include "gunl/graph/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gunl/errors.hpp"

namespace gunl {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path.string());
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view token, const std::filesystem::path& file, std::size_t line) {
  T value{};
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(file.filename().string() + ": bad number '" + std::string(token) + "'", line);
  }
  return value;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

LoadedGraph load_graph(const std::filesystem::path& edges_path,
                       const std::filesystem::path& features_path,
                       const std::filesystem::path& labels_path,
                       const std::filesystem::path& splits_path, std::size_t declared_classes) {
  std::string line;

  std::vector<int> labels;
  {
    auto in = open_in(labels_path);
    std::size_t ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      labels.push_back(parse_number<int>(t, labels_path, ln));
      if (labels.back() < 0 ||
          (declared_classes && static_cast<std::size_t>(labels.back()) >= declared_classes)) {
        throw ValidationError("labels line " + std::to_string(ln) + ": label " +
                              std::to_string(labels.back()) + " out of range");
      }
    }
  }
  const std::size_t n = labels.size();
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  const auto n_classes =
      declared_classes ? declared_classes : static_cast<std::size_t>(max_label + 1);

  std::vector<double> feats;
  std::size_t f = 0;
  std::size_t rows = 0;
  {
    auto in = open_in(features_path);
    std::size_t ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      auto tokens = split_ws(t);
      if (rows == 0) f = tokens.size();
      if (tokens.size() != f) {
        throw ParseError(features_path.filename().string() + ": expected " + std::to_string(f) +
                             " values, got " + std::to_string(tokens.size()),
                         ln);
      }
      for (auto tok : tokens) feats.push_back(parse_number<double>(tok, features_path, ln));
      ++rows;
    }
  }
  if (rows != n) {
    throw ValidationError("features file has " + std::to_string(rows) + " rows, labels file " +
                          std::to_string(n));
  }

  std::vector<std::pair<NodeId, NodeId>> edge_list;
  LoadReport report;
  {
    auto in = open_in(edges_path);
    std::size_t ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      auto tokens = split_ws(t);
      if (tokens.size() != 2) {
        throw ParseError(edges_path.filename().string() + ": expected 'src<TAB>dst'", ln);
      }
      const auto a = parse_number<std::size_t>(tokens[0], edges_path, ln);
      const auto b = parse_number<std::size_t>(tokens[1], edges_path, ln);
      if (a >= n || b >= n) {
        throw ValidationError("edges line " + std::to_string(ln) + ": node id out of range");
      }
      edge_list.emplace_back(a, b);
      ++report.edge_lines;
    }
  }
  EdgeBuild built = build_adjacency(n, edge_list);
  report.self_loops_dropped = built.self_loops;
  report.duplicates_dropped = built.duplicates;

  Splits splits;
  if (!splits_path.empty()) {
    auto in = open_in(splits_path);
    std::size_t ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto colon = t.find(':');
      if (colon == std::string_view::npos) throw ParseError("splits: missing ':'", ln);
      const auto key = trim(t.substr(0, colon));
      std::vector<NodeId>* target = nullptr;
      if (key == "train") target = &splits.train;
      else if (key == "val") target = &splits.val;
      else if (key == "test") target = &splits.test;
      else throw ParseError("splits: unknown section '" + std::string(key) + "'", ln);
      for (auto tok : split_ws(t.substr(colon + 1)))
        target->push_back(parse_number<std::size_t>(tok, splits_path, ln));
      std::sort(target->begin(), target->end());
    }
  }

  Graph g(std::move(built.adjacency), Dense(n, f, std::move(feats)), std::move(labels), n_classes,
          std::move(splits));
  return {std::move(g), report};
}

void save_graph(const Graph& graph, const std::filesystem::path& edges,
                const std::filesystem::path& features, const std::filesystem::path& labels,
                const std::filesystem::path& splits) {
  {
    auto out = open_out(edges);
    out << "# undirected edges, one per line\n";
    for (NodeId u = 0; u < graph.n_nodes(); ++u)
      for (NodeId v : graph.neighbors(u))
        if (u < v) out << u << '\t' << v << '\n';
  }
  {
    auto out = open_out(features);
    out << std::setprecision(17);
    for (NodeId u = 0; u < graph.n_nodes(); ++u) {
      auto row = graph.features().row(u);
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? " " : "") << row[c];
      out << '\n';
    }
  }
  {
    auto out = open_out(labels);
    for (int l : graph.labels()) out << l << '\n';
  }
  {
    auto out = open_out(splits);
    auto write = [&](const char* name, const std::vector<NodeId>& ids) {
      out << name << ':';
      for (NodeId id : ids) out << ' ' << id;
      out << '\n';
    };
    write("train", graph.splits().train);
    write("val", graph.splits().val);
    write("test", graph.splits().test);
  }
}

}  // namespace gunl
