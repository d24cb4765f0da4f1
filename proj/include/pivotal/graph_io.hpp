#pragma once

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include <json.hpp>

#include "pivotal/format.hpp"
#include "pivotal/graph.hpp"

namespace pivotal {

enum class GraphFormat { edge_list_csv, json };

namespace detail {

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline double parse_decimal(std::string_view field, std::string_view what, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw ParseError("invalid " + std::string(what) + " '" + std::string(field) + "'", line);
  return value;
}

inline Graph load_edge_list_csv(std::istream& in, bool directed) {
  GraphBuilder builder(directed);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      fields.push_back(trim(line.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 3 && fields.size() != 4)
      throw ParseError("expected 'src,dst,affinity[,cost]', got " +
                           std::to_string(fields.size()) + " fields",
                       line_no);
    if (fields[0].empty() || fields[1].empty()) throw ParseError("empty node label", line_no);

    double affinity = parse_decimal(fields[2], "affinity", line_no);
    std::optional<double> cost;
    if (fields.size() == 4) cost = parse_decimal(fields[3], "cost", line_no);
    builder.add_edge(fields[0], fields[1], affinity, cost, line_no);
  }
  if (builder.node_count() == 0) throw ParseError("edge list contains no edges", 0);
  return builder.build();
}

inline Graph load_json_graph(std::istream& in) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), 0);
  }
  try {
    if (!doc.is_object()) throw ParseError("JSON graph must be an object", 0);
    bool directed = doc.at("directed").get<bool>();
    GraphBuilder builder(directed);
    for (const auto& node : doc.at("nodes")) builder.add_node(node.get<std::string>());
    std::size_t declared = builder.node_count();
    if (declared != doc.at("nodes").size()) throw ParseError("duplicate node label", 0);

    std::size_t i = 0;
    for (const auto& e : doc.at("edges")) {
      ++i;
      auto src = e.at("src").get<std::string>();
      auto dst = e.at("dst").get<std::string>();
      double affinity = e.at("affinity").get<double>();
      std::optional<double> cost;
      if (e.contains("cost")) cost = e.at("cost").get<double>();
      builder.add_edge(src, dst, affinity, cost);
      if (builder.node_count() != declared)
        throw ParseError("edge " + std::to_string(i) + " references undeclared node", 0);
    }
    return builder.build();
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON graph: ") + e.what(), 0);
  }
}

}  // namespace detail

/// Reads a graph. `directed` applies to the csv format only; JSON documents
/// carry their own flag. Labels get dense indices in first-appearance order
/// (declaration order for JSON).
inline Graph load_graph(std::istream& in, GraphFormat format, bool directed) {
  switch (format) {
    case GraphFormat::edge_list_csv:
      return detail::load_edge_list_csv(in, directed);
    case GraphFormat::json:
      return detail::load_json_graph(in);
  }
  throw ValidationError("unknown graph format");
}

inline Graph load_graph(std::string_view text, GraphFormat format, bool directed) {
  std::istringstream in{std::string(text)};
  return load_graph(in, format, directed);
}

/// Lossless edge-list output (costs always written).
inline void write_graph_csv(std::ostream& out, const Graph& g) {
  out << "# " << (g.directed() ? "directed" : "undirected") << ", " << g.node_count()
      << " nodes\n";
  for (const Edge& e : g.declared_edges())
    out << g.label(e.src) << ',' << g.label(e.dst) << ',' << format_exact(e.affinity) << ','
        << format_exact(e.cost) << '\n';
}

inline nlohmann::json graph_to_json(const Graph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : g.declared_edges())
    edges.push_back({{"src", g.label(e.src)},
                     {"dst", g.label(e.dst)},
                     {"affinity", e.affinity},
                     {"cost", e.cost}});
  return {{"directed", g.directed()}, {"nodes", g.labels()}, {"edges", std::move(edges)}};
}

inline void write_graph_json(std::ostream& out, const Graph& g) {
  out << graph_to_json(g).dump(2) << '\n';
}

/// Plain DOT rendering without scores.
inline void write_graph_dot(std::ostream& out, const Graph& g) {
  const char* arrow = g.directed() ? " -> " : " -- ";
  out << (g.directed() ? "digraph" : "graph") << " G {\n";
  for (NodeIndex i = 0; i < g.node_count(); ++i) out << "  " << dot_id(g.label(i)) << ";\n";
  for (const Edge& e : g.declared_edges())
    out << "  " << dot_id(g.label(e.src)) << arrow << dot_id(g.label(e.dst)) << ";\n";
  out << "}\n";
}

}  // namespace pivotal
