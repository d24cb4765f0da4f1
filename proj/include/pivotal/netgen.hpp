#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "pivotal/graph.hpp"
#include "pivotal/random.hpp"

namespace pivotal {

/// Directed 5-node network: 1->2->3->4, 1->5->4 and the closing edge 4->1.
/// With unit weights this reproduces the s=1, t=4 metric table exactly
/// (H_1^4 = 2.5, e_CH = -3.5 at nodes 2, 3 and 5).
inline Graph example1() {
  GraphBuilder b(/*directed=*/true);
  for (auto l : {"1", "2", "3", "4", "5"}) b.add_node(l);
  b.add_edge("1", "2", 1.0);
  b.add_edge("2", "3", 1.0);
  b.add_edge("3", "4", 1.0);
  b.add_edge("1", "5", 1.0);
  b.add_edge("5", "4", 1.0);
  b.add_edge("4", "1", 1.0);
  return b.build();
}

/// Undirected unit network with three s-t routes: s-g-t, s-k1-m1-t, and
/// s-k2 followed by N2 disjoint chains of L2 edges from k2 to t. Chain j
/// has interior nodes c<j>_1 .. c<j>_<L2-1>; with L2 = 1 the chains are
/// parallel k2-t edges, merged into one edge of affinity N2.
///
/// Reconstruction: where the short s-g-t path attaches is not pinned down,
/// so only the k1/k2 symmetry at (L2, N2) = (2, 1) and the ordering trends
/// are meaningful, not absolute values.
inline Graph example2(int L2, int N2) {
  if (L2 < 1 || N2 < 1) throw ValidationError("example2 needs L2 >= 1 and N2 >= 1");
  GraphBuilder b(/*directed=*/false);
  for (auto l : {"s", "g", "t", "k1", "m1", "k2"}) b.add_node(l);
  b.add_edge("s", "g", 1.0);
  b.add_edge("g", "t", 1.0);
  b.add_edge("s", "k1", 1.0);
  b.add_edge("k1", "m1", 1.0);
  b.add_edge("m1", "t", 1.0);
  b.add_edge("s", "k2", 1.0);
  for (int j = 1; j <= N2; ++j) {
    std::string prev = "k2";
    for (int i = 1; i < L2; ++i) {
      std::string node = "c" + std::to_string(j) + "_" + std::to_string(i);
      b.add_edge(prev, node, 1.0);
      prev = std::move(node);
    }
    b.add_edge(prev, "t", 1.0);
  }
  return b.build();
}

/// Undirected unit path 1-2-3.
inline Graph example3b() {
  GraphBuilder b(/*directed=*/false);
  b.add_edge("1", "2", 1.0);
  b.add_edge("2", "3", 1.0);
  return b.build();
}

/// Data-center fat-tree of even arity h: (h/2)^2 core switches c<i>, h pods
/// of h/2 aggregation (a<p>_<j>) and h/2 edge (e<p>_<j>) switches, and h/2
/// hosts h<p>_<j>_<k> under each edge switch. Core switch i connects to
/// aggregation switch i / (h/2) of every pod. Undirected, unit weights.
inline Graph fat_tree(int h) {
  if (h < 2 || h % 2 != 0) throw ValidationError("fat-tree arity must be an even integer >= 2");
  const int half = h / 2;
  GraphBuilder b(/*directed=*/false);
  auto core = [](int i) { return "c" + std::to_string(i); };
  auto agg = [](int p, int j) { return "a" + std::to_string(p) + "_" + std::to_string(j); };
  auto edge = [](int p, int j) { return "e" + std::to_string(p) + "_" + std::to_string(j); };
  auto host = [](int p, int j, int k) {
    return "h" + std::to_string(p) + "_" + std::to_string(j) + "_" + std::to_string(k);
  };
  for (int i = 0; i < half * half; ++i) b.add_node(core(i));
  for (int p = 0; p < h; ++p) {
    for (int j = 0; j < half; ++j) b.add_node(agg(p, j));
    for (int j = 0; j < half; ++j) b.add_node(edge(p, j));
    for (int j = 0; j < half; ++j)
      for (int k = 0; k < half; ++k) b.add_node(host(p, j, k));
  }
  for (int p = 0; p < h; ++p) {
    for (int i = 0; i < half * half; ++i) b.add_edge(core(i), agg(p, i / half), 1.0);
    for (int a = 0; a < half; ++a)
      for (int e = 0; e < half; ++e) b.add_edge(agg(p, a), edge(p, e), 1.0);
    for (int e = 0; e < half; ++e)
      for (int k = 0; k < half; ++k) b.add_edge(edge(p, e), host(p, e, k), 1.0);
  }
  return b.build();
}

namespace detail {

inline std::vector<bool> reachable_from(std::size_t n, const std::vector<Edge>& arcs,
                                        NodeIndex root, bool reverse) {
  std::vector<std::vector<NodeIndex>> adj(n);
  for (const Edge& e : arcs) {
    if (reverse)
      adj[e.dst].push_back(e.src);
    else
      adj[e.src].push_back(e.dst);
  }
  std::vector<bool> seen(n, false);
  std::queue<NodeIndex> frontier;
  frontier.push(root);
  seen[root] = true;
  while (!frontier.empty()) {
    NodeIndex u = frontier.front();
    frontier.pop();
    for (NodeIndex v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        frontier.push(v);
      }
  }
  return seen;
}

inline bool all_true(const std::vector<bool>& v) {
  return std::find(v.begin(), v.end(), false) == v.end();
}

}  // namespace detail

/// Strongly connected for directed graphs, connected for undirected ones.
inline bool is_connected(const Graph& g) {
  const std::size_t n = g.node_count();
  if (n == 0) return true;
  if (!detail::all_true(detail::reachable_from(n, g.arcs(), 0, false))) return false;
  return !g.directed() || detail::all_true(detail::reachable_from(n, g.arcs(), 0, true));
}

inline constexpr int kRandomGraphAttempts = 1000;

/// Erdos-Renyi graph on nodes "0".."n-1" with unit weights: each ordered
/// (directed) or unordered (undirected) pair of distinct nodes is an edge
/// with probability p. Redrawn until connected; attempt a uses the stream
/// stream_seed(seed, a).
inline Graph random_graph(std::size_t n, double p, std::uint64_t seed, bool directed) {
  if (n < 2) throw ValidationError("random graph needs at least 2 nodes");
  if (!(p > 0.0 && p <= 1.0)) throw ValidationError("edge probability must be in (0, 1]");
  for (int attempt = 0; attempt < kRandomGraphAttempts; ++attempt) {
    std::mt19937_64 rng(detail::stream_seed(seed, static_cast<std::uint64_t>(attempt)));
    GraphBuilder b(directed);
    for (std::size_t i = 0; i < n; ++i) b.add_node(std::to_string(i));
    for (NodeIndex i = 0; i < n; ++i)
      for (NodeIndex j = directed ? 0 : i + 1; j < n; ++j) {
        if (i == j) continue;
        if (detail::unit_uniform(rng) < p) b.add_edge(i, j, 1.0, 1.0);
      }
    Graph g = b.build();
    if (is_connected(g)) return g;
  }
  throw ValidationError("random graph: no connected sample within " +
                        std::to_string(kRandomGraphAttempts) + " attempts");
}

/// Same topology with affinities and costs drawn independently from
/// [lo, hi). Undirected edges keep one weight pair for both directions.
inline Graph with_random_weights(const Graph& g, std::uint64_t seed, double lo = 0.5,
                                 double hi = 2.0) {
  std::mt19937_64 rng(detail::stream_seed(seed, 0));
  auto draw = [&] { return lo + (hi - lo) * detail::unit_uniform(rng); };
  std::vector<Edge> edges = g.declared_edges();
  for (Edge& e : edges) {
    e.affinity = draw();
    e.cost = draw();
  }
  return Graph(g.labels(), edges, g.directed());
}

/// Two random connected undirected blocks sharing exactly one node.
struct JoinedBlocks {
  Graph graph;
  NodeIndex cut = 0;
  NodeIndex source = 0;  // in the first block
  NodeIndex target = 0;  // in the second block
};

/// Blocks of n1 and n2 nodes (each >= 2, cut vertex included). Block one is
/// a0..a<n1-2> plus the cut "k", block two is "k" plus b1..b<n2-1>.
inline JoinedBlocks joined_blocks(std::size_t n1, std::size_t n2, double p, std::uint64_t seed) {
  if (n1 < 2 || n2 < 2) throw ValidationError("each block needs at least 2 nodes");
  const Graph first = random_graph(n1, p, detail::stream_seed(seed, 1), false);
  const Graph second = random_graph(n2, p, detail::stream_seed(seed, 2), false);
  GraphBuilder b(/*directed=*/false);
  // first block: local n1-1 is the cut; second block: local 0 is the cut
  auto name_first = [&](NodeIndex i) {
    return i + 1 == n1 ? std::string("k") : "a" + std::to_string(i);
  };
  auto name_second = [&](NodeIndex i) {
    return i == 0 ? std::string("k") : "b" + std::to_string(i);
  };
  for (NodeIndex i = 0; i < n1; ++i) b.add_node(name_first(i));
  for (NodeIndex i = 1; i < n2; ++i) b.add_node(name_second(i));
  for (const Edge& e : first.declared_edges()) b.add_edge(name_first(e.src), name_first(e.dst), 1.0);
  for (const Edge& e : second.declared_edges())
    b.add_edge(name_second(e.src), name_second(e.dst), 1.0);
  JoinedBlocks out{b.build()};
  out.cut = out.graph.index_of("k");
  out.source = out.graph.index_of("a0");
  out.target = out.graph.index_of("b" + std::to_string(n2 - 1));
  return out;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    auto pos = s.find(sep);
    out.push_back(s.substr(0, pos));
    if (pos == std::string_view::npos) return out;
    s.remove_prefix(pos + 1);
  }
}

template <class T>
T parse_field(std::string_view field, std::string_view spec) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ValidationError("bad generator parameter '" + std::string(field) + "' in '" +
                          std::string(spec) + "'");
  return value;
}

}  // namespace detail

/// Builds a graph from a generator spec:
///   example1 | example2:L2,N2 | example3b | fat-tree:h |
///   random:n,p,seed[,directed|undirected]
inline Graph generate(std::string_view spec) {
  const auto colon = spec.find(':');
  const std::string_view kind = spec.substr(0, colon);
  const std::vector<std::string_view> args =
      colon == std::string_view::npos ? std::vector<std::string_view>{}
                                      : detail::split(spec.substr(colon + 1), ',');
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi)
      throw ValidationError("wrong number of parameters in generator spec '" + std::string(spec) +
                            "'");
  };
  if (kind == "example1") {
    need(0, 0);
    return example1();
  }
  if (kind == "example2") {
    need(2, 2);
    return example2(detail::parse_field<int>(args[0], spec), detail::parse_field<int>(args[1], spec));
  }
  if (kind == "example3b") {
    need(0, 0);
    return example3b();
  }
  if (kind == "fat-tree") {
    need(0, 1);
    return fat_tree(args.empty() ? 6 : detail::parse_field<int>(args[0], spec));
  }
  if (kind == "random") {
    need(3, 4);
    bool directed = true;
    if (args.size() == 4) {
      if (args[3] == "undirected")
        directed = false;
      else if (args[3] != "directed")
        throw ValidationError("random graph orientation must be 'directed' or 'undirected'");
    }
    return random_graph(detail::parse_field<std::size_t>(args[0], spec),
                        detail::parse_field<double>(args[1], spec),
                        detail::parse_field<std::uint64_t>(args[2], spec), directed);
  }
  throw ValidationError("unknown generator '" + std::string(kind) + "'");
}

}  // namespace pivotal
