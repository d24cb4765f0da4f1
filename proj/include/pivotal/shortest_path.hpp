#pragma once

#include <functional>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "pivotal/graph.hpp"

namespace pivotal {

/// Dijkstra over edge costs. With `reverse`, distances are *to* `root`.
/// Unreachable nodes get +inf. Negative costs are rejected.
inline std::vector<double> shortest_path_lengths(const Graph& g, NodeIndex root,
                                                 bool reverse = false) {
  const std::size_t n = g.node_count();
  if (root >= n) throw ValidationError("shortest path root out of range");
  std::vector<std::vector<std::pair<NodeIndex, double>>> adj(n);
  for (const Edge& e : g.arcs()) {
    if (e.cost < 0.0) throw ValidationError("shortest paths require nonnegative edge costs");
    if (reverse)
      adj[e.dst].emplace_back(e.src, e.cost);
    else
      adj[e.src].emplace_back(e.dst, e.cost);
  }

  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, NodeIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[root] = 0.0;
  heap.emplace(0.0, root);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (auto [v, w] : adj[u]) {
      if (d + w < dist[v]) {
        dist[v] = d + w;
        heap.emplace(dist[v], v);
      }
    }
  }
  return dist;
}

}  // namespace pivotal
