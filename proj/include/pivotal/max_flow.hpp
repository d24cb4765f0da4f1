#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <queue>
#include <vector>

#include "pivotal/graph.hpp"

namespace pivotal {

/// Edmonds-Karp maximum flow with edge affinities as capacities.
///
/// `removed`, when set, deletes that node and its incident edges first.
/// Residual capacities below `epsilon` are treated as saturated.
inline double max_flow(const Graph& g, NodeIndex source, NodeIndex sink,
                       std::optional<NodeIndex> removed = std::nullopt, double epsilon = 1e-12) {
  const std::size_t n = g.node_count();
  if (source >= n || sink >= n) throw ValidationError("max flow endpoint out of range");
  if (source == sink) throw ValidationError("max flow needs distinct source and sink");
  if (removed && (*removed == source || *removed == sink)) return 0.0;

  struct Arc {
    NodeIndex to;
    double residual;
    std::size_t reverse;
  };
  std::vector<std::vector<Arc>> adj(n);
  for (const Edge& e : g.arcs()) {
    if (e.src == e.dst) continue;
    if (removed && (e.src == *removed || e.dst == *removed)) continue;
    adj[e.src].push_back({e.dst, e.affinity, adj[e.dst].size()});
    adj[e.dst].push_back({e.src, 0.0, adj[e.src].size() - 1});
  }

  double total = 0.0;
  std::vector<std::pair<NodeIndex, std::size_t>> parent(n);
  while (true) {
    std::vector<bool> seen(n, false);
    std::queue<NodeIndex> frontier;
    frontier.push(source);
    seen[source] = true;
    while (!frontier.empty() && !seen[sink]) {
      NodeIndex u = frontier.front();
      frontier.pop();
      for (std::size_t k = 0; k < adj[u].size(); ++k) {
        const Arc& a = adj[u][k];
        if (seen[a.to] || a.residual <= epsilon) continue;
        seen[a.to] = true;
        parent[a.to] = {u, k};
        frontier.push(a.to);
      }
    }
    if (!seen[sink]) break;

    double bottleneck = std::numeric_limits<double>::infinity();
    for (NodeIndex v = sink; v != source; v = parent[v].first)
      bottleneck = std::min(bottleneck, adj[parent[v].first][parent[v].second].residual);
    for (NodeIndex v = sink; v != source; v = parent[v].first) {
      Arc& a = adj[parent[v].first][parent[v].second];
      a.residual -= bottleneck;
      adj[a.to][a.reverse].residual += bottleneck;
    }
    total += bottleneck;
  }
  return total;
}

}  // namespace pivotal
