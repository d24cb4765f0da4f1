#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pivotal/error.hpp"

namespace pivotal {

using NodeIndex = std::size_t;

/// One directed arc. `affinity` drives transition probabilities, `cost` drives
/// hitting costs.
struct Edge {
  NodeIndex src = 0;
  NodeIndex dst = 0;
  double affinity = 1.0;
  double cost = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Weighted directed graph with dense 0-based node indices and unique labels.
///
/// Undirected input is stored as two arcs per edge (one arc for a self-loop).
/// Parallel arcs are collapsed: affinities add, costs must agree. Arcs are kept
/// sorted by (src, dst), so two graphs built from the same edge multiset
/// compare equal regardless of input order.
class Graph {
 public:
  Graph() = default;

  /// `edges` are interpreted as undirected when `directed` is false.
  Graph(std::vector<std::string> labels, const std::vector<Edge>& edges, bool directed)
      : labels_(std::move(labels)), directed_(directed) {
    if (labels_.empty()) throw ValidationError("graph must have at least one node");
    for (NodeIndex i = 0; i < labels_.size(); ++i) {
      if (labels_[i].empty()) throw ValidationError("empty node label");
      if (!index_.emplace(labels_[i], i).second)
        throw ValidationError("duplicate node label '" + labels_[i] + "'");
    }

    std::map<std::pair<NodeIndex, NodeIndex>, Edge> merged;
    auto add_arc = [&](NodeIndex u, NodeIndex v, double affinity, double cost) {
      auto [it, inserted] = merged.try_emplace({u, v}, Edge{u, v, affinity, cost});
      if (inserted) return;
      if (it->second.cost != cost)
        throw ValidationError("conflicting costs on parallel edges " + labels_[u] + " -> " +
                              labels_[v]);
      it->second.affinity += affinity;
    };

    for (const Edge& e : edges) {
      if (e.src >= labels_.size() || e.dst >= labels_.size())
        throw ValidationError("edge endpoint out of range");
      if (!std::isfinite(e.affinity) || e.affinity < 0.0)
        throw ValidationError("negative or non-finite affinity on edge " + labels_[e.src] +
                              " -> " + labels_[e.dst]);
      if (!std::isfinite(e.cost))
        throw ValidationError("non-finite cost on edge " + labels_[e.src] + " -> " +
                              labels_[e.dst]);
      // zero affinity means "no edge"
      if (e.affinity == 0.0) continue;
      add_arc(e.src, e.dst, e.affinity, e.cost);
      if (!directed_ && e.src != e.dst) add_arc(e.dst, e.src, e.affinity, e.cost);
    }

    arcs_.reserve(merged.size());
    for (auto& [key, e] : merged) arcs_.push_back(e);
  }

  std::size_t node_count() const noexcept { return labels_.size(); }
  bool directed() const noexcept { return directed_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(NodeIndex i) const { return labels_.at(i); }

  /// Directed arcs, sorted by (src, dst).
  const std::vector<Edge>& arcs() const noexcept { return arcs_; }

  std::optional<NodeIndex> find(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  NodeIndex index_of(std::string_view label) const {
    if (auto i = find(label)) return *i;
    throw ValidationError("unknown node label '" + std::string(label) + "'");
  }

  /// The edge list in the form it was declared: every arc for directed graphs,
  /// one arc per undirected edge (src <= dst) otherwise.
  std::vector<Edge> declared_edges() const {
    if (directed_) return arcs_;
    std::vector<Edge> out;
    for (const Edge& e : arcs_)
      if (e.src <= e.dst) out.push_back(e);
    return out;
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.labels_ == b.labels_ && a.arcs_ == b.arcs_;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::vector<Edge> arcs_;
  bool directed_ = true;
};

/// Incremental construction by label with first-appearance index assignment.
/// Reports duplicate-edge cost conflicts with the offending input line.
class GraphBuilder {
 public:
  explicit GraphBuilder(bool directed) : directed_(directed) {}

  NodeIndex add_node(std::string_view label) {
    if (label.empty()) throw ValidationError("empty node label");
    auto [it, inserted] = index_.try_emplace(std::string(label), labels_.size());
    if (inserted) labels_.emplace_back(label);
    return it->second;
  }

  /// `cost` defaults to the affinity. `line` only decorates error messages.
  void add_edge(std::string_view src, std::string_view dst, double affinity,
                std::optional<double> cost = std::nullopt, std::size_t line = 0) {
    NodeIndex u = add_node(src);
    NodeIndex v = add_node(dst);
    add_edge(u, v, affinity, cost.value_or(affinity), line);
  }

  void add_edge(NodeIndex u, NodeIndex v, double affinity, double cost, std::size_t line = 0) {
    if (!std::isfinite(affinity)) throw ParseError("non-finite affinity", line);
    if (affinity < 0.0)
      throw ParseError("negative affinity on edge " + labels_.at(u) + " -> " + labels_.at(v),
                       line);
    if (!std::isfinite(cost)) throw ParseError("non-finite cost", line);
    if (affinity == 0.0) return;

    auto key = directed_ ? std::pair{u, v} : std::pair{std::min(u, v), std::max(u, v)};
    auto [it, inserted] = seen_.try_emplace(key, edges_.size());
    if (inserted) {
      edges_.push_back(Edge{u, v, affinity, cost});
      return;
    }
    Edge& e = edges_[it->second];
    if (e.cost != cost)
      throw ParseError("duplicate edge " + labels_[u] + " -> " + labels_[v] +
                           " with mismatched cost",
                       line);
    e.affinity += affinity;
  }

  std::size_t node_count() const noexcept { return labels_.size(); }

  Graph build() const { return Graph(labels_, edges_, directed_); }

 private:
  bool directed_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::vector<Edge> edges_;
  std::map<std::pair<NodeIndex, NodeIndex>, std::size_t> seen_;
};

}  // namespace pivotal
