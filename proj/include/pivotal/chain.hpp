#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pivotal/graph.hpp"

namespace pivotal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kRowSumTolerance = 1e-12;

/// Discrete-time random walk: row-stochastic transition matrix P, per-arc cost
/// matrix W (zero off the support of P) and out-degrees d.
///
/// Immutable; copies share storage and may be used from several threads.
class Chain {
 public:
  Chain() = default;

  /// Builds a chain from explicit matrices. Rows of `transition` must be
  /// nonnegative and sum to one within kRowSumTolerance.
  static Chain from_matrices(Matrix transition, Matrix cost, std::vector<std::string> labels = {}) {
    const auto n = static_cast<std::size_t>(transition.rows());
    if (n == 0 || transition.cols() != transition.rows())
      throw ValidationError("transition matrix must be square and nonempty");
    if (cost.rows() != transition.rows() || cost.cols() != transition.cols())
      throw ValidationError("cost matrix shape does not match transition matrix");
    if (labels.empty())
      for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
    if (labels.size() != n) throw ValidationError("label count does not match matrix size");

    auto data = std::make_shared<Data>();
    data->out_degree = Vector::Ones(static_cast<Eigen::Index>(n));
    data->transition = std::move(transition);
    data->cost = std::move(cost);
    data->labels = std::move(labels);
    data->finish();
    return Chain(std::move(data));
  }

  std::size_t size() const noexcept { return data_ ? data_->labels.size() : 0; }
  const Matrix& transition() const noexcept { return data_->transition; }
  const Matrix& cost() const noexcept { return data_->cost; }
  const Vector& out_degree() const noexcept { return data_->out_degree; }
  const std::vector<std::string>& labels() const noexcept { return data_->labels; }
  const std::string& label(NodeIndex i) const { return data_->labels.at(i); }

  /// States j with P_ij > 0, ascending.
  const std::vector<NodeIndex>& successors(NodeIndex i) const { return data_->successors.at(i); }
  /// States j with P_ji > 0, ascending.
  const std::vector<NodeIndex>& predecessors(NodeIndex i) const {
    return data_->predecessors.at(i);
  }

  /// Expected one-step cost r_i = sum_j P_ij W_ij. Normalized by the computed
  /// row sum so that unit costs give exactly 1.
  double expected_step_cost(NodeIndex i) const {
    const auto row = static_cast<Eigen::Index>(i);
    double weighted = 0.0, mass = 0.0;
    for (NodeIndex j : successors(i)) {
      const auto col = static_cast<Eigen::Index>(j);
      weighted += data_->transition(row, col) * data_->cost(row, col);
      mass += data_->transition(row, col);
    }
    return weighted / mass;
  }

  friend Chain build_chain(const Graph& g);

 private:
  struct Data {
    Matrix transition;
    Matrix cost;
    Vector out_degree;
    std::vector<std::string> labels;
    std::vector<std::vector<NodeIndex>> successors;
    std::vector<std::vector<NodeIndex>> predecessors;

    void finish() {
      const auto n = labels.size();
      successors.assign(n, {});
      predecessors.assign(n, {});
      for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          double p = transition(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          if (!(p >= 0.0) || !std::isfinite(p))
            throw ValidationError("invalid transition probability in row of " + labels[i]);
          if (p > 0.0) {
            successors[i].push_back(j);
            predecessors[j].push_back(i);
          }
          sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance)
          throw ValidationError("transition row of " + labels[i] + " does not sum to 1");
      }
    }
  };

  explicit Chain(std::shared_ptr<const Data> data) : data_(std::move(data)) {}

  std::shared_ptr<const Data> data_;
};

/// P = D^-1 A over the graph's affinities; W carries edge costs.
/// Throws ValidationError naming the first node without outgoing edges.
inline Chain build_chain(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  auto data = std::make_shared<Chain::Data>();
  data->labels = g.labels();
  data->transition = Matrix::Zero(n, n);
  data->cost = Matrix::Zero(n, n);
  data->out_degree = Vector::Zero(n);

  for (const Edge& e : g.arcs()) {
    const auto u = static_cast<Eigen::Index>(e.src), v = static_cast<Eigen::Index>(e.dst);
    data->transition(u, v) += e.affinity;
    data->cost(u, v) = e.cost;
    data->out_degree(u) += e.affinity;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data->out_degree(i) <= 0.0)
      throw ValidationError("dangling node '" + g.label(static_cast<NodeIndex>(i)) +
                            "' has no outgoing edges");
    data->transition.row(i) /= data->out_degree(i);
  }
  data->finish();
  return Chain(std::move(data));
}

/// Ordered split of the states into transient (ascending index) and absorbing
/// (ascending index) sets, with the blocks P_TT and P_TA of the absorbing form.
class ChainPartition {
 public:
  ChainPartition() = default;

  const Chain& chain() const noexcept { return data_->chain; }
  const std::vector<NodeIndex>& transient() const noexcept { return data_->transient; }
  const std::vector<NodeIndex>& absorbing() const noexcept { return data_->absorbing; }
  const Matrix& transient_block() const noexcept { return data_->ptt; }
  const Matrix& absorbing_block() const noexcept { return data_->pta; }

  std::size_t transient_count() const noexcept { return data_->transient.size(); }
  std::size_t absorbing_count() const noexcept { return data_->absorbing.size(); }

  bool is_absorbing(NodeIndex state) const { return data_->position.at(state) < 0; }

  /// Row/column of `state` within the transient block.
  std::optional<Eigen::Index> transient_position(NodeIndex state) const {
    auto p = data_->position.at(state);
    if (p < 0) return std::nullopt;
    return p;
  }

  /// Column of `state` within the absorbing block.
  std::optional<Eigen::Index> absorbing_position(NodeIndex state) const {
    auto p = data_->position.at(state);
    if (p >= 0) return std::nullopt;
    return -p - 1;
  }

  Eigen::Index require_transient(NodeIndex state) const {
    if (state >= chain().size()) throw ValidationError("state index out of range");
    if (auto p = transient_position(state)) return *p;
    throw ValidationError("state '" + chain().label(state) + "' is absorbing in this partition");
  }

  Eigen::Index require_absorbing(NodeIndex state) const {
    if (state >= chain().size()) throw ValidationError("state index out of range");
    if (auto p = absorbing_position(state)) return *p;
    throw ValidationError("state '" + chain().label(state) + "' is transient in this partition");
  }

  friend ChainPartition partition(const Chain& c, std::span<const NodeIndex> absorbing);

 private:
  struct Data {
    Chain chain;
    std::vector<NodeIndex> transient;
    std::vector<NodeIndex> absorbing;
    // >= 0: transient position; < 0: -(absorbing position) - 1
    std::vector<Eigen::Index> position;
    Matrix ptt;
    Matrix pta;
  };

  explicit ChainPartition(std::shared_ptr<const Data> d) : data_(std::move(d)) {}

  std::shared_ptr<const Data> data_;
};

/// Makes `absorbing` absorbing. Fails when the set is empty, covers every
/// state, or some transient state cannot reach it (the stranded states are
/// listed in the message).
inline ChainPartition partition(const Chain& c, std::span<const NodeIndex> absorbing) {
  const std::size_t n = c.size();
  std::vector<bool> is_abs(n, false);
  for (NodeIndex a : absorbing) {
    if (a >= n) throw ValidationError("absorbing state index out of range");
    is_abs[a] = true;
  }
  auto data = std::make_shared<ChainPartition::Data>();
  data->chain = c;
  for (NodeIndex i = 0; i < n; ++i) (is_abs[i] ? data->absorbing : data->transient).push_back(i);
  if (data->absorbing.empty()) throw ValidationError("absorbing set must be nonempty");
  if (data->transient.empty())
    throw ValidationError("absorbing set must be a strict subset of the states");

  // backward search from the absorbing set over the support of P
  std::vector<bool> reaches = is_abs;
  std::vector<NodeIndex> frontier(data->absorbing);
  while (!frontier.empty()) {
    NodeIndex v = frontier.back();
    frontier.pop_back();
    for (NodeIndex u : c.predecessors(v)) {
      if (reaches[u]) continue;
      reaches[u] = true;
      frontier.push_back(u);
    }
  }
  std::string stranded;
  std::size_t stranded_count = 0;
  for (NodeIndex i : data->transient) {
    if (reaches[i]) continue;
    if (stranded_count++ < 20) stranded += (stranded.empty() ? "" : ", ") + c.label(i);
  }
  if (stranded_count > 0) {
    if (stranded_count > 20) stranded += ", ...";
    throw ValidationError("absorbing set unreachable from " + std::to_string(stranded_count) +
                          " transient state(s): " + stranded);
  }

  data->position.assign(n, 0);
  for (std::size_t k = 0; k < data->transient.size(); ++k)
    data->position[data->transient[k]] = static_cast<Eigen::Index>(k);
  for (std::size_t k = 0; k < data->absorbing.size(); ++k)
    data->position[data->absorbing[k]] = -static_cast<Eigen::Index>(k) - 1;

  const auto nt = static_cast<Eigen::Index>(data->transient.size());
  const auto na = static_cast<Eigen::Index>(data->absorbing.size());
  const Matrix& p = c.transition();
  data->ptt.resize(nt, nt);
  data->pta.resize(nt, na);
  for (Eigen::Index r = 0; r < nt; ++r) {
    const auto row = static_cast<Eigen::Index>(data->transient[static_cast<std::size_t>(r)]);
    for (Eigen::Index k = 0; k < nt; ++k)
      data->ptt(r, k) = p(row, static_cast<Eigen::Index>(data->transient[static_cast<std::size_t>(k)]));
    for (Eigen::Index k = 0; k < na; ++k)
      data->pta(r, k) = p(row, static_cast<Eigen::Index>(data->absorbing[static_cast<std::size_t>(k)]));
  }
  return ChainPartition(std::move(data));
}

inline ChainPartition partition(const Chain& c, std::initializer_list<NodeIndex> absorbing) {
  return partition(c, std::span<const NodeIndex>(absorbing.begin(), absorbing.size()));
}

}  // namespace pivotal
