#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pivotal/classical_metrics.hpp"

namespace pivotal {

/// Probabilities of reaching the target before the avoid set below this value
/// are treated as exact zeros: the conditioned quantity is +inf.
inline constexpr double kFeasibilityThreshold = 1e-12;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline bool is_feasible(double feasibility) noexcept {
  return feasibility >= kFeasibilityThreshold;
}

/// A walk from `source`, stopped at `target`, conditioned on never visiting
/// any state of `avoid` first.
struct AvoidanceQuery {
  NodeIndex source = 0;
  NodeIndex target = 0;
  std::vector<NodeIndex> avoid;

  void validate(std::size_t state_count) const {
    if (source >= state_count || target >= state_count)
      throw ValidationError("query state index out of range");
    if (source == target) throw ValidationError("source and target must differ");
    for (NodeIndex o : avoid) {
      if (o >= state_count) throw ValidationError("avoid state index out of range");
      if (o == source) throw ValidationError("source is in the avoid set");
      if (o == target) throw ValidationError("target is in the avoid set");
    }
  }

  /// {target} u avoid, sorted and deduplicated.
  std::vector<NodeIndex> absorbing() const {
    std::vector<NodeIndex> a = avoid;
    a.push_back(target);
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
  }
};

/// A conditioned expectation together with the probability of the
/// conditioning event. `value` is +inf exactly when the event is infeasible.
struct AvoidanceResult {
  double feasibility = 0.0;
  double value = kInfinity;

  bool feasible() const noexcept { return is_feasible(feasibility); }
};

/// Conditional expected visit counts F^{t, not O}. Rows whose start state
/// cannot reach t before O are +inf.
struct AvoidanceFundamental {
  ChainPartition partition;  // absorbing set {t} u O
  NodeIndex target = 0;
  Matrix values;
  Vector feasibility;  // Q_i^{t, not O} per transient i

  auto row(NodeIndex state) const { return values.row(partition.require_transient(state)); }
  double at(NodeIndex from, NodeIndex to) const {
    return values(partition.require_transient(from), partition.require_transient(to));
  }
};

namespace detail {

inline double clamp_probability(double q) { return std::clamp(q, 0.0, 1.0); }

// (sum_m F_sm q_m w_m) / q_s, fixed summation order
inline double conditioned_row_sum(const Matrix& f, const Vector& q, Eigen::Index s,
                                  const Vector& weights) {
  double sum = 0.0;
  for (Eigen::Index m = 0; m < f.cols(); ++m) sum += (f(s, m) * q(m)) * weights(m);
  return sum / q(s);
}

}  // namespace detail

/// Q_i^{t, not O} for every transient i of f, where f was computed for the
/// absorbing set {t} u O.
inline Vector target_feasibility(const FundamentalMatrix& f, NodeIndex target) {
  const Eigen::Index col = f.partition().require_absorbing(target);
  return f.values() * f.partition().absorbing_block().col(col);
}

/// F_sm^{t, not O} = F_sm^{t u O} Q_m / Q_s for all transient s, m.
inline AvoidanceFundamental avoidance_fundamental(const FundamentalMatrix& f, NodeIndex target) {
  AvoidanceFundamental out{f.partition(), target, Matrix(), target_feasibility(f, target)};
  const Matrix& v = f.values();
  const Vector& q = out.feasibility;
  out.values.resize(v.rows(), v.cols());
  for (Eigen::Index s = 0; s < v.rows(); ++s) {
    if (!is_feasible(q(s))) {
      out.values.row(s).setConstant(kInfinity);
      continue;
    }
    for (Eigen::Index m = 0; m < v.cols(); ++m) out.values(s, m) = v(s, m) * q(m) / q(s);
  }
  return out;
}

/// Reweighted expected step cost r_m^{t, not O} = sum_i p_mi w_mi Q_i / Q_m,
/// with Q_t = 1 and Q_o = 0 for o in O. Normalized by sum_i p_mi Q_i (which
/// equals Q_m) so unit costs give exactly 1. Rows with no feasible successor
/// are 0; such states carry zero weight in every conditioned sum.
inline Vector conditioned_step_costs(const FundamentalMatrix& f, NodeIndex target,
                                     const Chain& c) {
  const ChainPartition& p = f.partition();
  p.require_absorbing(target);
  const Vector q = target_feasibility(f, target);
  const Matrix& P = c.transition();
  const Matrix& W = c.cost();

  auto feasibility_of = [&](NodeIndex i) -> double {
    if (i == target) return 1.0;
    if (auto pos = p.transient_position(i)) return q(*pos);
    return 0.0;
  };

  Vector r = Vector::Zero(q.size());
  for (std::size_t k = 0; k < p.transient_count(); ++k) {
    const auto m = static_cast<Eigen::Index>(k);
    const NodeIndex state = p.transient()[k];
    const auto row = static_cast<Eigen::Index>(state);
    double weighted = 0.0, mass = 0.0;
    for (NodeIndex i : c.successors(state)) {
      const double qi = feasibility_of(i);
      if (qi == 0.0) continue;
      const auto col = static_cast<Eigen::Index>(i);
      weighted += P(row, col) * W(row, col) * qi;
      mass += P(row, col) * qi;
    }
    if (mass > 0.0) r(m) = weighted / mass;
  }
  return r;
}

inline Vector conditioned_step_costs(const FundamentalMatrix& f, NodeIndex target) {
  return conditioned_step_costs(f, target, f.partition().chain());
}

/// H_s^{t, not O} = sum_m F_sm Q_m / Q_s, from f for {t} u O.
inline AvoidanceResult avoidance_hitting_time(const FundamentalMatrix& f, NodeIndex target,
                                              NodeIndex source) {
  const Eigen::Index s = f.partition().require_transient(source);
  const Vector q = target_feasibility(f, target);
  if (!is_feasible(q(s))) return {detail::clamp_probability(q(s)), kInfinity};
  return {detail::clamp_probability(q(s)),
          detail::conditioned_row_sum(f.values(), q, s, Vector::Ones(q.size()))};
}

/// U_s^{t, not O} = sum_m F_sm Q_m r_m^{t, not O} / Q_s, from f for {t} u O.
inline AvoidanceResult avoidance_hitting_cost(const FundamentalMatrix& f, NodeIndex target,
                                              NodeIndex source) {
  const Eigen::Index s = f.partition().require_transient(source);
  const Vector q = target_feasibility(f, target);
  if (!is_feasible(q(s))) return {detail::clamp_probability(q(s)), kInfinity};
  const Vector r = conditioned_step_costs(f, target);
  return {detail::clamp_probability(q(s)), detail::conditioned_row_sum(f.values(), q, s, r)};
}

// Chain-level entry points. Each factorizes I - P_TT for {t} u O once.

inline AvoidanceFundamental avoidance_fundamental(const Chain& c, const AvoidanceQuery& q) {
  q.validate(c.size());
  return avoidance_fundamental(fundamental_matrix(c, q.absorbing()), q.target);
}

inline AvoidanceResult avoidance_hitting_time(const Chain& c, const AvoidanceQuery& q) {
  q.validate(c.size());
  return avoidance_hitting_time(fundamental_matrix(c, q.absorbing()), q.target, q.source);
}

inline AvoidanceResult avoidance_hitting_cost(const Chain& c, const AvoidanceQuery& q) {
  q.validate(c.size());
  return avoidance_hitting_cost(fundamental_matrix(c, q.absorbing()), q.target, q.source);
}

inline AvoidanceResult avoidance_hitting_time(FundamentalCache& cache, const AvoidanceQuery& q) {
  q.validate(cache.chain().size());
  return avoidance_hitting_time(cache.get(q.absorbing()), q.target, q.source);
}

inline AvoidanceResult avoidance_hitting_cost(FundamentalCache& cache, const AvoidanceQuery& q) {
  q.validate(cache.chain().size());
  return avoidance_hitting_cost(cache.get(q.absorbing()), q.target, q.source);
}

/// Classical H_s^{t}.
inline double hitting_time(FundamentalCache& cache, NodeIndex source, NodeIndex target) {
  if (source == target) return 0.0;
  const FundamentalMatrix& f = cache.get({target});
  const Eigen::Index s = f.partition().require_transient(source);
  return detail::weighted_row_sum(f.values(), s, Vector::Ones(f.values().cols()));
}

/// H_s^{t via o} = H_s^{o, not t} + H_o^{t}: walks forced through o before t.
/// `feasibility` is Q_s^{o, not t}; +inf when o cannot be reached before t.
inline AvoidanceResult transit_hitting_time(FundamentalCache& cache, NodeIndex source,
                                            NodeIndex target, NodeIndex via) {
  AvoidanceQuery leg{source, via, {target}};
  leg.validate(cache.chain().size());
  AvoidanceResult first = avoidance_hitting_time(cache, leg);
  if (!first.feasible()) return first;
  return {first.feasibility, first.value + hitting_time(cache, via, target)};
}

inline AvoidanceResult transit_hitting_time(const Chain& c, NodeIndex source, NodeIndex target,
                                            NodeIndex via) {
  FundamentalCache cache(c);
  return transit_hitting_time(cache, source, target, via);
}

}  // namespace pivotal
