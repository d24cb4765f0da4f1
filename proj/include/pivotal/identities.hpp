#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pivotal/avoidance_metrics.hpp"

namespace pivotal {

/// |a - b| / max(1, |a|, |b|): relative for large magnitudes, absolute near 0.
inline double relative_residual(double a, double b) {
  if (a == b) return 0.0;  // also equal infinities
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

/// Residual statistics for one identity over every instance it was checked on.
struct IdentityCheck {
  std::string name;
  double max_abs_residual = 0.0;
  double max_rel_residual = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;

  void record(double lhs, double rhs) {
    ++evaluated;
    double abs_res = (lhs == rhs) ? 0.0 : std::abs(lhs - rhs);
    if (std::isnan(abs_res)) abs_res = kInfinity;
    max_abs_residual = std::max(max_abs_residual, abs_res);
    double rel = relative_residual(lhs, rhs);
    max_rel_residual = std::max(max_rel_residual, std::isnan(rel) ? kInfinity : rel);
  }

  void skip() { ++skipped; }

  void merge(const IdentityCheck& other) {
    max_abs_residual = std::max(max_abs_residual, other.max_abs_residual);
    max_rel_residual = std::max(max_rel_residual, other.max_rel_residual);
    evaluated += other.evaluated;
    skipped += other.skipped;
  }
};

struct IdentityReport {
  std::vector<IdentityCheck> checks;

  IdentityCheck& check(std::string_view name) {
    for (auto& c : checks)
      if (c.name == name) return c;
    checks.push_back(IdentityCheck{std::string(name)});
    return checks.back();
  }

  const IdentityCheck* find(std::string_view name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }

  void merge(const IdentityReport& other) {
    for (const auto& c : other.checks) check(c.name).merge(c);
  }

  double max_relative_residual() const {
    double m = 0.0;
    for (const auto& c : checks) m = std::max(m, c.max_rel_residual);
    return m;
  }

  bool within(double tolerance) const { return max_relative_residual() <= tolerance; }
};

/// Identity names, in report order.
namespace identity {
inline constexpr std::string_view avoid_row_sum = "avoid_row_sum";
inline constexpr std::string_view avoid_weighted_row_sum = "avoid_weighted_row_sum";
inline constexpr std::string_view two_target_split = "two_target_split";
inline constexpr std::string_view transit_decomposition = "transit_decomposition";
inline constexpr std::string_view two_target = "two_target_hitting_time";
inline constexpr std::string_view avoid_node_fundamental = "avoid_node_fundamental";
inline constexpr std::string_view avoid_node_time = "avoid_node_hitting_time";
inline constexpr std::string_view target_fundamental = "target_fundamental";
inline constexpr std::string_view target_fundamental_time = "target_fundamental_hitting_time";
inline constexpr std::string_view incremental_fundamental = "incremental_fundamental";
inline constexpr std::string_view normalized_absorption = "normalized_fundamental_absorption";
inline constexpr std::string_view row_sums = "absorption_row_sum";
inline constexpr std::string_view empty_avoid = "empty_avoid_reduction";
inline constexpr std::string_view conditioned = "conditioned_chain";
}  // namespace identity

struct IdentityOptions {
  /// Also solve the feasibility-reweighted chain per (t, o) pair. O(n^3) per
  /// pair, so off by default for sweeps.
  bool conditioned_chain = false;
};

namespace detail {

// 0 * inf resolves to 0 when the probability factor is below threshold.
inline double weighted_term(double probability, double value) {
  return is_feasible(probability) ? probability * value : 0.0;
}

// Classical hitting time of `target` on the chain reweighted by feasibility:
//   P~_ij = P_ij Q_j / Q_i on {i : Q_i >= threshold} u {target}.
inline std::vector<double> conditioned_chain_hitting_times(const Chain& c, const ChainPartition& p,
                                                           const Vector& q, NodeIndex /*target*/) {
  std::vector<NodeIndex> states;
  std::vector<double> feas;
  for (std::size_t k = 0; k < p.transient_count(); ++k) {
    if (!is_feasible(q(static_cast<Eigen::Index>(k)))) continue;
    states.push_back(p.transient()[k]);
    feas.push_back(q(static_cast<Eigen::Index>(k)));
  }
  std::vector<double> out(c.size(), kInfinity);
  if (states.empty()) return out;
  const auto n = static_cast<Eigen::Index>(states.size());
  Matrix a = Matrix::Identity(n, n);
  const Matrix& P = c.transition();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(states[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto col = static_cast<Eigen::Index>(states[static_cast<std::size_t>(j)]);
      a(i, j) -= P(row, col) * feas[static_cast<std::size_t>(j)] / feas[static_cast<std::size_t>(i)];
    }
  }
  Vector h = a.partialPivLu().solve(Vector::Ones(n));
  for (Eigen::Index i = 0; i < n; ++i) out[states[static_cast<std::size_t>(i)]] = h(i);
  return out;
}

}  // namespace detail

/// Checks every avoidance identity for target t, single avoid node o and each
/// start state in `sources` (all states except t and o when empty).
///
/// Identities whose terms are infinite because the conditioning event is
/// infeasible are counted as skipped, never evaluated with inf arithmetic.
inline IdentityReport verify_identities(FundamentalCache& cache, NodeIndex t, NodeIndex o,
                                        std::span<const NodeIndex> sources = {},
                                        const IdentityOptions& options = {}) {
  const Chain& c = cache.chain();
  if (t >= c.size() || o >= c.size() || t == o)
    throw ValidationError("identity check needs distinct target and avoid states");

  IdentityReport report;
  for (auto name : {identity::avoid_row_sum, identity::avoid_weighted_row_sum, identity::two_target_split,
                    identity::transit_decomposition, identity::two_target, identity::avoid_node_fundamental,
                    identity::avoid_node_time, identity::target_fundamental, identity::target_fundamental_time,
                    identity::incremental_fundamental, identity::normalized_absorption, identity::row_sums,
                    identity::empty_avoid})
    report.check(name);
  if (options.conditioned_chain) report.check(identity::conditioned);

  std::vector<NodeIndex> starts(sources.begin(), sources.end());
  if (starts.empty())
    for (NodeIndex i = 0; i < c.size(); ++i)
      if (i != t && i != o) starts.push_back(i);

  const FundamentalMatrix& ft = cache.get({t});
  const FundamentalMatrix& fo = cache.get({o});
  const FundamentalMatrix& fto = cache.get({t, o});
  const ChainPartition& pt = ft.partition();
  const ChainPartition& po = fo.partition();
  const ChainPartition& pto = fto.partition();
  const Matrix& Ft = ft.values();
  const Matrix& Fo = fo.values();

  const AvoidanceFundamental avoid_t = avoidance_fundamental(fto, t);
  const Vector& q_t = avoid_t.feasibility;       // Q^{t, not o}
  const Vector q_o = target_feasibility(fto, o);  // Q^{o, not t}
  const Vector h_to = hitting_time(fto);           // H^{t,o}
  const Vector h_t = hitting_time(ft);             // H^{t}
  const Vector u_t = hitting_cost(ft, c);          // U^{t}
  const Vector r_t = conditioned_step_costs(fto, t);
  const AbsorptionMatrix q_all = absorption_probabilities(fto);

  // incremental F^{t,o} from F^{t}, compared on the whole matrix
  {
    const std::vector<NodeIndex> extra{o};
    const FundamentalMatrix inc = incremental_fundamental(ft, extra);
    auto& chk = report.check(identity::incremental_fundamental);
    for (Eigen::Index i = 0; i < inc.values().rows(); ++i)
      for (Eigen::Index m = 0; m < inc.values().cols(); ++m)
        chk.record(inc.values()(i, m), fto.values()(i, m));
  }
  const Vector q_o_normalized = absorption_from_fundamental(ft, o);  // over pt's transient states

  // empty avoid set: conditioning on nothing must reproduce F^{t}, H^{t}, U^{t}
  const AvoidanceFundamental avoid_none = avoidance_fundamental(ft, t);

  const auto tt = *po.transient_position(t);
  const auto oo = *pt.transient_position(o);
  const double Fo_tt = Fo(tt, tt);
  const double Ft_oo = Ft(oo, oo);
  const double h_t_of_o = h_t(oo);

  std::vector<double> conditioned_h;
  if (options.conditioned_chain)
    conditioned_h = detail::conditioned_chain_hitting_times(c, pto, q_t, t);

  for (NodeIndex s : starts) {
    if (s == t || s == o) throw ValidationError("source must differ from target and avoid node");
    const auto S = *pto.transient_position(s);
    const auto St = *pt.transient_position(s);
    const auto So = *po.transient_position(s);
    const bool feasible_t = is_feasible(q_t(S));
    const bool feasible_o = is_feasible(q_o(S));

    const AvoidanceResult h_avoid_t = avoidance_hitting_time(fto, t, s);
    const AvoidanceResult u_avoid_t = avoidance_hitting_cost(fto, t, s);
    const AvoidanceResult h_avoid_o = avoidance_hitting_time(fto, o, s);

    // Q rows sum to one
    report.check(identity::row_sums).record(q_all.values.row(S).sum(), 1.0);
    report.check(identity::row_sums).record(q_t(S) + q_o(S), 1.0);

    // Q_s^{o, not t} = F^{t}_so / F^{t}_oo
    report.check(identity::normalized_absorption).record(q_o_normalized(St), q_o(S));

    // H_s^{t,o} = H_s^{t} - Q_s^{o, not t} H_o^{t}
    report.check(identity::two_target).record(h_to(S), h_t(St) - q_o(S) * h_t_of_o);

    // H_s^{t,o} = Q^{t,not o} H^{t,not o} + Q^{o,not t} H^{o,not t}
    if (feasible_t && feasible_o)
      report.check(identity::two_target_split)
          .record(h_to(S), q_t(S) * h_avoid_t.value + q_o(S) * h_avoid_o.value);
    else
      report.check(identity::two_target_split).skip();

    // H_s^{t} = Q^{t,not o} H^{t,not o} + Q^{o,not t} H^{t via o}
    {
      const double transit =
          h_avoid_o.feasible() ? h_avoid_o.value + h_t_of_o : kInfinity;
      report.check(identity::transit_decomposition)
          .record(h_t(St), detail::weighted_term(q_t(S), h_avoid_t.value) +
                               detail::weighted_term(q_o(S), transit));
    }

    {
      auto& chk = report.check(identity::empty_avoid);
      for (Eigen::Index m = 0; m < Ft.cols(); ++m) chk.record(avoid_none.values(St, m), Ft(St, m));
      chk.record(avoidance_hitting_time(ft, t, s).value, h_t(St));
      chk.record(avoidance_hitting_cost(ft, t, s).value, u_t(St));
    }

    if (!feasible_t) {
      for (auto name : {identity::avoid_row_sum, identity::avoid_weighted_row_sum, identity::avoid_node_fundamental,
                        identity::avoid_node_time, identity::target_fundamental, identity::target_fundamental_time})
        report.check(name).skip();
      if (options.conditioned_chain) report.check(identity::conditioned).skip();
      continue;
    }

    const auto avoid_row = avoid_t.values.row(S);
    report.check(identity::avoid_row_sum).record(h_avoid_t.value, avoid_row.sum());
    {
      double weighted = 0.0;
      for (Eigen::Index m = 0; m < avoid_row.size(); ++m) weighted += avoid_row(m) * r_t(m);
      report.check(identity::avoid_weighted_row_sum).record(u_avoid_t.value, weighted);
    }

    // via F^{o}
    //   F_sm^{t,not o} = F^o_mt (F^o_sm / F^o_st - F^o_tm / F^o_tt)
    {
      auto& chk = report.check(identity::avoid_node_fundamental);
      const double Fo_st = Fo(So, tt);
      double h_sum = 0.0;
      for (std::size_t k = 0; k < pto.transient_count(); ++k) {
        const NodeIndex m = pto.transient()[k];
        const auto Mo = *po.transient_position(m);
        const double v = Fo(Mo, tt) * (Fo(So, Mo) / Fo_st - Fo(tt, Mo) / Fo_tt);
        chk.record(avoid_row(static_cast<Eigen::Index>(k)), v);
        h_sum += v;
      }
      report.check(identity::avoid_node_time).record(h_avoid_t.value, h_sum);
    }

    // via F^{t}
    {
      auto& chk = report.check(identity::target_fundamental);
      const double Ft_so = Ft(St, oo);
      const double q_so = Ft_so / Ft_oo;
      const double denom = Ft_oo - Ft_so;
      for (std::size_t k = 0; k < pto.transient_count(); ++k) {
        const NodeIndex m = pto.transient()[k];
        const auto Mt = *pt.transient_position(m);
        const double v = (Ft_oo * Ft(St, Mt) - Ft_so * Ft(oo, Mt) - Ft(St, Mt) * Ft(Mt, oo) +
                          q_so * Ft(oo, Mt) * Ft(Mt, oo)) /
                         denom;
        chk.record(avoid_row(static_cast<Eigen::Index>(k)), v);
      }
      // closed form of the row sum; sums run over all of V \ {t}
      double cross_s = 0.0, cross_o = 0.0;
      for (Eigen::Index m = 0; m < Ft.cols(); ++m) {
        cross_s += Ft(St, m) * Ft(m, oo);
        cross_o += Ft(oo, m) * Ft(m, oo);
      }
      const double h = (Ft_oo * h_t(St) - Ft_so * h_t_of_o - cross_s + q_so * cross_o) / denom;
      report.check(identity::target_fundamental_time).record(h_avoid_t.value, h);
    }

    if (options.conditioned_chain)
      report.check(identity::conditioned).record(h_avoid_t.value, conditioned_h[s]);
  }
  return report;
}

/// Identity check for one query. The avoid set must hold exactly one node.
inline IdentityReport verify_identities(const Chain& c, const AvoidanceQuery& q,
                                        const IdentityOptions& options = {}) {
  q.validate(c.size());
  if (q.avoid.size() != 1)
    throw ValidationError("identity checks are defined for a single avoid node");
  FundamentalCache cache(c);
  const NodeIndex source[] = {q.source};
  return verify_identities(cache, q.target, q.avoid.front(), source, options);
}

}  // namespace pivotal
