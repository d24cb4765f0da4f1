#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pivotal/avoidance_metrics.hpp"
#include "pivotal/max_flow.hpp"
#include "pivotal/shortest_path.hpp"

namespace pivotal {

enum class Metric { ath, ch, shp, mf };

inline constexpr std::array<Metric, 4> kAllMetrics{Metric::ath, Metric::ch, Metric::shp,
                                                   Metric::mf};

inline std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::ath: return "ATH";
    case Metric::ch: return "CH";
    case Metric::shp: return "SHP";
    case Metric::mf: return "MF";
  }
  return "?";
}

inline std::optional<Metric> parse_metric(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ath") return Metric::ath;
  if (lower == "ch") return Metric::ch;
  if (lower == "shp") return Metric::shp;
  if (lower == "mf") return Metric::mf;
  return std::nullopt;
}

namespace detail {

inline void check_triple(std::size_t n, NodeIndex s, NodeIndex t, NodeIndex k) {
  if (s >= n || t >= n || k >= n) throw ValidationError("node index out of range");
  if (s == t || s == k || t == k) throw ValidationError("source, target and node must be distinct");
}

}  // namespace detail

/// e_ATH(k) = H_s^t - (H_s^{k, not t} + H_k^t); -inf when k cannot be reached
/// from s before t.
inline double ath(const Chain& c, NodeIndex s, NodeIndex t, NodeIndex k) {
  detail::check_triple(c.size(), s, t, k);
  FundamentalCache cache(c);
  AvoidanceResult transit = transit_hitting_time(cache, s, t, k);
  if (!transit.feasible()) return -kInfinity;
  return hitting_time(cache, s, t) - transit.value;
}

/// e_CH(k) = H_s^t - (H_s^k + H_k^t).
inline double ch(const Chain& c, NodeIndex s, NodeIndex t, NodeIndex k) {
  detail::check_triple(c.size(), s, t, k);
  FundamentalCache cache(c);
  return hitting_time(cache, s, t) - (hitting_time(cache, s, k) + hitting_time(cache, k, t));
}

/// e_SHP(k) = L_s^t - (L_s^k + L_k^t) over edge costs.
inline double shp(const Graph& g, NodeIndex s, NodeIndex t, NodeIndex k) {
  detail::check_triple(g.node_count(), s, t, k);
  auto from_s = shortest_path_lengths(g, s);
  if (std::isinf(from_s[t])) throw ValidationError("target unreachable from source");
  auto to_t = shortest_path_lengths(g, t, /*reverse=*/true);
  return from_s[t] - (from_s[k] + to_t[k]);
}

/// e_MF(k) = (maxflow(s,t) - maxflow(s,t; G without k)) / maxflow(s,t).
inline double mf(const Graph& g, NodeIndex s, NodeIndex t, NodeIndex k) {
  detail::check_triple(g.node_count(), s, t, k);
  const double total = max_flow(g, s, t);
  if (!(total > 0.0)) throw ValidationError("maximum flow from source to target is zero");
  return std::clamp((total - max_flow(g, s, t, k)) / total, 0.0, 1.0);
}

/// ATH for every k from a single factorization of I - P_TT for {t}.
///
/// With F = F^{t}, reaching k before t has probability F_sk / F_kk and
///   H_s^{k, not t} = (F^2)_sk / F_sk - (F^2)_kk / F_kk,
/// the avoid-node form of the avoidance fundamental matrix summed over m.
struct AthSweep {
  double hitting_time = 0.0;        // H_s^t
  std::vector<double> ath;          // per state; NaN at s and t
  std::vector<double> feasibility;  // Q_s^{k, not t}
  std::vector<double> avoid_time;   // H_s^{k, not t}
};

inline AthSweep ath_sweep(const FundamentalMatrix& ft, NodeIndex s) {
  const ChainPartition& p = ft.partition();
  if (p.absorbing_count() != 1) throw ValidationError("ATH sweep needs a single target");
  const NodeIndex t = p.absorbing().front();
  const Eigen::Index S = p.require_transient(s);
  const Matrix& F = ft.values();
  const auto n = F.rows();

  const Vector h = hitting_time(ft);
  const Eigen::RowVectorXd f2_row = F.row(S) * F;
  Vector f2_diag(n);
  for (Eigen::Index k = 0; k < n; ++k) f2_diag(k) = F.row(k).dot(F.col(k));

  const std::size_t total = p.chain().size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  AthSweep out{h(S), std::vector<double>(total, nan), std::vector<double>(total, nan),
               std::vector<double>(total, nan)};
  for (Eigen::Index K = 0; K < n; ++K) {
    const NodeIndex k = p.transient()[static_cast<std::size_t>(K)];
    if (k == s) continue;
    const double q = F(S, K) / F(K, K);
    out.feasibility[k] = std::clamp(q, 0.0, 1.0);
    if (!is_feasible(q)) {
      out.avoid_time[k] = kInfinity;
      out.ath[k] = -kInfinity;
      continue;
    }
    out.avoid_time[k] = f2_row(K) / F(S, K) - f2_diag(K) / F(K, K);
    out.ath[k] = h(S) - (out.avoid_time[k] + h(K));
  }
  (void)t;
  return out;
}

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;

  std::string hex() const {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02X%02X%02X", r, g, b);
    return buf;
  }
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kBlack{0, 0, 0};
inline constexpr Rgb kRed{255, 0, 0};

/// Colors for one score per node: -inf is black; finite scores are min-max
/// normalized to u in [0,1] and mapped white (u=0) to red (u=1). All-equal
/// finite scores map to red.
inline std::vector<Rgb> pivotality_colors(std::span<const double> scores) {
  double lo = kInfinity, hi = -kInfinity;
  for (double v : scores)
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  std::vector<Rgb> out;
  out.reserve(scores.size());
  for (double v : scores) {
    if (!std::isfinite(v)) {
      out.push_back(kBlack);
      continue;
    }
    const double u = hi > lo ? (v - lo) / (hi - lo) : 1.0;
    const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - u)));
    out.push_back(Rgb{255, fade, fade});
  }
  return out;
}

/// Scores for every node except s and t, ranking and colors.
struct PivotalityReport {
  NodeIndex source = 0;
  NodeIndex target = 0;
  Metric primary = Metric::ath;
  std::vector<Metric> metrics;
  std::vector<NodeIndex> candidates;        // V \ {s, t}, ascending
  std::vector<std::vector<double>> scores;  // [metric slot][candidate slot]
  std::vector<double> feasibility;          // Q_s^{k, not t} per candidate
  std::vector<NodeIndex> ranking;           // candidates, most pivotal first
  std::vector<Rgb> colors;                  // per candidate, from the primary metric
  double hitting_time = 0.0;                // H_s^t
  double condition_estimate = 1.0;          // worst over the solves used

  std::optional<std::size_t> metric_slot(Metric m) const {
    auto it = std::find(metrics.begin(), metrics.end(), m);
    if (it == metrics.end()) return std::nullopt;
    return static_cast<std::size_t>(it - metrics.begin());
  }

  std::optional<std::size_t> candidate_slot(NodeIndex k) const {
    auto it = std::lower_bound(candidates.begin(), candidates.end(), k);
    if (it == candidates.end() || *it != k) return std::nullopt;
    return static_cast<std::size_t>(it - candidates.begin());
  }

  double score(Metric m, NodeIndex k) const {
    auto ms = metric_slot(m);
    auto ks = candidate_slot(k);
    if (!ms || !ks) throw ValidationError("metric or node not in report");
    return scores[*ms][*ks];
  }

  Rgb color(NodeIndex k) const {
    auto ks = candidate_slot(k);
    if (!ks) throw ValidationError("node not in report");
    return colors[*ks];
  }
};

namespace detail {

// Scores closer than 1e-9 rank as ties, so solver noise never reorders them.
inline double ranking_key(double v) {
  if (!std::isfinite(v)) return v;
  return std::round(v * 1e9);
}

}  // namespace detail

/// Orders candidate slots by descending score (-inf last); ties by label.
inline std::vector<NodeIndex> rank_by_score(const std::vector<NodeIndex>& candidates,
                                            std::span<const double> scores,
                                            const std::vector<std::string>& labels) {
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ka = detail::ranking_key(scores[a]);
    const double kb = detail::ranking_key(scores[b]);
    if (ka != kb) return ka > kb;
    return labels[candidates[a]] < labels[candidates[b]];
  });
  std::vector<NodeIndex> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back(candidates[i]);
  return out;
}

/// Scores every k outside {s, t} with the requested metrics. ATH uses the
/// shared-factorization sweep; `primary` (default: ATH when requested, else
/// the first metric) drives ranking and colors.
inline PivotalityReport rank(const Chain& c, const Graph& g, NodeIndex s, NodeIndex t,
                             std::span<const Metric> metrics = kAllMetrics,
                             std::optional<Metric> primary = std::nullopt) {
  const std::size_t n = c.size();
  if (g.node_count() != n) throw ValidationError("graph and chain sizes differ");
  if (s >= n || t >= n) throw ValidationError("source or target out of range");
  if (s == t) throw ValidationError("source and target must differ");
  if (metrics.empty()) throw ValidationError("no pivotality metric requested");

  PivotalityReport report;
  report.source = s;
  report.target = t;
  for (Metric m : metrics)
    if (std::find(report.metrics.begin(), report.metrics.end(), m) == report.metrics.end())
      report.metrics.push_back(m);
  if (primary) {
    if (!report.metric_slot(*primary)) report.metrics.push_back(*primary);
    report.primary = *primary;
  } else {
    report.primary = report.metric_slot(Metric::ath) ? Metric::ath : report.metrics.front();
  }
  for (NodeIndex k = 0; k < n; ++k)
    if (k != s && k != t) report.candidates.push_back(k);

  FundamentalCache cache(c);
  const FundamentalMatrix& ft = cache.get({t});
  const AthSweep sweep = ath_sweep(ft, s);
  report.hitting_time = sweep.hitting_time;
  for (NodeIndex k : report.candidates) report.feasibility.push_back(sweep.feasibility[k]);

  for (Metric m : report.metrics) {
    std::vector<double> col;
    col.reserve(report.candidates.size());
    switch (m) {
      case Metric::ath:
        for (NodeIndex k : report.candidates) col.push_back(sweep.ath[k]);
        break;
      case Metric::ch: {
        const Vector h_t = hitting_time(ft);
        for (NodeIndex k : report.candidates) {
          const double h_sk = hitting_time(cache, s, k);
          col.push_back(sweep.hitting_time - (h_sk + h_t(*ft.partition().transient_position(k))));
        }
        break;
      }
      case Metric::shp: {
        auto from_s = shortest_path_lengths(g, s);
        if (std::isinf(from_s[t])) throw ValidationError("target unreachable from source");
        auto to_t = shortest_path_lengths(g, t, true);
        for (NodeIndex k : report.candidates) col.push_back(from_s[t] - (from_s[k] + to_t[k]));
        break;
      }
      case Metric::mf: {
        const double total = max_flow(g, s, t);
        if (!(total > 0.0)) throw ValidationError("maximum flow from source to target is zero");
        for (NodeIndex k : report.candidates)
          col.push_back(std::clamp((total - max_flow(g, s, t, k)) / total, 0.0, 1.0));
        break;
      }
    }
    report.scores.push_back(std::move(col));
  }

  report.condition_estimate = cache.max_condition_estimate();
  const auto& primary_scores = report.scores[*report.metric_slot(report.primary)];
  report.ranking = rank_by_score(report.candidates, primary_scores, c.labels());
  report.colors = pivotality_colors(primary_scores);
  return report;
}

inline PivotalityReport rank(const Graph& g, NodeIndex s, NodeIndex t,
                             std::span<const Metric> metrics = kAllMetrics,
                             std::optional<Metric> primary = std::nullopt) {
  return rank(build_chain(g), g, s, t, metrics, primary);
}

}  // namespace pivotal
