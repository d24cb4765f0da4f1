#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pivotal/avoidance_metrics.hpp"
#include "pivotal/format.hpp"
#include "pivotal/graph.hpp"
#include "pivotal/pivotality.hpp"

namespace pivotal {

enum class OutputFormat { csv, json, dot };

inline constexpr const char* kEndpointFill = "#C0C0C0";

/// Classical metrics for one absorbing set, one row per transient state.
struct MetricsReport {
  std::vector<std::string> absorbing;  // labels
  std::vector<std::string> nodes;      // transient labels, ascending index
  std::vector<double> hitting_time;
  std::vector<double> hitting_cost;
  std::vector<std::vector<double>> absorption;  // [node][absorbing]
  double condition_estimate = 1.0;
};

inline MetricsReport metrics_report(const Chain& c, std::span<const NodeIndex> absorbing) {
  const FundamentalMatrix f = fundamental_matrix(c, absorbing);
  const ChainPartition& p = f.partition();
  const Vector h = hitting_time(f);
  const Vector u = hitting_cost(f, c);
  const AbsorptionMatrix q = absorption_probabilities(f);
  MetricsReport r;
  r.condition_estimate = f.condition_estimate();
  for (NodeIndex a : p.absorbing()) r.absorbing.push_back(c.label(a));
  for (std::size_t k = 0; k < p.transient_count(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    r.nodes.push_back(c.label(p.transient()[k]));
    r.hitting_time.push_back(h(i));
    r.hitting_cost.push_back(u(i));
    std::vector<double> row;
    for (Eigen::Index a = 0; a < q.values.cols(); ++a) row.push_back(q.values(i, a));
    r.absorption.push_back(std::move(row));
  }
  return r;
}

/// Avoidance quantities for one query, optionally with a transit leg.
struct AvoidReport {
  std::string source, target;
  std::vector<std::string> avoid;
  double feasibility = 0.0;
  double hitting_time = kInfinity;
  double hitting_cost = kInfinity;
  std::optional<std::string> via;
  double transit_feasibility = 0.0;
  double transit_hitting_time = kInfinity;
  double condition_estimate = 1.0;
};

inline AvoidReport avoid_report(const Chain& c, const AvoidanceQuery& q,
                                std::optional<NodeIndex> via = std::nullopt) {
  q.validate(c.size());
  FundamentalCache cache(c);
  AvoidReport r;
  r.source = c.label(q.source);
  r.target = c.label(q.target);
  for (NodeIndex o : q.avoid) r.avoid.push_back(c.label(o));
  const AvoidanceResult h = avoidance_hitting_time(cache, q);
  const AvoidanceResult u = avoidance_hitting_cost(cache, q);
  r.feasibility = h.feasibility;
  r.hitting_time = h.value;
  r.hitting_cost = u.value;
  if (via) {
    const AvoidanceResult t = transit_hitting_time(cache, q.source, q.target, *via);
    r.via = c.label(*via);
    r.transit_feasibility = t.feasibility;
    r.transit_hitting_time = t.value;
  }
  r.condition_estimate = cache.max_condition_estimate();
  return r;
}

/// Set when a solve behind the report had condition estimate above 1e12.
inline std::optional<std::string> condition_warning(double condition_estimate) {
  if (condition_estimate <= kConditionWarning) return std::nullopt;
  return "ill-conditioned solve (condition estimate " + format_number(condition_estimate) + ")";
}

namespace detail {

inline void csv_warning(std::ostream& out, double condition_estimate) {
  if (auto w = condition_warning(condition_estimate)) out << "# warning: " << *w << '\n';
}

inline void dot_warning(std::ostream& out, double condition_estimate) {
  if (auto w = condition_warning(condition_estimate)) out << "  // warning: " << *w << '\n';
}

inline void json_condition(nlohmann::json& j, double condition_estimate) {
  j["condition_estimate"] = json_number(condition_estimate);
  if (auto w = condition_warning(condition_estimate)) j["warning"] = *w;
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string dot_label(const std::vector<std::string>& lines) {
  std::string text;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) text += "\\n";
    for (char ch : lines[i]) {
      if (ch == '"' || ch == '\\') text += '\\';
      text += ch;
    }
  }
  return "\"" + text + "\"";
}

inline void write_dot_edges(std::ostream& out, const Graph& g) {
  const char* arrow = g.directed() ? " -> " : " -- ";
  for (const Edge& e : g.declared_edges())
    out << "  " << dot_id(g.label(e.src)) << arrow << dot_id(g.label(e.dst)) << ";\n";
}

}  // namespace detail

// --- metrics -------------------------------------------------------------

inline void write_csv(std::ostream& out, const MetricsReport& r) {
  detail::csv_warning(out, r.condition_estimate);
  out << "node,H,U";
  for (const auto& a : r.absorbing) out << ',' << detail::csv_field("Q_" + a);
  out << '\n';
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    out << detail::csv_field(r.nodes[i]) << ',' << format_number(r.hitting_time[i]) << ','
        << format_number(r.hitting_cost[i]);
    for (double q : r.absorption[i]) out << ',' << format_number(q);
    out << '\n';
  }
}

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    nlohmann::json q = nlohmann::json::object();
    for (std::size_t a = 0; a < r.absorbing.size(); ++a)
      q[r.absorbing[a]] = json_number(r.absorption[i][a]);
    rows.push_back({{"node", r.nodes[i]},
                    {"H", json_number(r.hitting_time[i])},
                    {"U", json_number(r.hitting_cost[i])},
                    {"Q", std::move(q)}});
  }
  nlohmann::json j = {{"absorbing", r.absorbing}, {"nodes", std::move(rows)}};
  detail::json_condition(j, r.condition_estimate);
  return j;
}

inline void write_dot(std::ostream& out, const MetricsReport& r, const Graph& g) {
  out << (g.directed() ? "digraph" : "graph") << " metrics {\n";
  detail::dot_warning(out, r.condition_estimate);
  for (const auto& a : r.absorbing)
    out << "  " << dot_id(a) << " [shape=doublecircle, style=filled, fillcolor=\""
        << kEndpointFill << "\"];\n";
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    std::vector<std::string> lines{r.nodes[i], "H=" + format_number(r.hitting_time[i]),
                                   "U=" + format_number(r.hitting_cost[i])};
    for (std::size_t a = 0; a < r.absorbing.size(); ++a)
      lines.push_back("Q_" + r.absorbing[a] + "=" + format_number(r.absorption[i][a]));
    out << "  " << dot_id(r.nodes[i]) << " [label=" << detail::dot_label(lines) << "];\n";
  }
  detail::write_dot_edges(out, g);
  out << "}\n";
}

// --- avoidance -----------------------------------------------------------

inline void write_csv(std::ostream& out, const AvoidReport& r) {
  detail::csv_warning(out, r.condition_estimate);
  out << "source,target,avoid,feasibility,H,U";
  if (r.via) out << ",via,transit_feasibility,transit_H";
  out << '\n';
  out << detail::csv_field(r.source) << ',' << detail::csv_field(r.target) << ','
      << detail::csv_field(detail::join(r.avoid, ';')) << ',' << format_number(r.feasibility)
      << ',' << format_number(r.hitting_time) << ',' << format_number(r.hitting_cost);
  if (r.via)
    out << ',' << detail::csv_field(*r.via) << ',' << format_number(r.transit_feasibility) << ','
        << format_number(r.transit_hitting_time);
  out << '\n';
}

inline nlohmann::json to_json(const AvoidReport& r) {
  nlohmann::json j = {{"source", r.source},
                      {"target", r.target},
                      {"avoid", r.avoid},
                      {"feasibility", json_number(r.feasibility)},
                      {"H", json_number(r.hitting_time)},
                      {"U", json_number(r.hitting_cost)}};
  if (r.via)
    j["transit"] = {{"via", *r.via},
                    {"feasibility", json_number(r.transit_feasibility)},
                    {"H", json_number(r.transit_hitting_time)}};
  detail::json_condition(j, r.condition_estimate);
  return j;
}

inline void write_dot(std::ostream& out, const AvoidReport& r, const Graph& g) {
  out << (g.directed() ? "digraph" : "graph") << " avoidance {\n";
  detail::dot_warning(out, r.condition_estimate);
  std::vector<std::string> src{r.source, "Q=" + format_number(r.feasibility),
                               "H=" + format_number(r.hitting_time),
                               "U=" + format_number(r.hitting_cost)};
  if (r.via) {
    src.push_back("transit_Q=" + format_number(r.transit_feasibility));
    src.push_back("transit_H=" + format_number(r.transit_hitting_time));
  }
  out << "  " << dot_id(r.source) << " [shape=box, style=filled, fillcolor=\"" << kEndpointFill
      << "\", label=" << detail::dot_label(src) << "];\n";
  out << "  " << dot_id(r.target) << " [shape=doublecircle, style=filled, fillcolor=\""
      << kEndpointFill << "\"];\n";
  for (const auto& o : r.avoid)
    out << "  " << dot_id(o) << " [style=filled, fillcolor=\"#000000\", fontcolor=\"#FFFFFF\"];\n";
  if (r.via) out << "  " << dot_id(*r.via) << " [shape=diamond];\n";
  detail::write_dot_edges(out, g);
  out << "}\n";
}

// --- pivotality ----------------------------------------------------------

inline void write_csv(std::ostream& out, const PivotalityReport& r, const Graph& g) {
  detail::csv_warning(out, r.condition_estimate);
  out << "rank,node,feasibility";
  for (Metric m : r.metrics) out << ',' << metric_name(m);
  out << ",color\n";
  for (std::size_t pos = 0; pos < r.ranking.size(); ++pos) {
    const NodeIndex k = r.ranking[pos];
    const std::size_t slot = *r.candidate_slot(k);
    out << pos + 1 << ',' << detail::csv_field(g.label(k)) << ','
        << format_number(r.feasibility[slot]);
    for (std::size_t m = 0; m < r.metrics.size(); ++m) out << ',' << format_number(r.scores[m][slot]);
    out << ',' << r.colors[slot].hex() << '\n';
  }
}

inline nlohmann::json to_json(const PivotalityReport& r, const Graph& g) {
  nlohmann::json rows = nlohmann::json::array();
  nlohmann::json ranking = nlohmann::json::array();
  for (std::size_t pos = 0; pos < r.ranking.size(); ++pos) {
    const NodeIndex k = r.ranking[pos];
    const std::size_t slot = *r.candidate_slot(k);
    nlohmann::json scores = nlohmann::json::object();
    for (std::size_t m = 0; m < r.metrics.size(); ++m)
      scores[std::string(metric_name(r.metrics[m]))] = json_number(r.scores[m][slot]);
    rows.push_back({{"rank", pos + 1},
                    {"node", g.label(k)},
                    {"feasibility", json_number(r.feasibility[slot])},
                    {"scores", std::move(scores)},
                    {"color", r.colors[slot].hex()}});
    ranking.push_back(g.label(k));
  }
  nlohmann::json j = {{"source", g.label(r.source)},
                      {"target", g.label(r.target)},
                      {"primary", std::string(metric_name(r.primary))},
                      {"hitting_time", json_number(r.hitting_time)},
                      {"ranking", std::move(ranking)},
                      {"nodes", std::move(rows)}};
  detail::json_condition(j, r.condition_estimate);
  return j;
}

/// Every node gets style=filled and a fillcolor; scored nodes follow the
/// pivotality colors, source (box) and target (doublecircle) are gray.
inline void write_dot(std::ostream& out, const PivotalityReport& r, const Graph& g) {
  out << (g.directed() ? "digraph" : "graph") << " pivotality {\n";
  detail::dot_warning(out, r.condition_estimate);
  for (NodeIndex i = 0; i < g.node_count(); ++i) {
    out << "  " << dot_id(g.label(i)) << " [";
    if (i == r.source || i == r.target) {
      out << "shape=" << (i == r.source ? "box" : "doublecircle") << ", style=filled, fillcolor=\""
          << kEndpointFill << "\", label="
          << detail::dot_label({g.label(i), i == r.source ? "source" : "target"});
    } else {
      const std::size_t slot = *r.candidate_slot(i);
      const Rgb color = r.colors[slot];
      std::vector<std::string> lines{g.label(i)};
      for (std::size_t m = 0; m < r.metrics.size(); ++m)
        lines.push_back(std::string(metric_name(r.metrics[m])) + "=" +
                        format_number(r.scores[m][slot]));
      lines.push_back("Q=" + format_number(r.feasibility[slot]));
      out << "style=filled, fillcolor=\"" << color.hex() << "\"";
      if (color == kBlack) out << ", fontcolor=\"#FFFFFF\"";
      out << ", label=" << detail::dot_label(lines);
    }
    out << "];\n";
  }
  detail::write_dot_edges(out, g);
  out << "}\n";
}

}  // namespace pivotal
