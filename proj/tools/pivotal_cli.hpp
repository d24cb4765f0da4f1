#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pivotal/pivotal.hpp"

namespace pivotal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
  std::string command;
  std::string graph_path;
  std::string gen_spec;
  std::string format;  // csv | json; empty means by extension
  bool directed = false;
  std::string source, target, via;
  std::vector<std::string> avoid;
  std::vector<std::string> absorbing;
  std::vector<std::string> metrics;
  std::string output = "csv";
  std::string out_path;
  std::uint64_t mc_samples = 20'000;
  std::uint64_t seed = 42;
  std::uint64_t series_k = 200;
};

/// Identity residual limit and Monte Carlo acceptance band used by `verify`.
inline constexpr double kIdentityTolerance = 1e-8;
inline constexpr double kMonteCarloSigmas = 3.0;
inline constexpr double kMonteCarloRelative = 0.02;
inline constexpr double kSeriesSlack = 1e-6;
inline constexpr std::size_t kMaxIdentityPairs = 200;

/// Loads `--graph` (a file, or a generator spec when no such file exists)
/// or `--gen`.
inline Graph load_input(const RunConfig& cfg) {
  if (!cfg.gen_spec.empty() && !cfg.graph_path.empty())
    throw ValidationError("use either --graph or --gen, not both");
  if (!cfg.gen_spec.empty()) return generate(cfg.gen_spec);
  if (cfg.graph_path.empty()) throw ValidationError("no input graph: pass --graph or --gen");
  const std::filesystem::path path(cfg.graph_path);
  if (!std::filesystem::exists(path)) return generate(cfg.graph_path);
  GraphFormat fmt = path.extension() == ".json" ? GraphFormat::json : GraphFormat::edge_list_csv;
  if (cfg.format == "json") fmt = GraphFormat::json;
  if (cfg.format == "csv") fmt = GraphFormat::edge_list_csv;
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open graph file " + cfg.graph_path);
  return load_graph(in, fmt, cfg.directed);
}

inline NodeIndex require_label(const Graph& g, const std::string& label, std::string_view flag) {
  if (label.empty()) throw ValidationError(std::string(flag) + " is required");
  auto idx = g.find(label);
  if (!idx) throw ValidationError("unknown node '" + label + "' in " + std::string(flag));
  return *idx;
}

inline std::vector<NodeIndex> require_labels(const Graph& g, const std::vector<std::string>& labels,
                                             std::string_view flag) {
  std::vector<NodeIndex> out;
  for (const auto& l : labels) out.push_back(require_label(g, l, flag));
  return out;
}

template <class Report>
void emit(std::ostream& out, const std::string& fmt, const Report& r, const Graph& g) {
  if (fmt == "json")
    out << to_json(r).dump(2) << '\n';
  else if (fmt == "dot")
    write_dot(out, r, g);
  else
    write_csv(out, r);
}

inline int cmd_gen(const RunConfig& cfg, std::ostream& out) {
  const Graph g = load_input(cfg);
  if (cfg.output == "json")
    write_graph_json(out, g);
  else if (cfg.output == "dot")
    write_graph_dot(out, g);
  else
    write_graph_csv(out, g);
  return kExitOk;
}

inline int cmd_metrics(const RunConfig& cfg, std::ostream& out) {
  const Graph g = load_input(cfg);
  if (cfg.absorbing.empty()) throw ValidationError("--absorbing is required");
  const std::vector<NodeIndex> absorbing = require_labels(g, cfg.absorbing, "--absorbing");
  emit(out, cfg.output, metrics_report(build_chain(g), absorbing), g);
  return kExitOk;
}

inline int cmd_avoid(const RunConfig& cfg, std::ostream& out) {
  const Graph g = load_input(cfg);
  AvoidanceQuery q{require_label(g, cfg.source, "--source"),
                   require_label(g, cfg.target, "--target"),
                   require_labels(g, cfg.avoid, "--avoid")};
  std::optional<NodeIndex> via;
  if (!cfg.via.empty()) via = require_label(g, cfg.via, "--via");
  emit(out, cfg.output, avoid_report(build_chain(g), q, via), g);
  return kExitOk;
}

inline int cmd_pivotality(const RunConfig& cfg, std::ostream& out) {
  const Graph g = load_input(cfg);
  const NodeIndex s = require_label(g, cfg.source, "--source");
  const NodeIndex t = require_label(g, cfg.target, "--target");
  std::vector<Metric> metrics;
  for (const auto& name : cfg.metrics) {
    auto m = parse_metric(name);
    if (!m) throw ValidationError("unknown metric '" + name + "'");
    metrics.push_back(*m);
  }
  if (metrics.empty()) metrics.assign(kAllMetrics.begin(), kAllMetrics.end());
  const PivotalityReport r = rank(build_chain(g), g, s, t, metrics);
  if (cfg.output == "json")
    out << to_json(r, g).dump(2) << '\n';
  else if (cfg.output == "dot")
    write_dot(out, r, g);
  else
    write_csv(out, r, g);
  return kExitOk;
}

// --- verify ----------------------------------------------------------------

struct NamedGraph {
  std::string name;
  Graph graph;
};

/// example1, example3b and seeded weighted random graphs in both orientations.
inline std::vector<NamedGraph> default_corpus(std::uint64_t seed) {
  std::vector<NamedGraph> out{{"example1", example1()}, {"example3b", example3b()}};
  for (int directed = 1; directed >= 0; --directed)
    for (std::uint64_t i = 0; i < 10; ++i) {
      const std::uint64_t gs = detail::stream_seed(seed, i + (directed ? 0 : 100));
      const std::size_t n = 4 + static_cast<std::size_t>(gs % 9);
      const Graph g = with_random_weights(random_graph(n, 0.35, gs, directed != 0), gs);
      out.push_back({std::string(directed ? "random-directed-" : "random-undirected-") +
                         std::to_string(i),
                     g});
    }
  return out;
}

struct VerifyRow {
  std::string suite, graph, check;
  double value = 0.0;      // residual, |z| or error
  double threshold = 0.0;  // value must not exceed it
  bool pass = true;
  std::string note;
};

/// MC agreement: |estimate - exact| within max(3 SE, 2% of |exact|).
inline bool monte_carlo_agrees(double estimate, double se, double exact) {
  if (estimate == exact) return true;
  if (!std::isfinite(estimate) || !std::isfinite(exact)) return false;
  const double band = std::max(kMonteCarloSigmas * (std::isfinite(se) ? se : 0.0),
                               kMonteCarloRelative * std::abs(exact));
  return std::abs(estimate - exact) <= band;
}

inline double z_score(double estimate, double se, double exact) {
  if (estimate == exact) return 0.0;
  if (!(se > 0.0) || !std::isfinite(se)) return kInfinity;
  return (estimate - exact) / se;
}

inline void identity_suite(const NamedGraph& ng, std::uint64_t seed, std::vector<VerifyRow>& rows) {
  const Chain c = build_chain(ng.graph);
  const std::size_t n = c.size();
  std::vector<std::pair<NodeIndex, NodeIndex>> pairs;
  for (NodeIndex t = 0; t < n; ++t)
    for (NodeIndex o = 0; o < n; ++o)
      if (t != o) pairs.emplace_back(t, o);
  if (pairs.size() > kMaxIdentityPairs) {
    std::mt19937_64 rng(detail::stream_seed(seed, 7));
    std::shuffle(pairs.begin(), pairs.end(), rng);
    pairs.resize(kMaxIdentityPairs);
    std::sort(pairs.begin(), pairs.end());
  }
  FundamentalCache cache(c);
  IdentityReport total;
  std::size_t skipped_pairs = 0;
  for (auto [t, o] : pairs) {
    if (n < 3) break;
    try {
      total.merge(verify_identities(cache, t, o, {}, IdentityOptions{true}));
    } catch (const ValidationError&) {
      ++skipped_pairs;  // some state cannot reach {t} or {o}
    }
  }
  for (const auto& chk : total.checks) {
    VerifyRow r{"identity", ng.name, chk.name, chk.max_rel_residual, kIdentityTolerance, true, ""};
    r.pass = chk.max_rel_residual <= kIdentityTolerance;
    r.note = "evaluated=" + std::to_string(chk.evaluated) + " skipped=" + std::to_string(chk.skipped);
    rows.push_back(std::move(r));
  }
  if (skipped_pairs)
    rows.push_back({"identity", ng.name, "unreachable_pairs", static_cast<double>(skipped_pairs),
                    kInfinity, true, "pairs skipped"});
}

/// Queries checked against sampling and series: s = first node, t = last
/// node, with no avoid set, with the first avoid node giving feasibility
/// >= 0.1, and with the first infeasible avoid node.
inline std::vector<AvoidanceQuery> oracle_queries(const Chain& c) {
  const NodeIndex s = 0, t = c.size() - 1;
  std::vector<AvoidanceQuery> out{{s, t, {}}};
  std::optional<NodeIndex> feasible, infeasible;
  for (NodeIndex o = 1; o + 1 < c.size(); ++o) {
    const double q = avoidance_hitting_time(c, AvoidanceQuery{s, t, {o}}).feasibility;
    if (!feasible && q >= 0.1) feasible = o;
    if (!infeasible && !is_feasible(q)) infeasible = o;
  }
  if (feasible) out.push_back({s, t, {*feasible}});
  if (infeasible) out.push_back({s, t, {*infeasible}});
  return out;
}

inline std::string query_name(const Chain& c, const AvoidanceQuery& q) {
  std::string s = c.label(q.source) + "->" + c.label(q.target);
  if (!q.avoid.empty()) s += " avoid " + c.label(q.avoid.front());
  return s;
}

inline void monte_carlo_query(const std::string& graph, const Chain& c, const AvoidanceQuery& q,
                              const SamplerOptions& opt, std::vector<VerifyRow>& rows) {
  const std::string qn = query_name(c, q);
  const FundamentalMatrix f = fundamental_matrix(c, q.absorbing());
  const AvoidanceResult h = avoidance_hitting_time(f, q.target, q.source);
  const AvoidanceEstimates e = sample_avoidance(c, q, opt);

  auto add = [&](const std::string& what, const EstimateReport& est, double exact) {
    VerifyRow r{"monte-carlo", graph, qn + " " + what, 0.0, 0.0, true, ""};
    r.value = std::abs(z_score(est.estimate, est.standard_error, exact));
    r.threshold = kMonteCarloSigmas;
    r.pass = monte_carlo_agrees(est.estimate, est.standard_error, exact);
    r.note = "estimate=" + format_number(est.estimate) + " exact=" + format_number(exact) +
             " accepted=" + std::to_string(est.accepted);
    rows.push_back(std::move(r));
  };

  if (!h.feasible()) {
    VerifyRow r{"monte-carlo", graph, qn + " infeasible",
                static_cast<double>(e.feasibility.accepted), 0.0, true, ""};
    r.pass = e.feasibility.accepted == 0;
    r.note = "accepted " + std::to_string(e.feasibility.accepted) + " of " +
             std::to_string(e.feasibility.total);
    rows.push_back(std::move(r));
    return;
  }
  add("feasibility", e.feasibility, h.feasibility);
  add("H", e.hitting_time, h.value);
  add("U", e.hitting_cost, avoidance_hitting_cost(f, q.target, q.source).value);
  const AvoidanceFundamental af = avoidance_fundamental(f, q.target);
  for (NodeIndex m : f.partition().transient())
    add("visits(" + c.label(m) + ")", e.visits[m], af.at(q.source, m));
}

/// Sampler settings for one verify query: adaptive until `accepted` walks
/// are kept, capped at max(10 * accepted, 1e6) walks.
inline SamplerOptions verify_sampler(std::uint64_t accepted, std::uint64_t seed) {
  SamplerOptions opt;
  opt.seed = seed;
  opt.min_accepted = accepted;
  opt.max_samples = std::max<std::uint64_t>(accepted * 10, 1'000'000);
  return opt;
}

inline void monte_carlo_suite(const NamedGraph& ng, const RunConfig& cfg,
                              std::vector<VerifyRow>& rows) {
  const Chain c = build_chain(ng.graph);
  std::uint64_t stream = 0;
  for (const AvoidanceQuery& q : oracle_queries(c))
    monte_carlo_query(ng.name, c, q,
                      verify_sampler(cfg.mc_samples, detail::stream_seed(cfg.seed, stream++)), rows);
}

inline void series_query(const std::string& graph, const Chain& c, const AvoidanceQuery& q,
                         std::uint64_t K, std::vector<VerifyRow>& rows) {
  const std::string qn = query_name(c, q);
  const AvoidanceResult h = avoidance_hitting_time(c, q);
  const SeriesResult sr = series_metrics(c, q, K);
  if (!sr.converged) {
    rows.push_back({"series", graph, qn, sr.envelope, kSeriesEnvelopeThreshold, true,
                    "unconverged, not compared"});
    return;
  }
  const double err_q = std::abs(sr.feasibility - h.feasibility);
  const double tol_q = sr.feasibility_tail + kSeriesSlack;
  rows.push_back({"series", graph, qn + " feasibility", err_q, tol_q, err_q <= tol_q, ""});
  if (!h.feasible()) return;
  const double err_h = std::abs(sr.hitting_time - h.value);
  const double tol_h = sr.hitting_time_tail + kSeriesSlack;
  rows.push_back({"series", graph, qn + " H", err_h, tol_h, err_h <= tol_h, ""});
}

inline void series_suite(const NamedGraph& ng, const RunConfig& cfg, std::vector<VerifyRow>& rows) {
  const Chain c = build_chain(ng.graph);
  for (const AvoidanceQuery& q : oracle_queries(c)) series_query(ng.name, c, q, cfg.series_k, rows);
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  std::vector<NamedGraph> corpus;
  if (cfg.graph_path.empty() && cfg.gen_spec.empty())
    corpus = default_corpus(cfg.seed);
  else
    corpus.push_back({cfg.gen_spec.empty() ? cfg.graph_path : cfg.gen_spec, load_input(cfg)});

  std::vector<VerifyRow> rows;
  for (const auto& ng : corpus) {
    identity_suite(ng, cfg.seed, rows);
    monte_carlo_suite(ng, cfg, rows);
    series_suite(ng, cfg, rows);
  }
  const bool ok = std::all_of(rows.begin(), rows.end(), [](const VerifyRow& r) { return r.pass; });

  if (cfg.output == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows)
      arr.push_back({{"suite", r.suite},
                     {"graph", r.graph},
                     {"check", r.check},
                     {"value", json_number(r.value)},
                     {"threshold", json_number(r.threshold)},
                     {"pass", r.pass},
                     {"note", r.note}});
    out << nlohmann::json{{"pass", ok}, {"seed", cfg.seed}, {"rng", std::string(kRngName)},
                          {"checks", std::move(arr)}}
               .dump(2)
        << '\n';
  } else {
    out << "suite,graph,check,value,threshold,result,note\n";
    for (const auto& r : rows)
      out << r.suite << ',' << detail::csv_field(r.graph) << ',' << detail::csv_field(r.check) << ','
          << format_number(r.value) << ',' << format_number(r.threshold) << ','
          << (r.pass ? "PASS" : "FAIL") << ',' << detail::csv_field(r.note) << '\n';
    out << "# rng " << kRngName << " seed " << cfg.seed << "; "
        << (ok ? "all checks passed" : "some checks FAILED") << '\n';
  }
  return ok ? kExitOk : kExitVerifyFailed;
}

// --- entry point -----------------------------------------------------------

inline void add_graph_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--graph", cfg.graph_path, "graph file (csv edge list or json) or generator spec");
  sub->add_option("--gen", cfg.gen_spec,
                  "generator: example1 | example2:L2,N2 | example3b | fat-tree:h | "
                  "random:n,p,seed[,directed|undirected]");
  sub->add_option("--format", cfg.format, "input format")->check(CLI::IsMember({"csv", "json"}));
  sub->add_flag("--directed", cfg.directed, "treat csv edges as directed");
  sub->add_option("--output", cfg.output, "output format")
      ->check(CLI::IsMember({"csv", "json", "dot"}));
  sub->add_option("--out", cfg.out_path, "write output to this file");
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Avoidance hitting times and node pivotality on random walks"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "emit a generated graph");
  add_graph_options(gen, cfg);

  auto* metrics = app.add_subcommand("metrics", "hitting times, costs and absorption");
  add_graph_options(metrics, cfg);
  metrics->add_option("--absorbing", cfg.absorbing, "absorbing node labels")->delimiter(',');

  auto* avoid = app.add_subcommand("avoid", "avoidance and transit hitting times");
  add_graph_options(avoid, cfg);
  avoid->add_option("--source", cfg.source);
  avoid->add_option("--target", cfg.target);
  avoid->add_option("--avoid", cfg.avoid)->delimiter(',');
  avoid->add_option("--via", cfg.via);

  auto* piv = app.add_subcommand("pivotality", "rank nodes by pivotality");
  add_graph_options(piv, cfg);
  piv->add_option("--source", cfg.source);
  piv->add_option("--target", cfg.target);
  piv->add_option("--metrics", cfg.metrics, "ath,ch,shp,mf")->delimiter(',');

  auto* verify = app.add_subcommand("verify", "identity, sampling and series checks");
  add_graph_options(verify, cfg);
  verify->add_option("--mc-samples", cfg.mc_samples, "accepted walks per query");
  verify->add_option("--seed", cfg.seed);
  verify->add_option("--series-k", cfg.series_k, "series truncation")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  std::ofstream file;
  std::ostream* sink = &out;
  std::ostringstream buffer;
  if (!cfg.out_path.empty()) sink = &buffer;

  int code = kExitOk;
  try {
    if (cfg.command == "gen") code = cmd_gen(cfg, *sink);
    else if (cfg.command == "metrics") code = cmd_metrics(cfg, *sink);
    else if (cfg.command == "avoid") code = cmd_avoid(cfg, *sink);
    else if (cfg.command == "pivotality") code = cmd_pivotality(cfg, *sink);
    else code = cmd_verify(cfg, *sink);
  } catch (const ParseError& e) {
    err << "error: line " << e.line() << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  if (!cfg.out_path.empty()) {
    file.open(cfg.out_path, std::ios::binary);
    if (!file) {
      err << "error: cannot write " << cfg.out_path << '\n';
      return kExitUsage;
    }
    file << buffer.str();
  }
  return code;
}

}  // namespace pivotal::cli
