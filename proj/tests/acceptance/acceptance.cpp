// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
// if any criterion fails.

#include <array>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <sys/wait.h>

#include "pivotal/pivotal.hpp"
#include "pivotal_cli.hpp"

using namespace pivotal;

namespace {

constexpr double kExactTol = 1e-9;
constexpr double kIdentityTol = 1e-8;
constexpr std::uint64_t kAcceptedWalks = 100'000;
constexpr std::uint64_t kInfeasibleWalks = 1'000'000;
constexpr std::uint64_t kSeriesTerms = 200;
constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail = what;
    pass = false;
  }
};

using Clock = std::chrono::steady_clock;

bool run_criterion(int id, const char* title, double budget_s, Outcome (*body)()) {
  const auto t0 = Clock::now();
  Outcome o = body();
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (secs >= budget_s) o.require(false, "runtime " + format_number(secs) + " s over budget");
  std::printf("%s %d %s (%.2f s / %.0f s)%s%s\n", o.pass ? "PASS" : "FAIL", id, title, secs,
              budget_s, o.detail.empty() ? "" : ": ", o.detail.c_str());
  std::fflush(stdout);
  return o.pass;
}

bool near(double a, double b, double tol) { return a == b || std::abs(a - b) <= tol; }

std::string show(const std::string& what, double got, double want) {
  return what + " = " + format_exact(got) + ", expected " + format_exact(want);
}

Outcome example1_table() {
  Outcome o;
  const Graph g = example1();
  const PivotalityReport r = rank(g, g.index_of("1"), g.index_of("4"));
  const std::array<std::string, 3> nodes{"2", "3", "5"};
  const std::array<std::pair<Metric, std::array<double, 3>>, 4> rows{{
      {Metric::shp, {-1.0, -1.0, 0.0}},
      {Metric::mf, {0.5, 0.5, 0.5}},
      {Metric::ch, {-3.5, -3.5, -3.5}},
      {Metric::ath, {-0.5, -0.5, 0.5}},
  }};
  for (const auto& [m, want] : rows)
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double got = r.score(m, g.index_of(nodes[i]));
      o.require(near(got, want[i], kExactTol),
                show(std::string(metric_name(m)) + "(" + nodes[i] + ")", got, want[i]));
    }
  return o;
}

Outcome path_non_pivotal() {
  Outcome o;
  const Graph g = example3b();
  const NodeIndex s = g.index_of("1"), t = g.index_of("2"), k = g.index_of("3");
  const PivotalityReport r = rank(g, s, t);
  const double q = avoidance_hitting_time(build_chain(g), AvoidanceQuery{s, k, {t}}).feasibility;
  o.require(!is_feasible(q), "Q_1^{3,not 2} = " + format_exact(q));
  const double a = r.score(Metric::ath, k);
  o.require(std::isinf(a) && a < 0, show("ATH(3)", a, -kInfinity));
  o.require(near(r.score(Metric::ch, k), -4.0, kExactTol), show("CH(3)", r.score(Metric::ch, k), -4));
  o.require(near(r.score(Metric::shp, k), -2.0, kExactTol),
            show("SHP(3)", r.score(Metric::shp, k), -2));
  return o;
}

Outcome identities() {
  Outcome o;
  IdentityReport total;
  std::size_t graphs = 0;
  for (int directed = 1; directed >= 0; --directed)
    for (std::uint64_t i = 0; i < 100; ++i) {
      const std::uint64_t gs = detail::stream_seed(kSeed, i + (directed ? 0 : 1000));
      const std::size_t n = 4 + static_cast<std::size_t>(i % 27);
      const double p = std::min(1.0, 3.0 / static_cast<double>(n) + 0.05);
      const Graph g = with_random_weights(random_graph(n, p, gs, directed != 0), gs);
      FundamentalCache cache(build_chain(g));
      for (NodeIndex t = 0; t < n; ++t)
        for (NodeIndex o2 = 0; o2 < n; ++o2)
          if (t != o2) total.merge(verify_identities(cache, t, o2));
      ++graphs;
    }
  std::size_t evaluated = 0;
  for (const auto& c : total.checks) {
    evaluated += c.evaluated;
    o.require(c.max_rel_residual <= kIdentityTol,
              c.name + " residual " + format_number(c.max_rel_residual));
    o.require(c.evaluated > 0, c.name + " never evaluated");
  }
  if (o.pass)
    o.detail = std::to_string(graphs) + " graphs, " + std::to_string(evaluated) +
               " checks, max residual " + format_number(total.max_relative_residual());
  return o;
}

struct OracleGraph {
  std::string name;
  Chain chain;
  std::vector<AvoidanceQuery> queries;
};

std::vector<OracleGraph> oracle_corpus() {
  std::vector<OracleGraph> out;
  const Graph e1 = example1();
  const Chain c1 = build_chain(e1);
  auto at = [&](const char* l) { return e1.index_of(l); };
  std::vector<AvoidanceQuery> q1{{at("1"), at("5"), {at("4")}},
                                 {at("1"), at("4"), {}},
                                 {at("1"), at("4"), {at("5")}},
                                 {at("2"), at("5"), {at("3")}}};
  out.push_back({"example1", c1, q1});
  const Graph e3 = example3b();
  const Chain c3 = build_chain(e3);
  out.push_back({"example3b", c3,
                 {{e3.index_of("1"), e3.index_of("3"), {}},
                  {e3.index_of("2"), e3.index_of("3"), {e3.index_of("1")}}}});
  for (std::uint64_t i = 0; i < 10; ++i) {
    const std::uint64_t gs = detail::stream_seed(kSeed, 500 + i);
    const std::size_t n = 4 + static_cast<std::size_t>(gs % 7);
    const Graph g = with_random_weights(random_graph(n, 0.4, gs, i % 2 == 0), gs);
    Chain c = build_chain(g);
    auto qs = cli::oracle_queries(c);
    out.push_back({"random-" + std::to_string(i), std::move(c), std::move(qs)});
  }
  return out;
}

// example3b: walks from 1 cannot reach 3 without passing 2
AvoidanceQuery example3b_infeasible(const Graph& g) {
  return {g.index_of("1"), g.index_of("3"), {g.index_of("2")}};
}

Outcome monte_carlo() {
  Outcome o;
  std::vector<cli::VerifyRow> rows;
  std::uint64_t stream = 0;
  for (const OracleGraph& og : oracle_corpus())
    for (const AvoidanceQuery& q : og.queries) {
      if (!avoidance_hitting_time(og.chain, q).feasible()) {
        SamplerOptions fixed;
        fixed.samples = kInfeasibleWalks;
        fixed.seed = detail::stream_seed(kSeed, stream++);
        cli::monte_carlo_query(og.name, og.chain, q, fixed, rows);
        continue;
      }
      cli::monte_carlo_query(og.name, og.chain, q,
                             cli::verify_sampler(kAcceptedWalks, detail::stream_seed(kSeed, stream++)),
                             rows);
    }
  const Graph e3 = example3b();
  SamplerOptions fixed;
  fixed.samples = kInfeasibleWalks;
  fixed.seed = kSeed;
  const AvoidanceEstimates e = sample_avoidance(build_chain(e3), example3b_infeasible(e3), fixed);
  o.require(e.feasibility.accepted == 0 && e.feasibility.total == kInfeasibleWalks,
            "example3b infeasible query accepted " + std::to_string(e.feasibility.accepted) +
                " of " + std::to_string(e.feasibility.total));
  double worst_z = 0.0;
  for (const auto& r : rows) {
    o.require(r.pass, r.graph + " " + r.check + " " + r.note);
    if (std::isfinite(r.value) && r.check.find("infeasible") == std::string::npos)
      worst_z = std::max(worst_z, r.value);
  }
  if (o.pass)
    o.detail = std::to_string(rows.size()) + " comparisons, max |z| " + format_number(worst_z) +
               ", example3b infeasible 0 of " + std::to_string(e.feasibility.total);
  return o;
}

Outcome series() {
  Outcome o;
  std::vector<cli::VerifyRow> rows;
  for (const OracleGraph& og : oracle_corpus())
    for (const AvoidanceQuery& q : og.queries)
      cli::series_query(og.name, og.chain, q, kSeriesTerms, rows);
  std::size_t compared = 0, skipped = 0;
  for (const auto& r : rows) {
    o.require(r.pass, r.graph + " " + r.check + " error " + format_number(r.value) + " > " +
                          format_number(r.threshold));
    if (r.note.empty())
      ++compared;
    else
      ++skipped;
  }
  o.require(compared > 0, "no query converged");
  if (o.pass)
    o.detail = std::to_string(compared) + " comparisons, " + std::to_string(skipped) +
               " queries above the envelope threshold";
  return o;
}

Outcome table2_trends() {
  Outcome o;
  auto scores = [](int L2, int N2) {
    const Graph g = example2(L2, N2);
    const PivotalityReport r = rank(g, g.index_of("s"), g.index_of("t"));
    const NodeIndex k1 = g.index_of("k1"), k2 = g.index_of("k2");
    std::map<Metric, std::pair<double, double>> out;
    for (Metric m : kAllMetrics) out[m] = {r.score(m, k1), r.score(m, k2)};
    return out;
  };
  auto tag = [](int L2, int N2) {
    return "(L2=" + std::to_string(L2) + ",N2=" + std::to_string(N2) + ")";
  };
  {
    auto s = scores(2, 1);
    for (Metric m : {Metric::ath, Metric::ch}) {
      const auto [a, b] = s[m];
      o.require(near(a, b, kExactTol), std::string(metric_name(m)) + " symmetry " + tag(2, 1) +
                                           ": " + format_exact(a) + " vs " + format_exact(b));
    }
  }
  {
    const auto [k1, k2] = scores(1, 2)[Metric::ath];
    o.require(k2 > k1, "ATH(k2) > ATH(k1) fails at " + tag(1, 2));
  }
  for (int N2 : {1, 2}) {
    const auto [k1, k2] = scores(20, N2)[Metric::ath];
    o.require(k1 > k2, "ATH(k1) > ATH(k2) fails at " + tag(20, N2));
  }
  for (int L2 : {3, 4, 6, 10, 20})
    for (int N2 : {1, 2, 3, 5}) {
      auto s = scores(L2, N2);
      o.require(s[Metric::shp].first > s[Metric::shp].second, "SHP order fails at " + tag(L2, N2));
      if (N2 > 1)
        o.require(s[Metric::mf].second >= s[Metric::mf].first, "MF order fails at " + tag(L2, N2));
    }
  for (int L2 : {1, 2})
    for (int N2 : {2, 3, 5}) {
      auto s = scores(L2, N2);
      o.require(s[Metric::mf].second >= s[Metric::mf].first, "MF order fails at " + tag(L2, N2));
    }
  return o;
}

Outcome cut_vertex() {
  Outcome o;
  const std::array<Metric, 2> metrics{Metric::ath, Metric::mf};
  for (std::uint64_t i = 0; i < 20; ++i) {
    const JoinedBlocks jb =
        joined_blocks(3 + i % 6, 3 + (i * 7) % 8, 0.45, detail::stream_seed(kSeed, 900 + i));
    const PivotalityReport r = rank(jb.graph, jb.source, jb.target, metrics);
    const std::string tag = "graph " + std::to_string(i);
    o.require(near(r.score(Metric::ath, jb.cut), 0.0, kExactTol),
              tag + show(" ATH(k*)", r.score(Metric::ath, jb.cut), 0.0));
    o.require(near(r.score(Metric::mf, jb.cut), 1.0, kExactTol),
              tag + show(" MF(k*)", r.score(Metric::mf, jb.cut), 1.0));
    for (NodeIndex k : r.candidates)
      o.require(r.score(Metric::ath, k) <= kExactTol,
                tag + " ATH(" + jb.graph.label(k) + ") = " + format_exact(r.score(Metric::ath, k)));
  }
  return o;
}

Outcome fat_tree_run() {
  Outcome o;
  const Graph g = fat_tree(6);
  o.require(g.node_count() == 99, "fat_tree(6) has " + std::to_string(g.node_count()) + " nodes");
  const std::array<Metric, 1> ath_only{Metric::ath};
  const PivotalityReport r = rank(g, g.index_of("h0_0_0"), g.index_of("h5_2_2"), ath_only);
  std::ostringstream dot;
  write_dot(dot, r, g);
  const std::string text = dot.str();

  o.require(text.rfind("graph pivotality {\n", 0) == 0, "DOT header");
  o.require(text.size() >= 2 && text.substr(text.size() - 2) == "}\n", "DOT footer");
  o.require(std::count(text.begin(), text.end(), '{') == 1 &&
                std::count(text.begin(), text.end(), '}') == 1,
            "DOT braces");
  const std::regex node_stmt(R"re(^  "([^"]+)" \[([^\]]*)\];$)re", std::regex::multiline);
  const std::regex fill(R"re(style=filled, fillcolor="(#[0-9A-F]{6})")re");
  std::set<std::string> seen, black;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), node_stmt);
       it != std::sregex_iterator(); ++it) {
    const std::string label = (*it)[1], attrs = (*it)[2];
    seen.insert(label);
    std::smatch m;
    if (!std::regex_search(attrs, m, fill)) {
      o.require(false, "node " + label + " lacks a fill color");
      continue;
    }
    if (m[1] == "#000000") black.insert(label);
  }
  o.require(seen.size() == 99, "DOT declares " + std::to_string(seen.size()) + " nodes");
  std::set<std::string> infeasible;
  for (std::size_t i = 0; i < r.candidates.size(); ++i)
    if (!is_feasible(r.feasibility[i])) infeasible.insert(g.label(r.candidates[i]));
  o.require(black == infeasible, "black nodes differ from feasibility-0 nodes");
  if (o.pass)
    o.detail = "99 nodes, " + std::to_string(black.size()) + " black, " +
               std::to_string(infeasible.size()) + " with feasibility 0";
  return o;
}

std::pair<int, std::string> capture(const std::string& args) {
  const std::string cmd = std::string(PIVOTAL_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

Outcome determinism() {
  Outcome o;
  const std::vector<std::string> runs{
      "pivotality --gen example1 --source 1 --target 4",
      "pivotality --gen example1 --source 1 --target 4 --output json",
      "pivotality --gen example3b --source 1 --target 2 --output dot",
      "avoid --gen example3b --source 1 --target 3 --avoid 2 --output json",
      "verify --gen random:12,0.3,5 --mc-samples 20000 --seed 11",
      "verify --gen example1 --mc-samples 20000 --seed 3 --output json",
      "verify --seed 42",
      "pivotality --gen example2:2,1 --source s --target t",
      "pivotality --gen example2:20,2 --source s --target t --output json",
      "pivotality --gen fat-tree:6 --source h0_0_0 --target h5_2_2 --metrics ath --output dot",
      "metrics --gen random:30,0.2,9,undirected --absorbing 29",
      "gen --gen random:30,0.2,9,directed --output json",
  };
  for (const auto& args : runs) {
    const auto [code1, out1] = capture(args);
    const auto [code2, out2] = capture(args);
    o.require(code1 == 0 && code2 == 0, "'" + args + "' exited " + std::to_string(code1));
    o.require(!out1.empty(), "'" + args + "' printed nothing");
    o.require(out1 == out2, "'" + args + "' output differs between runs");
  }
  if (o.pass) o.detail = std::to_string(runs.size()) + " commands byte-identical";
  return o;
}

}  // namespace

int main() {
  std::printf("rng %s, seed %llu\n", std::string(kRngName).c_str(),
              static_cast<unsigned long long>(kSeed));
  bool ok = true;
  ok &= run_criterion(1, "example1 metric table", 1, example1_table);
  ok &= run_criterion(2, "non-pivotal node on the 3-node path", 1, path_non_pivotal);
  ok &= run_criterion(3, "identity suite on 200 random graphs", 120, identities);
  ok &= run_criterion(4, "Monte Carlo agreement", 300, monte_carlo);
  ok &= run_criterion(5, "series agreement", 60, series);
  ok &= run_criterion(6, "example2 trends", 10, table2_trends);
  ok &= run_criterion(7, "cut-vertex property", 30, cut_vertex);
  ok &= run_criterion(8, "fat-tree ATH sweep and DOT", 10, fat_tree_run);
  ok &= run_criterion(9, "byte-identical CLI output", 600, determinism);
  return ok ? 0 : 1;
}
