#include <gtest/gtest.h>

#include <sstream>

#include "test_util.hpp"

using namespace pivotal;

TEST(LoadGraph, CsvDirected) {
  const Graph g = load_graph("1,2,1\n2,3,1", GraphFormat::edge_list_csv, true);
  EXPECT_EQ(g.node_count(), 3u);
  EXPECT_EQ(g.arcs().size(), 2u);
  EXPECT_EQ(g.label(0), "1");
  EXPECT_EQ(g.label(2), "3");
}

TEST(LoadGraph, ReciprocalDirectedEqualsUndirected) {
  const Graph d = load_graph("a,b,1\nb,a,1", GraphFormat::edge_list_csv, true);
  const Graph u = load_graph("a,b,1", GraphFormat::edge_list_csv, false);
  EXPECT_EQ(d, u);
}

TEST(LoadGraph, NegativeAffinityReportsLine) {
  try {
    load_graph("# header\na,b,1\nx,y,-1\n", GraphFormat::edge_list_csv, true);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LoadGraph, DuplicateEdgesSumAffinity) {
  const Graph g = load_graph("a,b,1,2\na,b,3,2\nb,a,1\n", GraphFormat::edge_list_csv, true);
  auto ab = std::find_if(g.arcs().begin(), g.arcs().end(),
                         [](const Edge& e) { return e.src == 0 && e.dst == 1; });
  ASSERT_NE(ab, g.arcs().end());
  EXPECT_DOUBLE_EQ(ab->affinity, 4.0);
  EXPECT_DOUBLE_EQ(ab->cost, 2.0);
}

TEST(LoadGraph, DuplicateEdgeCostMismatchIsError) {
  EXPECT_THROW(load_graph("a,b,1,2\na,b,1,3\n", GraphFormat::edge_list_csv, true), ParseError);
}

TEST(LoadGraph, ZeroAffinityEdgeIsAbsent) {
  const Graph g = load_graph("a,b,1\nb,a,1\na,c,0\nc,a,1\n", GraphFormat::edge_list_csv, true);
  EXPECT_EQ(g.node_count(), 3u);
  EXPECT_EQ(g.arcs().size(), 3u);
}

TEST(LoadGraph, MalformedLines) {
  EXPECT_THROW(load_graph("a,b\n", GraphFormat::edge_list_csv, true), ParseError);
  EXPECT_THROW(load_graph("a,b,x\n", GraphFormat::edge_list_csv, true), ParseError);
  EXPECT_THROW(load_graph("# only a comment\n", GraphFormat::edge_list_csv, true), Error);
}

TEST(LoadGraph, Json) {
  const char* text = R"({"directed": false, "nodes": ["1","2","3"],
    "edges": [{"src":"1","dst":"2","affinity":1}, {"src":"2","dst":"3","affinity":1,"cost":4}]})";
  const Graph g = load_graph(text, GraphFormat::json, true);
  EXPECT_FALSE(g.directed());
  EXPECT_EQ(g.arcs().size(), 4u);
  EXPECT_THROW(load_graph(R"({"directed":true,"nodes":["a"],"edges":[{"src":"a","dst":"z","affinity":1}]})",
                          GraphFormat::json, true),
               Error);
  EXPECT_THROW(load_graph("{not json", GraphFormat::json, true), Error);
}

namespace {

// Edge lists carry no node list, so indices follow first appearance.
bool same_by_label(const Graph& a, const Graph& b) {
  if (a.node_count() != b.node_count() || a.arcs().size() != b.arcs().size()) return false;
  for (const Edge& e : a.arcs()) {
    const Edge mapped{b.index_of(a.label(e.src)), b.index_of(a.label(e.dst)), e.affinity, e.cost};
    if (std::find(b.arcs().begin(), b.arcs().end(), mapped) == b.arcs().end()) return false;
  }
  return true;
}

}  // namespace

TEST(LoadGraph, WritersRoundTrip) {
  const Graph g = test::random_weighted(3, false);
  std::ostringstream csv, json;
  write_graph_csv(csv, g);
  write_graph_json(json, g);
  EXPECT_TRUE(same_by_label(load_graph(csv.str(), GraphFormat::edge_list_csv, false), g));
  EXPECT_EQ(load_graph(json.str(), GraphFormat::json, false), g);
  const Graph d = test::random_weighted(4, true);
  std::ostringstream dcsv;
  write_graph_csv(dcsv, d);
  EXPECT_TRUE(same_by_label(load_graph(dcsv.str(), GraphFormat::edge_list_csv, true), d));
}

TEST(BuildChain, PathMiddleRow) {
  const Chain c = build_chain(test::path123());
  EXPECT_DOUBLE_EQ(c.transition()(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(c.transition()(1, 1), 0.0);
  EXPECT_DOUBLE_EQ(c.transition()(1, 2), 0.5);
}

TEST(BuildChain, Example1Rows) {
  const Graph g = example1();
  const Chain c = build_chain(g);
  const auto n1 = g.index_of("1"), n2 = g.index_of("2"), n5 = g.index_of("5"), n4 = g.index_of("4");
  EXPECT_DOUBLE_EQ(c.transition()(n1, n2), 0.5);
  EXPECT_DOUBLE_EQ(c.transition()(n1, n5), 0.5);
  EXPECT_DOUBLE_EQ(c.transition()(n4, n1), 1.0);
}

TEST(BuildChain, SingleSelfLoop) {
  GraphBuilder b(true);
  b.add_edge("x", "x", 5.0);
  const Chain c = build_chain(b.build());
  ASSERT_EQ(c.size(), 1u);
  EXPECT_DOUBLE_EQ(c.transition()(0, 0), 1.0);
}

TEST(BuildChain, DanglingNodeNamed) {
  const Graph g = load_graph("a,b,1\nb,c,1\n", GraphFormat::edge_list_csv, true);
  try {
    build_chain(g);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("c"), std::string::npos);
  }
}

TEST(BuildChain, RowsStochasticAndSupported) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = test::random_weighted(seed, seed % 2 == 0, 30);
    const Chain c = build_chain(g);
    for (Eigen::Index i = 0; i < c.transition().rows(); ++i)
      EXPECT_NEAR(c.transition().row(i).sum(), 1.0, 1e-12);
    Matrix support = Matrix::Zero(c.transition().rows(), c.transition().cols());
    for (const Edge& e : g.arcs()) support(e.src, e.dst) = 1.0;
    for (Eigen::Index i = 0; i < support.rows(); ++i)
      for (Eigen::Index j = 0; j < support.cols(); ++j)
        if (c.transition()(i, j) > 0.0) { EXPECT_EQ(support(i, j), 1.0); }
  }
}

TEST(BuildChain, UndirectedDetailedBalance) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Graph g = test::random_weighted(seed, false, 20);
    const Chain c = build_chain(g);
    const Matrix& P = c.transition();
    const Vector& d = c.out_degree();
    for (Eigen::Index i = 0; i < P.rows(); ++i)
      for (Eigen::Index j = 0; j < P.cols(); ++j)
        EXPECT_NEAR(d(i) * P(i, j), d(j) * P(j, i), 1e-12);
  }
}

TEST(Partition, PathAbsorbingThree) {
  const Chain c = build_chain(test::path123());
  const ChainPartition p = partition(c, {2});
  EXPECT_EQ(p.transient(), (std::vector<NodeIndex>{0, 1}));
  Matrix expected(2, 2);
  expected << 0, 1, 0.5, 0;
  EXPECT_EQ(p.transient_block(), expected);
}

TEST(Partition, Preconditions) {
  const Chain c = build_chain(test::path123());
  EXPECT_THROW(partition(c, {0, 1, 2}), ValidationError);
  EXPECT_THROW(partition(c, std::span<const NodeIndex>{}), ValidationError);
}

TEST(Partition, StrandedStatesListed) {
  const Graph g = load_graph("a,b,1\nc,d,1\n", GraphFormat::edge_list_csv, false);
  const Chain c = build_chain(g);
  try {
    partition(c, {g.index_of("b")});
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("c"), std::string::npos);
    EXPECT_NE(msg.find("d"), std::string::npos);
  }
}

TEST(Partition, BlocksReassembleRows) {
  const Graph g = test::random_weighted(11, true, 15);
  const Chain c = build_chain(g);
  const std::vector<NodeIndex> absorbing{0, 2};
  const ChainPartition p = partition(c, absorbing);
  for (std::size_t r = 0; r < p.transient_count(); ++r) {
    const NodeIndex i = p.transient()[r];
    for (std::size_t k = 0; k < p.transient_count(); ++k)
      EXPECT_EQ(p.transient_block()(r, k), c.transition()(i, p.transient()[k]));
    for (std::size_t k = 0; k < p.absorbing_count(); ++k)
      EXPECT_EQ(p.absorbing_block()(r, k), c.transition()(i, p.absorbing()[k]));
  }
}
