#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "newsflow/error.hpp"
#include "newsflow/random.hpp"
#include "newsflow/topic_graph.hpp"
#include "oracles.hpp"

using namespace newsflow;

namespace {

StockTopics stock(std::string name, std::vector<SparseDistribution> dists, std::vector<double> fve) {
  StockTopics s;
  s.stock = name;
  s.company = name + " Corp";
  for (std::size_t i = 0; i < dists.size(); ++i) {
    s.topic_ids.push_back(static_cast<int>(i));
    s.top_words.push_back({"w" + std::to_string(i), "x", "y"});
  }
  s.distributions = std::move(dists);
  s.fve = std::move(fve);
  return s;
}

// Two-word distributions (a, 1-a) whose JSD to (1, 0) is the given value.
SparseDistribution with_jsd_to_point_mass(double target, const std::string& other = "b") {
  double lo = 0.0, hi = 1.0;
  const SparseDistribution point{{"a", 1.0}};
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double v = jsd(point, SparseDistribution{{"a", mid}, {other, 1.0 - mid}});
    (v > target ? lo : hi) = mid;
  }
  return {{"a", lo}, {other, 1.0 - lo}};
}

}  // namespace

TEST(Jsd, IdentityAndDisjoint) {
  const std::vector<double> p{0.2, 0.3, 0.5};
  EXPECT_EQ(jsd(p, p), 0.0);
  EXPECT_DOUBLE_EQ(jsd(std::vector<double>{0.5, 0.5, 0, 0}, std::vector<double>{0, 0, 0.25, 0.75}), 1.0);
}

TEST(Jsd, PointMassAgainstUniform) {
  const std::vector<double> p{1, 0}, q{0.5, 0.5};
  const double expected = 0.5 * (1.0 * std::log2(1.0 / 0.75)) +
                          0.5 * (0.5 * std::log2(0.5 / 0.75) + 0.5 * std::log2(0.5 / 0.25));
  EXPECT_NEAR(jsd(p, q), expected, 1e-15);
  EXPECT_NEAR(jsd(p, q), 0.311278, 1e-6);
  EXPECT_NEAR(jsd(p, q), oracle::jsd_entropy(p, q), 1e-12);
}

TEST(Jsd, InvalidInputIsFatal) {
  EXPECT_THROW(jsd(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), DataError);
  EXPECT_THROW(jsd(std::vector<double>{0.5, 0.4}, std::vector<double>{0.5, 0.5}), DataError);
  EXPECT_THROW(jsd(std::vector<double>{1.5, -0.5}, std::vector<double>{0.5, 0.5}), DataError);
  EXPECT_THROW(jsd(SparseDistribution{{"a", 0.7}}, SparseDistribution{{"a", 1.0}}), DataError);
}

TEST(Jsd, SparseEqualsDenseOnUnion) {
  const SparseDistribution p{{"apple", 0.5}, {"car", 0.5}};
  const SparseDistribution q{{"bank", 0.25}, {"car", 0.75}};
  const std::vector<double> dp{0.5, 0.0, 0.5}, dq{0.0, 0.25, 0.75};
  EXPECT_NEAR(jsd(p, q), jsd(dp, dq), 1e-15);
}

TEST(Jsd, RandomizedProperties) {
  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + rng.uniform_index(20);
    const auto p = rng.symmetric_dirichlet(0.3, n);
    const auto q = rng.symmetric_dirichlet(0.3, n);
    const auto r = rng.symmetric_dirichlet(0.3, n);
    const double pq = jsd(p, q), qp = jsd(q, p), pr = jsd(p, r), qr = jsd(q, r);
    EXPECT_EQ(pq, qp);
    EXPECT_GE(pq, 0.0);
    EXPECT_LE(pq, 1.0);
    EXPECT_NEAR(pq, oracle::jsd_entropy(p, q), 1e-9);
    EXPECT_LE(std::sqrt(pr), std::sqrt(pq) + std::sqrt(qr) + 1e-9);
    EXPECT_GT(pq, 0.0);
  }
}

TEST(Graph, EdgeBelowThreshold) {
  const SparseDistribution base{{"a", 1.0}};
  const auto near = with_jsd_to_point_mass(0.3);
  const auto far = with_jsd_to_point_mass(0.6, "c");  // B to C is about 0.69
  const std::vector<StockTopics> stocks{stock("A", {base}, {1.0}), stock("B", {near}, {1.0}),
                                        stock("C", {far}, {1.0})};
  const auto g = build_graph(stocks, 0.5);
  std::vector<GraphEdge> topic_edges;
  for (const auto& e : g.edges) {
    if (e.source.rfind("topic:", 0) == 0 && e.target.rfind("topic:", 0) == 0) topic_edges.push_back(e);
  }
  ASSERT_EQ(topic_edges.size(), 1u);
  EXPECT_EQ(topic_edges[0].source, "topic:A:0");
  EXPECT_EQ(topic_edges[0].target, "topic:B:0");
  EXPECT_NEAR(topic_edges[0].weight, 0.7, 1e-9);
}

TEST(Graph, IdenticalDistributionsFormTriangle) {
  const SparseDistribution d{{"a", 0.25}, {"b", 0.75}};
  const std::vector<StockTopics> stocks{stock("A", {d}, {1.0}), stock("B", {d}, {1.0}),
                                        stock("C", {d}, {1.0})};
  const auto g = build_graph(stocks);
  int topic_edges = 0;
  for (const auto& e : g.edges) {
    if (e.source.rfind("topic:", 0) == 0 && e.target.rfind("topic:", 0) == 0) {
      ++topic_edges;
      EXPECT_EQ(e.weight, 1.0);
    }
  }
  EXPECT_EQ(topic_edges, 3);
}

TEST(Graph, NodesAndCompanyEdges) {
  const std::vector<StockTopics> stocks{
      stock("TM", {{{"a", 1.0}}, {{"b", 1.0}}}, {0.75, 0.25})};
  const auto g = build_graph(stocks);
  ASSERT_EQ(g.nodes.size(), 3u);
  EXPECT_EQ(g.nodes[0].id, "company:TM");
  EXPECT_EQ(g.nodes[0].kind, NodeKind::company);
  EXPECT_EQ(g.nodes[0].size, 0.5);
  EXPECT_EQ(g.nodes[1].id, "topic:TM:0");
  EXPECT_EQ(g.nodes[1].label, "TM Corp (w0,x,y)");
  EXPECT_EQ(g.nodes[1].size, 0.75);
  ASSERT_EQ(g.edges.size(), 2u);  // disjoint topics are not joined
  for (const auto& e : g.edges) {
    EXPECT_EQ(e.source, "company:TM");
    EXPECT_NE(e.source, e.target);
  }
  EXPECT_EQ(g.edges[1].weight, 0.25);
  EXPECT_THROW(build_graph(stocks, 0.0), ConfigError);
  EXPECT_THROW(build_graph(stocks, 1.5), ConfigError);
}

TEST(Graph, ThreadCountDoesNotChangeResult) {
  Rng rng(5);
  std::vector<StockTopics> stocks;
  for (int s = 0; s < 4; ++s) {
    std::vector<SparseDistribution> dists;
    std::vector<double> fve;
    for (int k = 0; k < 5; ++k) {
      const auto p = rng.symmetric_dirichlet(1.0, 4);
      SparseDistribution d;
      for (std::size_t w = 0; w < p.size(); ++w) d.emplace_back("w" + std::to_string(w), p[w]);
      dists.push_back(d);
      fve.push_back(0.2);
    }
    stocks.push_back(stock("S" + std::to_string(s), dists, fve));
  }
  const auto serial = build_graph(stocks, 0.5, 1);
  EXPECT_EQ(build_graph(stocks, 0.5, 3), serial);
  for (const auto& e : serial.edges) {
    if (e.source.rfind("topic:", 0) == 0) {
      EXPECT_GT(e.weight, 0.5);
      EXPECT_LE(e.weight, 1.0);
    }
  }
}

TEST(Export, EmptyGraphRoundTrips) {
  oracle::TempDir dir("graph-empty");
  const TopicGraph empty;
  export_graph(empty, GraphFormat::gexf, dir / "g.gexf");
  export_graph(empty, GraphFormat::graphml, dir / "g.graphml");
  export_graph(empty, GraphFormat::edge_list, dir / "g.tsv");
  EXPECT_EQ(read_gexf(dir / "g.gexf"), empty);
  EXPECT_EQ(read_graphml(dir / "g.graphml"), empty);
  EXPECT_EQ(oracle::read_file(dir / "g.tsv"), "");
}

TEST(Export, TwoNodeGraphRoundTrips) {
  oracle::TempDir dir("graph-two");
  TopicGraph g;
  g.nodes.push_back({"company:TM", "Toyota & Co <ltd>", 0.5, NodeKind::company});
  g.nodes.push_back({"topic:TM:3", "Toyota (recall,\"safety\",brake)", 0.1 + 0.2, NodeKind::topic});
  g.edges.push_back({"company:TM", "topic:TM:3", 1.0 / 3.0});
  export_graph(g, GraphFormat::gexf, dir / "g.gexf");
  export_graph(g, GraphFormat::graphml, dir / "g.graphml");
  EXPECT_EQ(read_gexf(dir / "g.gexf"), g);
  EXPECT_EQ(read_graphml(dir / "g.graphml"), g);
  export_graph(g, GraphFormat::edge_list, dir / "g.tsv");
  EXPECT_EQ(oracle::read_file(dir / "g.tsv"), "company:TM\ttopic:TM:3\t0.3333333333333333\n");
}

TEST(Export, UnwritableDestinationIsFatal) {
  EXPECT_THROW(export_graph(TopicGraph{}, GraphFormat::gexf, "/proc/newsflow/g.gexf"), Error);
}

TEST(Export, MalformedInputIsDataError) {
  oracle::TempDir dir("graph-bad");
  {
    std::ofstream out(dir / "bad.gexf");
    out << "<gexf><graph><nodes><node id=";
  }
  EXPECT_THROW(read_gexf(dir / "bad.gexf"), DataError);
}

TEST(GraphFormat, Parsing) {
  EXPECT_EQ(parse_graph_format("gexf"), GraphFormat::gexf);
  EXPECT_EQ(parse_graph_format("graphml"), GraphFormat::graphml);
  EXPECT_EQ(parse_graph_format("edge-list"), GraphFormat::edge_list);
  EXPECT_EQ(extension(GraphFormat::edge_list), "tsv");
  EXPECT_THROW(parse_graph_format("dot"), ConfigError);
}

TEST(StockTopicsTest, CollectsSelectedTopics) {
  Vocabulary vocab;
  for (const char* w : {"toyota", "recall", "safety", "yen"}) vocab.intern(w);
  const TopicModel model(2, 4, {0.1, 0.4, 0.4, 0.1, 0.0, 0.0, 0.0, 1.0}, {}, GibbsCounts(0, 2, 4));
  TopicSelection sel;
  sel.topic_ids = {0, 1};
  sel.fve = {0.9, 0.1};
  sel.selected = {0};
  const auto s = stock_topics("TM", "Toyota", model, vocab, sel);
  EXPECT_EQ(s.topic_ids, std::vector<int>{0});
  EXPECT_EQ(s.fve, std::vector<double>{0.9});
  EXPECT_EQ(s.top_words[0], (std::vector<std::string>{"recall", "safety", "toyota"}));
  EXPECT_EQ(s.distributions[0],
            (SparseDistribution{{"recall", 0.4}, {"safety", 0.4}, {"toyota", 0.1}, {"yen", 0.1}}));
}
