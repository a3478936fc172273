#include <doctest.h>

#include <cmath>
#include <map>

#include "helpers.hpp"
#include "textwalk/error.hpp"
#include "textwalk/fixtures.hpp"
#include "textwalk/walks.hpp"

using namespace textwalk;
using testing::make_graph;

TEST_SUITE("walks") {

TEST_CASE("config validation lists every problem") {
  WalkConfig cfg;
  CHECK(cfg.validate().empty());
  cfg.p = 0;
  cfg.q = -1;
  cfg.walks_per_node = 0;
  cfg.window = 50;
  CHECK(cfg.validate().size() == 4);
  cfg = {};
  cfg.window = 1;
  CHECK(cfg.validate().size() == 1);
}

TEST_CASE("second order weights") {
  // Triangle a-b-c plus tail c-d.
  const Graph g = make_graph({{"a", "b"}, {"b", "c"}, {"c", "a"}, {"d", "c"}});
  const NodeId a = g.require("a"), b = g.require("b"), c = g.require("c"), d = g.require("d");
  CHECK(second_order_weight(g, a, b, c, 1, 1) == 1.0);
  CHECK(second_order_weight(g, a, b, a, 4, 1) == 0.25);
  CHECK(second_order_weight(g, a, b, c, 3, 7) == 1.0);  // a and c adjacent
  CHECK(second_order_weight(g, a, c, d, 1, 2) == 0.5);
  try {
    second_order_weight(g, a, b, d, 1, 1);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotNeighbor);
  }
}

TEST_CASE("alias table reproduces its distribution exactly") {
  const std::vector<double> w{0.5, 1.0, 2.0, 0.25, 0.0, 3.0};
  const AliasTable t(w);
  const auto p = t.probabilities();
  double total = 0.0;
  for (double x : w) total += x;
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(p[i] == doctest::Approx(w[i] / total).epsilon(1e-12));
}

TEST_CASE("alias sampling frequencies within 3 sigma") {
  const std::vector<double> w{1, 2, 3, 4};
  const AliasTable t(w);
  Rng rng(3);
  const int draws = 100000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < draws; ++i) ++counts[t.sample(rng)];
  for (std::size_t i = 0; i < 4; ++i) {
    const double p = w[i] / 10.0;
    const double sigma = std::sqrt(draws * p * (1 - p));
    CHECK(std::abs(counts[i] - draws * p) < 3 * sigma);
  }
}

TEST_CASE("transition tables") {
  SUBCASE("star centre is uniform") {
    const Graph g = testing::star_graph(5);
    const auto tables = build_alias_tables(g, {});
    const auto dist = tables.distribution(g.require("n3"), g.require("n0"));
    REQUIRE(dist.size() == 5);
    for (double p : dist) CHECK(p == doctest::Approx(0.2));
  }
  SUBCASE("path with p = 2") {
    const Graph g = make_graph({{"b", "a"}, {"c", "b"}});
    WalkConfig cfg;
    cfg.p = 2;
    const auto tables = build_alias_tables(g, cfg);
    const NodeId a = g.require("a"), b = g.require("b");
    const auto dist = tables.distribution(a, b);
    const auto nb = g.neighbors(b);
    for (std::size_t i = 0; i < nb.size(); ++i) {
      CHECK(dist[i] == doctest::Approx(nb[i] == a ? 1.0 / 3 : 2.0 / 3).epsilon(1e-12));
    }
  }
  SUBCASE("every table sums to one and matches the weights") {
    const Graph g = testing::random_connected(30, 20, 2);
    const double p = 0.5, q = 3.0;
    WalkConfig cfg;
    cfg.p = p;
    cfg.q = q;
    const auto tables = build_alias_tables(g, cfg);
    for (NodeId cur = 0; cur < g.node_count(); ++cur) {
      for (NodeId prev : g.neighbors(cur)) {
        const auto dist = tables.distribution(prev, cur);
        double total = 0.0, weights = 0.0;
        for (NodeId next : g.neighbors(cur)) weights += second_order_weight(g, prev, cur, next, p, q);
        for (std::size_t i = 0; i < dist.size(); ++i) {
          total += dist[i];
          const double w = second_order_weight(g, prev, cur, g.neighbors(cur)[i], p, q);
          CHECK(dist[i] == doctest::Approx(w / weights).epsilon(1e-12));
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
      }
    }
  }
  SUBCASE("isolated node") {
    // A graph with an isolated node cannot come from an edge list, so strip
    // the only edge.
    const Graph g = make_graph({{"a", "b"}});
    const NodePair cut{0, 1};
    const Graph lonely = g.without_edges(std::span(&cut, 1));
    try {
      build_alias_tables(lonely, {});
      FAIL("no error");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::IsolatedNode);
    }
  }
}

TEST_CASE("two-node walks alternate") {
  const Graph g = make_graph({{"a", "b"}});
  WalkConfig cfg;
  cfg.walks_per_node = 2;
  cfg.walk_length = 7;
  cfg.window = 3;
  const auto walks = generate_walks(g, build_alias_tables(g, cfg), cfg, 1);
  REQUIRE(walks.size() == 4);
  for (const auto& w : walks) {
    CHECK(w.nodes.size() == 7);
    for (std::size_t i = 0; i < w.nodes.size(); ++i) CHECK(w.nodes[i] == (w.start() + i) % 2);
  }
}

TEST_CASE("walk shape, validity and determinism") {
  FixtureSpec spec;
  spec.base_concepts = 30;
  spec.depth = 3;
  spec.cross_links = 20;
  const Graph g = generate_fixture(spec).graph();
  WalkConfig cfg;
  cfg.p = 0.5;
  cfg.q = 2;
  cfg.walks_per_node = 3;
  cfg.walk_length = 12;
  cfg.window = 4;
  const auto tables = build_alias_tables(g, cfg);
  const auto walks = generate_walks(g, tables, cfg, 99);
  REQUIRE(walks.size() == 3 * g.node_count());
  std::map<NodeId, int> starts;
  for (std::size_t i = 0; i < walks.size(); ++i) {
    const auto& w = walks[i];
    CHECK(w.nodes.size() == 12);
    CHECK(w.start() == i % g.node_count());  // round-major order
    ++starts[w.start()];
    for (std::size_t t = 1; t < w.nodes.size(); ++t) CHECK(g.has_edge(w.nodes[t - 1], w.nodes[t]));
  }
  for (const auto& [v, count] : starts) CHECK(count == 3);
  CHECK(generate_walks(g, tables, cfg, 99) == walks);
  CHECK(generate_walks(g, tables, cfg, 99, 4) == walks);
  CHECK(generate_walks(g, tables, cfg, 100) != walks);
}

TEST_CASE("cycle neighbour choice is uniform") {
  const Graph g = testing::cycle_graph(10);
  WalkConfig cfg;
  cfg.walks_per_node = 100;
  cfg.walk_length = 101;
  cfg.window = 2;
  const auto walks = generate_walks(g, build_alias_tables(g, cfg), cfg, 5);
  std::vector<NodeId> next(10);
  for (std::size_t i = 0; i < 10; ++i) next[g.require(testing::n(i))] = g.require(testing::n((i + 1) % 10));
  std::size_t forward = 0, steps = 0;
  for (const auto& w : walks) {
    for (std::size_t t = 1; t < w.nodes.size(); ++t) {
      forward += w.nodes[t] == next[w.nodes[t - 1]];
      ++steps;
    }
  }
  REQUIRE(steps == 100000);
  CHECK(std::abs(static_cast<double>(forward) / steps - 0.5) < 0.02);
}

TEST_CASE("extract pairs") {
  const Walk w{{0, 1, 2}};
  const std::vector<Walk> walks{w};
  CHECK(extract_pairs(walks, 2) == std::vector<ContextPair>{{0, 1}, {1, 2}});
  CHECK(extract_pairs(walks, 3) == std::vector<ContextPair>{{0, 1}, {0, 2}, {1, 2}});
}

TEST_CASE("pair count closed form matches enumeration") {
  for (std::size_t l = 2; l <= 40; ++l) {
    for (std::size_t k = 2; k <= l; ++k) {
      Walk w;
      for (std::size_t i = 0; i < l; ++i) w.nodes.push_back(static_cast<NodeId>(i));
      const std::vector<Walk> walks{w};
      CHECK(extract_pairs(walks, k).size() == pair_count(l, k));
    }
  }
  const Graph g = testing::random_connected(25, 10, 1);
  WalkConfig cfg;  // r=5, l=40, k=10
  const auto walks = generate_walks(g, build_alias_tables(g, cfg), cfg, 1);
  const auto pairs = extract_pairs(walks, cfg.window);
  CHECK(pairs.size() == 25 * 5 * pair_count(40, 10));
  // Every context lies within k-1 steps of its focus along some walk.
  for (const auto& pr : pairs) CHECK(*hop_distance(g, pr.focus, pr.context, 100) <= cfg.window - 1);
}

TEST_CASE("walk dump") {
  const Graph g = make_graph({{"a", "b"}});
  WalkConfig cfg;
  cfg.walks_per_node = 1;
  cfg.walk_length = 3;
  cfg.window = 2;
  const auto walks = generate_walks(g, build_alias_tables(g, cfg), cfg, 1);
  testing::TempDir dir;
  write_walks(g, walks, dir / "walks.txt");
  CHECK(testing::read_file(dir / "walks.txt") == "a b a\nb a b\n");
}

}  // TEST_SUITE
