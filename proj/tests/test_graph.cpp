#include <random>

#include "doctest.h"
#include "vsal/error.hpp"
#include "vsal/graph.hpp"

using namespace vsal;

namespace {

Graph random_graph(int n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution flip(p);
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (flip(rng)) e.emplace_back(i, j);
  return Graph(n, e);
}

// Independent all-pairs oracle.
std::vector<double> floyd_warshall(const Graph& g) {
  const int n = g.node_count();
  const double inf = 1e18;
  std::vector<double> d(n * n, inf);
  for (int i = 0; i < n; ++i) d[i * n + i] = 0;
  for (auto [i, j] : g.edges()) d[i * n + j] = d[j * n + i] = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (d[i * n + k] + d[k * n + j] < d[i * n + j]) d[i * n + j] = d[i * n + k] + d[k * n + j];
  for (double& v : d)
    if (v >= inf) v = n;
  return d;
}

}  // namespace

TEST_CASE("parse_graph builds P3") {
  Graph g = parse_graph("3\n0 1\n1 2");
  CHECK(g == Graph::path(3));
  CHECK(g.edge_count() == 2);
}

TEST_CASE("parse_graph collapses duplicate and reversed pairs") {
  Graph g = parse_graph("2\n0 1\n1 0");
  CHECK(g.edge_count() == 1);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 0));
}

TEST_CASE("parse_graph errors name the line") {
  CHECK_THROWS_WITH_AS(parse_graph("2\n0 0"), "self-loop at line 2", ParseError);
  CHECK_THROWS_WITH_AS(parse_graph("3\n0 1\n1 x"), "malformed edge line at line 3", ParseError);
  CHECK_THROWS_WITH_AS(parse_graph("3\n0 5"), "index out of range at line 2", ParseError);
  CHECK_THROWS_AS(parse_graph(""), ParseError);
  CHECK_THROWS_AS(parse_graph("-2\n"), ParseError);
}

TEST_CASE("parse_graph tolerates CRLF and blank lines") {
  Graph g = parse_graph("3\r\n\r\n0 1\r\n2 1\r\n");
  CHECK(g == Graph::path(3));
}

TEST_CASE("round trip: serialize then parse yields the same graph") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 1 + static_cast<int>(rng() % 15);
    Graph g = random_graph(n, 0.3, rng);
    CHECK(parse_graph(serialize_graph(g)) == g);
    CHECK(parse_adjacency_binary(serialize_adjacency_binary(g)) == g);
  }
}

TEST_CASE("adjacency stays symmetric with empty diagonal") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    Graph g = random_graph(9, 0.4, rng);
    Graph h = g.with_changes({{0, 5}, {2, 7}}, {{1, 2}});
    for (const Graph* x : {&g, &h}) {
      const int n = x->node_count();
      for (int i = 0; i < n; ++i) {
        CHECK(x->adjacency()[i * n + i] == 0);
        for (int j = 0; j < n; ++j) CHECK(x->adjacency()[i * n + j] == x->adjacency()[j * n + i]);
      }
      int count = 0;
      for (auto v : x->adjacency()) count += v;
      CHECK(count == 2 * x->edge_count());
    }
    CHECK(h.has_edge(0, 5));
    CHECK_FALSE(h.has_edge(1, 2));
  }
  CHECK_THROWS_AS(Graph(3, {{1, 1}}), std::invalid_argument);
}

TEST_CASE("shortest_paths examples") {
  auto d = shortest_paths(Graph::path(3));
  CHECK(d(0, 2) == 2);
  auto c3 = shortest_paths(Graph::cycle(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(c3(i, j) == (i == j ? 0 : 1));
  auto iso = shortest_paths(Graph::empty(2));
  CHECK(iso(0, 1) == 2);
}

TEST_CASE("shortest_paths agrees with Floyd-Warshall on random graphs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + static_cast<int>(rng() % 12);
    Graph g = random_graph(n, 0.25, rng);
    auto d = shortest_paths(g);
    CHECK(d.d == floyd_warshall(g));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          if (d(i, k) < n && d(k, j) < n) CHECK(d(i, j) <= d(i, k) + d(k, j));
  }
}

TEST_CASE("connected_and_degree_stats examples") {
  auto p3 = connected_and_degree_stats(Graph::path(3));
  CHECK(p3.is_connected);
  CHECK(p3.degrees == std::vector<int>{1, 2, 1});
  auto iso = connected_and_degree_stats(Graph::empty(2));
  CHECK_FALSE(iso.is_connected);
  CHECK(iso.degrees == std::vector<int>{0, 0});
  auto c4 = connected_and_degree_stats(Graph::cycle(4));
  CHECK(c4.is_connected);
  CHECK(c4.degrees == std::vector<int>{2, 2, 2, 2});
}
