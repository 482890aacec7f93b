#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "vsal/datagen.hpp"
#include "vsal/error.hpp"
#include "vsal/oracles.hpp"

using namespace vsal;

namespace {

Graph erdos_renyi(int n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution flip(p);
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (flip(rng)) e.emplace_back(i, j);
  return Graph(n, e);
}

// Brute-force claw scan over all 4-subsets; independent of the
// neighbor-list scan in is_claw_free.
bool claw_free_by_subsets(const Graph& g) {
  const int n = g.node_count();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        for (int d = c + 1; d < n; ++d) {
          int q[4] = {a, b, c, d};
          for (int ctr = 0; ctr < 4; ++ctr) {
            bool claw = true;
            for (int x = 0; x < 4 && claw; ++x) {
              if (x == ctr) continue;
              if (!g.has_edge(q[ctr], q[x])) claw = false;
              for (int y = x + 1; y < 4 && claw; ++y)
                if (y != ctr && g.has_edge(q[x], q[y])) claw = false;
            }
            if (claw) return false;
          }
        }
  return true;
}

}  // namespace

TEST_CASE("is_tree examples") {
  CHECK(is_tree(Graph::path(3)));
  CHECK_FALSE(is_tree(Graph::cycle(3)));
  CHECK_FALSE(is_tree(Graph(4, {{0, 1}, {2, 3}})));
  CHECK(is_tree(Graph::empty(1)));
}

TEST_CASE("is_claw_free examples") {
  CHECK_FALSE(is_claw_free(Graph::star(3)));
  CHECK(is_claw_free(Graph::cycle(6)));
  CHECK(is_claw_free(Graph::complete(4)));
}

TEST_CASE("is_claw_free matches the 4-subset scan") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Graph g = erdos_renyi(4 + static_cast<int>(rng() % 6), 0.4, rng);
    CHECK(is_claw_free(g) == claw_free_by_subsets(g));
  }
}

TEST_CASE("is_planar on Kuratowski fixtures") {
  CHECK_FALSE(is_planar(Graph::complete(5)));
  CHECK_FALSE(is_planar(Graph::complete_bipartite(3, 3)));
  CHECK(is_planar(Graph::complete(4)));
  CHECK(is_planar(Graph::complete_bipartite(2, 7)));
  CHECK(is_planar(Graph::empty(1)));
  CHECK(is_planar(Graph::empty(0)));
}

TEST_CASE("is_planar agrees with frozen networkx labels") {
  std::ifstream in(std::string(VSAL_TEST_DATA) + "/planarity_cases.txt");
  REQUIRE(in);
  std::string line;
  int cases = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    int label = 0, n = 0;
    row >> label >> n;
    std::vector<Edge> edges;
    std::string tok;
    while (row >> tok) {
      auto dash = tok.find('-');
      edges.emplace_back(std::stoi(tok.substr(0, dash)), std::stoi(tok.substr(dash + 1)));
    }
    Graph g(n, edges);
    CAPTURE(line);
    CHECK(is_planar(g) == (label == 1));
    // Edge bound is a necessary condition.
    if (is_planar(g) && n >= 3) CHECK(g.edge_count() <= 3 * n - 6);
    ++cases;
  }
  CHECK(cases > 400);
}

TEST_CASE("is_planar accepts random trees and rejects planted K5/K33") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + static_cast<int>(rng() % 30);
    CHECK(is_planar(random_spanning_tree(n, rng)));
  }
  GenParams p;
  for (int trial = 0; trial < 30; ++trial) {
    auto s = gen_non_planar(6 + trial % 10, p, rng);
    CHECK_FALSE(is_planar(s.graph));
  }
}

TEST_CASE("is_planar is invariant under relabeling") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 5 + static_cast<int>(rng() % 8);
    Graph g = erdos_renyi(n, 0.45, rng);
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    CHECK(is_planar(g) == is_planar(g.permuted(perm)));
  }
}

TEST_CASE("Hamiltonicity examples") {
  CHECK(is_hamiltonian(Graph::cycle(5)));
  CHECK_FALSE(is_hamiltonian(Graph::star(3)));
  CHECK(is_hamiltonian(Graph::complete(4)));
  CHECK(brute_force_hamiltonian(Graph::cycle(5)));
  CHECK_FALSE(brute_force_hamiltonian(Graph::path(4)));
  CHECK_FALSE(brute_force_hamiltonian(Graph::empty(3)));
  CHECK_FALSE(is_hamiltonian(Graph::complete(2)));
  CHECK_FALSE(is_hamiltonian(Graph(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}})));
}

TEST_CASE("Hamiltonicity capacity errors") {
  CHECK_THROWS_AS(is_hamiltonian(Graph::cycle(25)), CapacityError);
  CHECK_THROWS_AS(brute_force_hamiltonian(Graph::cycle(11)), CapacityError);
  CHECK(is_hamiltonian(Graph::cycle(24)));
}

TEST_CASE("Held-Karp agrees with brute force on Erdos-Renyi graphs") {
  std::mt19937_64 rng(31337);
  int positives = 0;
  for (int trial = 0; trial < 200; ++trial) {
    int n = 4 + static_cast<int>(rng() % 5);
    Graph g = erdos_renyi(n, 0.3, rng);
    CHECK(is_hamiltonian(g) == brute_force_hamiltonian(g));
    positives += is_hamiltonian(g);
  }
  // Guard against a vacuous comparison.
  CHECK(positives > 0);
}

TEST_CASE("line graphs of trees are claw-free") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + static_cast<int>(rng() % 20);
    CHECK(is_claw_free(line_graph(random_spanning_tree(n, rng))));
  }
}

TEST_CASE("task names round trip") {
  for (Task t : {Task::Ham, Task::Planar, Task::Claw, Task::Tree}) {
    CHECK(parse_task(task_name(t)) == t);
  }
  CHECK_THROWS_AS(parse_task("bogus"), std::invalid_argument);
}
