#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "vsal/layout.hpp"

using namespace vsal;

namespace {

// Independent O(E^2) crossing count via parametric segment intersection.
int crossings_by_parameters(const Graph& g, const Layout& l) {
  const auto& e = g.edges();
  int count = 0;
  for (std::size_t a = 0; a < e.size(); ++a)
    for (std::size_t b = a + 1; b < e.size(); ++b) {
      auto [i, j] = e[a];
      auto [u, v] = e[b];
      if (i == u || i == v || j == u || j == v) continue;
      double px = l.x(i), py = l.y(i), rx = l.x(j) - px, ry = l.y(j) - py;
      double qx = l.x(u), qy = l.y(u), sx = l.x(v) - qx, sy = l.y(v) - qy;
      double den = rx * sy - ry * sx;
      if (std::abs(den) < 1e-15) continue;
      double t = ((qx - px) * sy - (qy - py) * sx) / den;
      double s = ((qx - px) * ry - (qy - py) * rx) / den;
      if (t > 0 && t < 1 && s > 0 && s < 1) ++count;
    }
  return count;
}

}  // namespace

TEST_CASE("circular layout puts every node on the circle") {
  Rng rng(0);
  InitialLayoutSpec spec;
  spec.r1 = 2.5;
  Layout l = initial_layout(7, spec, rng);
  for (int i = 0; i < 7; ++i) {
    CHECK(std::hypot(l.x(i), l.y(i)) == doctest::Approx(2.5).epsilon(1e-12));
    double angle = 2 * std::numbers::pi * i / 7;
    CHECK(l.x(i) == doctest::Approx(2.5 * std::cos(angle)));
  }
}

TEST_CASE("spiral layout example") {
  Rng rng(0);
  InitialLayoutSpec spec;
  spec.kind = InitialKind::Spiral;
  spec.r2 = 0.3;
  Layout l = initial_layout(4, spec, rng);
  CHECK(l.x(0) == 0.0);
  CHECK(l.x(3) == doctest::Approx(3 * std::cos(0.9)));
  CHECK(l.y(3) == doctest::Approx(3 * std::sin(0.9)));
}

TEST_CASE("shell partition and uniform bound") {
  CHECK(shell_partition(7, 2) == std::vector<int>{4, 3});
  CHECK(shell_partition(9, 3) == std::vector<int>{3, 3, 3});
  Rng rng(3);
  InitialLayoutSpec spec;
  spec.kind = InitialKind::Uniform;
  spec.bound = 0.5;
  Layout l = initial_layout(200, spec, rng);
  for (double v : l.xy) {
    CHECK(v >= -0.5);
    CHECK(v <= 0.5);
  }
  CHECK_THROWS(parse_initial_kind("hexagonal"));
}

TEST_CASE("spring moves never exceed the temperature") {
  Rng rng(12);
  GenParams gp;
  for (int trial = 0; trial < 20; ++trial) {
    Graph g = gen_planar(10 + trial % 5, gp, rng).graph;
    InitialLayoutSpec spec;
    spec.kind = InitialKind::Uniform;
    Layout init = initial_layout(g.node_count(), spec, rng);
    std::vector<SpringIteration> trace;
    SpringParams sp;
    Layout out = spring_refine(g, init, sp, &trace);
    CHECK(out.finite());
    REQUIRE_FALSE(trace.empty());
    double t = sp.t0;
    for (const auto& it : trace) {
      CHECK(it.temperature == doctest::Approx(t));
      CHECK(it.max_displacement <= it.temperature * (1 + 1e-12));
      t *= sp.cooling_factor;
    }
  }
}

TEST_CASE("spring separates coincident nodes") {
  Graph g = Graph::path(3);
  Layout init(3);
  SpringParams sp;
  Layout out = spring_refine(g, init, sp);
  CHECK(out.finite());
  CHECK(std::hypot(out.x(0) - out.x(1), out.y(0) - out.y(1)) > 0);
}

TEST_CASE("Kamada-Kawai energy is non-increasing") {
  Rng rng(21);
  GenParams gp;
  for (int trial = 0; trial < 20; ++trial) {
    Graph g = gen_hamiltonian(8 + trial % 6, gp, rng).graph;
    InitialLayoutSpec spec;
    spec.kind = InitialKind::Uniform;
    Layout init = initial_layout(g.node_count(), spec, rng);
    std::vector<double> energy;
    Layout out = kamada_kawai_refine(g, init, shortest_paths(g), KKParams{}, &energy);
    CHECK(out.finite());
    REQUIRE(energy.size() >= 2);
    for (std::size_t k = 1; k < energy.size(); ++k)
      CHECK(energy[k] <= energy[k - 1] * (1 + 1e-12));
    CHECK(energy.back() < energy.front());
    CHECK(energy.back() == doctest::Approx(stress_energy(out, shortest_paths(g), 1.0)));
  }
}

TEST_CASE("stress energy of an exact embedding is zero") {
  Graph g = Graph::path(3);
  Layout l(3);
  l.x(1) = 1;
  l.x(2) = 2;
  CHECK(stress_energy(l, shortest_paths(g), 1.0) == doctest::Approx(0.0));
  l.x(2) = 3;
  // Pairs (1,2): (2-1)^2 = 1; (0,2): (3-2)^2/4 = 0.25.
  CHECK(stress_energy(l, shortest_paths(g), 1.0) == doctest::Approx(1.25));
}

TEST_CASE("crossing count examples") {
  Graph k4 = Graph::complete(4);
  Layout square(4);
  square.xy = {0, 0, 1, 0, 1, 1, 0, 1};
  CHECK(count_edge_crossings(k4, square) == 1);
  Rng rng(0);
  Layout circ = initial_layout(5, InitialLayoutSpec{}, rng);
  CHECK(count_edge_crossings(Graph::complete(5), circ) == 5);
  CHECK(count_edge_crossings(Graph::cycle(5), circ) == 0);
}

TEST_CASE("crossing count matches the parametric oracle") {
  Rng rng(44);
  GenParams gp;
  InitialLayoutSpec spec;
  spec.kind = InitialKind::Uniform;
  for (int trial = 0; trial < 50; ++trial) {
    Graph g = gen_non_planar(8 + trial % 5, gp, rng).graph;
    Layout l = initial_layout(g.node_count(), spec, rng);
    CHECK(count_edge_crossings(g, l) == crossings_by_parameters(g, l));
  }
}

TEST_CASE("center_and_scale") {
  Layout l(3);
  l.xy = {1, 1, 3, 1, 2, 4};
  Layout c = center_and_scale(l);
  double mx = 0, my = 0, big = 0;
  for (int i = 0; i < 3; ++i) {
    mx += c.x(i);
    my += c.y(i);
    big = std::max({big, std::abs(c.x(i)), std::abs(c.y(i))});
  }
  CHECK(mx == doctest::Approx(0.0));
  CHECK(my == doctest::Approx(0.0));
  CHECK(big == doctest::Approx(1.0));
}

TEST_CASE("layout file round trip is exact") {
  Rng rng(1);
  InitialLayoutSpec spec;
  spec.kind = InitialKind::Uniform;
  Layout l = initial_layout(9, spec, rng);
  auto path = std::filesystem::temp_directory_path() / "vsal_layout_test.txt";
  write_layout_file(l, path);
  CHECK(read_layout_file(path) == l);
  std::filesystem::remove(path);
}

TEST_CASE("reference layout is deterministic") {
  Graph g = Graph::cycle(9);
  Rng a(5), b(5);
  InitialLayoutSpec spec;
  spec.kind = InitialKind::Uniform;
  Layout la = reference_layout(g, spec, SpringParams{}, KKParams{}, a);
  Layout lb = reference_layout(g, spec, SpringParams{}, KKParams{}, b);
  CHECK(la == lb);
}
