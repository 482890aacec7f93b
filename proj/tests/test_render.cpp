#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "vsal/render.hpp"

using namespace vsal;

namespace {

// Direct transcription of the rendering formulas: every node and edge term
// at every pixel, softmin without stabilization, and a 2-D renormalized
// kernel instead of the separable blur.
ImageTensor naive_render(const Layout& l, const Graph& g, const RenderParams& p,
                         const std::vector<int>& samples) {
  const int n = l.size();
  double xmin = l.x(0), xmax = l.x(0), ymin = l.y(0), ymax = l.y(0);
  for (int i = 1; i < n; ++i) {
    xmin = std::min(xmin, l.x(i));
    xmax = std::max(xmax, l.x(i));
    ymin = std::min(ymin, l.y(i));
    ymax = std::max(ymax, l.y(i));
  }
  std::vector<double> nx(n), ny(n);
  for (int i = 0; i < n; ++i) {
    nx[i] = xmax - xmin < 1e-9 ? p.h / 2.0 : (l.x(i) - xmin) / (xmax - xmin) * p.h;
    ny[i] = ymax - ymin < 1e-9 ? p.w / 2.0 : (l.y(i) - ymin) / (ymax - ymin) * p.w;
  }
  ImageTensor m(p.h, p.w, 255.0);
  for (int a = 0; a < p.h; ++a) {
    for (int b = 0; b < p.w; ++b) {
      double pv = 1, pe = 1;
      for (int i = 0; i < n; ++i) {
        double d2 = (a - nx[i]) * (a - nx[i]) + (b - ny[i]) * (b - ny[i]);
        pv *= 1 - std::exp(-d2 / (2 * p.r * p.r));
      }
      for (std::size_t e = 0; e < g.edges().size(); ++e) {
        auto [i, j] = g.edges()[e];
        int ns = samples[e];
        double num = 0, den = 0;
        for (int k = 1; k <= ns; ++k) {
          double t = double(k) / (ns + 1);
          double sx = (1 - t) * nx[i] + t * nx[j], sy = (1 - t) * ny[i] + t * ny[j];
          double dk = std::hypot(a - sx, b - sy);
          num += std::exp(-p.beta * dk) * dk;
          den += std::exp(-p.beta * dk);
        }
        double dd = num / den;
        pe *= 1 - std::exp(-dd * dd / (2 * p.delta * p.delta));
      }
      m.at(a, b, 0) = 255 * pe;
      m.at(a, b, 1) = 255 * pv * pe;
      m.at(a, b, 2) = 255 * (pv * pe + 1 - pe);
    }
  }
  ImageTensor out(p.h, p.w, 0.0);
  const int k = p.kernel_radius;
  double mass = 0;
  for (int u = -k; u <= k; ++u)
    for (int v = -k; v <= k; ++v) mass += gaussian_kernel_value(u, v, p.smooth_sigma);
  for (int a = 0; a < p.h; ++a)
    for (int b = 0; b < p.w; ++b)
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int u = -k; u <= k; ++u)
          for (int v = -k; v <= k; ++v)
            acc += gaussian_kernel_value(u, v, p.smooth_sigma) *
                   m.at(std::clamp(a + u, 0, p.h - 1), std::clamp(b + v, 0, p.w - 1), c);
        out.at(a, b, c) = acc / mass;
      }
  return out;
}

Layout random_layout(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Layout l(n);
  for (double& v : l.xy) v = u(rng);
  return l;
}

RenderParams small_params(int res) {
  RenderParams p;
  p.h = p.w = res;
  p.kernel_radius = 3;
  p.smooth_sigma = 1.5;
  return p;
}

}  // namespace

TEST_CASE("single node on a white canvas") {
  Layout l(1);
  RenderParams p = small_params(32);
  ImageTensor img = render(l, Graph::empty(1), p);
  // Degenerate axes put the node at (16, 16); the center pixel is red-ish.
  CHECK(img.at(16, 16, 0) > 200);
  CHECK(img.at(16, 16, 1) < 200);
  CHECK(img.at(16, 16, 2) < 200);
  CHECK(img.at(0, 0, 0) == doctest::Approx(255.0));
  CHECK(img.at(0, 0, 1) == doctest::Approx(255.0));
}

TEST_CASE("normalize_coords examples") {
  Layout l(3);
  l.xy = {0, 5, 1, 5, 2, 5};
  Layout nl = normalize_coords(l, 10, 20);
  CHECK(nl.x(0) == 0.0);
  CHECK(nl.x(2) == 10.0);
  CHECK(nl.y(1) == 10.0);
}

TEST_CASE("edge sample counts") {
  Graph g(3, {{0, 1}, {1, 2}});
  Layout nl(3);
  nl.xy = {0, 0, 100, 0, 100, 3};
  RenderParams p;
  CHECK(edge_sample_counts(g, nl, p) == std::vector<int>{50, 8});
  p.edge_samples = 12;
  CHECK(edge_sample_counts(g, nl, p) == std::vector<int>{12, 12});
}

TEST_CASE("render matches the direct formula") {
  std::mt19937_64 rng(7);
  RenderParams p = small_params(28);
  for (int trial = 0; trial < 5; ++trial) {
    int n = 3 + trial;
    Graph g = Graph::cycle(n).with_changes({{0, 2}}, {});
    Layout l = random_layout(n, rng);
    auto samples = edge_sample_counts(g, normalize_coords(l, p.h, p.w), p);
    ImageTensor fast = render(l, g, p, samples);
    ImageTensor slow = naive_render(l, g, p, samples);
    double worst = 0;
    for (std::size_t k = 0; k < fast.px.size(); ++k)
      worst = std::max(worst, std::abs(fast.px[k] - slow.px[k]));
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("smoothing preserves the mean of an interior blob") {
  ImageTensor m(40, 40, 0.0);
  for (int a = 15; a < 25; ++a)
    for (int b = 15; b < 25; ++b)
      for (int c = 0; c < 3; ++c) m.at(a, b, c) = 100.0;
  ImageTensor s = gaussian_smooth(m, 5, 2.0);
  double before = 0, after = 0;
  for (std::size_t k = 0; k < m.px.size(); ++k) {
    before += m.px[k];
    after += s.px[k];
  }
  CHECK(after == doctest::Approx(before).epsilon(1e-12));
  ImageTensor flat(20, 20, 42.0);
  ImageTensor sf = gaussian_smooth(flat, 5, 2.0);
  for (double v : sf.px) CHECK(v == doctest::Approx(42.0));
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(99);
  RenderParams p = small_params(32);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 3; ++trial) {
    Graph g = Graph::cycle(4 + trial);
    Layout l = random_layout(g.node_count(), rng);
    auto samples = edge_sample_counts(g, normalize_coords(l, p.h, p.w), p);
    std::vector<double> w(static_cast<std::size_t>(p.h) * p.w * 3);
    for (double& v : w) v = nd(rng);
    auto objective = [&](const Layout& x) {
      ImageTensor img = render(x, g, p, samples);
      double s = 0;
      for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * img.px[k];
      return s;
    };
    auto grad = render_backward(l, g, p, w, samples);
    const double eps = 1e-6;
    double num2 = 0, diff2 = 0;
    for (std::size_t k = 0; k < l.xy.size(); ++k) {
      Layout a = l, b = l;
      a.xy[k] += eps;
      b.xy[k] -= eps;
      double fd = (objective(a) - objective(b)) / (2 * eps);
      diff2 += (fd - grad[k]) * (fd - grad[k]);
      num2 += fd * fd;
    }
    CHECK(std::sqrt(diff2) <= 1e-4 * std::sqrt(num2) + 1e-6);
  }
}

TEST_CASE("gradient is independent of the thread count") {
  std::mt19937_64 rng(3);
  RenderParams p = small_params(40);
  Graph g = Graph::complete(5);
  Layout l = random_layout(5, rng);
  std::vector<double> w(static_cast<std::size_t>(p.h) * p.w * 3, 1.0);
  setenv("VSAL_THREADS", "1", 1);
  auto one = render_backward(l, g, p, w);
  ImageTensor img1 = render(l, g, p);
  setenv("VSAL_THREADS", "4", 1);
  auto four = render_backward(l, g, p, w);
  ImageTensor img4 = render(l, g, p);
  unsetenv("VSAL_THREADS");
  CHECK(one == four);
  CHECK(img1 == img4);
}

TEST_CASE("gradient is local to the pixels a node touches") {
  // A loss on far-away pixels does not move an isolated node.
  Layout l(2);
  l.xy = {0, 0, 1, 1};
  RenderParams p = small_params(64);
  std::vector<double> w(static_cast<std::size_t>(p.h) * p.w * 3, 0.0);
  for (int c = 0; c < 3; ++c) w[(static_cast<std::size_t>(63) * p.w + 63) * 3 + c] = 1.0;
  auto grad = render_backward(l, Graph::empty(2), p, w, {});
  // Node 0 sits at pixel (0, 0), far from (63, 63).
  CHECK(grad[0] == 0.0);
  CHECK(grad[1] == 0.0);
}

TEST_CASE("png round trip") {
  std::mt19937_64 rng(1);
  Graph g = Graph::cycle(5);
  RenderParams p = small_params(24);
  ImageTensor img = render(random_layout(5, rng), g, p);
  auto path = std::filesystem::temp_directory_path() / "vsal_render_test.png";
  export_png(img, path);
  ImageTensor back = read_png(path);
  REQUIRE(back.h == img.h);
  REQUIRE(back.w == img.w);
  for (std::size_t k = 0; k < img.px.size(); ++k)
    CHECK(back.px[k] == std::clamp(std::nearbyint(img.px[k]), 0.0, 255.0));
  std::filesystem::remove(path);
}

TEST_CASE("render parameter validation") {
  RenderParams p = small_params(16);
  p.kernel_radius = 5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.kernel_radius = 2;
  p.r = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
