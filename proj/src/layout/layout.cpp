#include "vsal/layout.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "vsal/error.hpp"

namespace vsal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kCoincident = 1e-9;
constexpr double kJitter = 1e-6;

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

// Deterministic pseudo-random unit direction for a coincident pair, so
// spring_refine stays a pure function of its inputs.
void jitter_direction(int u, int v, double& dx, double& dy) {
  const double angle =
      kTwoPi * std::fmod(0.6180339887498949 * (u * 7919.0 + v * 104729.0 + 1.0), 1.0);
  dx = std::cos(angle) * kJitter;
  dy = std::sin(angle) * kJitter;
}

}  // namespace

InitialKind parse_initial_kind(std::string_view name) {
  if (name == "circular") return InitialKind::Circular;
  if (name == "spiral") return InitialKind::Spiral;
  if (name == "shell") return InitialKind::Shell;
  if (name == "uniform") return InitialKind::Uniform;
  throw std::invalid_argument("unknown initial layout '" + std::string(name) + "'");
}

void InitialLayoutSpec::validate() const {
  require(r1 > 0 && r2 > 0 && bound > 0, "r1, r2 and b must be positive");
  require(shells >= 1, "shell count must be >= 1");
  require(static_cast<int>(shell_radii.size()) == shells, "need one radius per shell");
  for (std::size_t j = 1; j < shell_radii.size(); ++j) {
    require(shell_radii[j] > shell_radii[j - 1], "shell radii must be strictly increasing");
  }
}

std::vector<int> shell_partition(int n, int shells) {
  std::vector<int> sizes(shells, 0);
  const int per = (n + shells - 1) / shells;
  int left = n;
  for (int j = 0; j < shells; ++j) {
    sizes[j] = std::min(per, left);
    left -= sizes[j];
  }
  return sizes;
}

Layout initial_layout(int n, const InitialLayoutSpec& spec, Rng& rng) {
  require(n >= 1, "layout needs n >= 1");
  spec.validate();
  Layout l(n);
  switch (spec.kind) {
    case InitialKind::Circular:
      for (int i = 0; i < n; ++i) {
        l.x(i) = spec.r1 * std::cos(kTwoPi * i / n);
        l.y(i) = spec.r1 * std::sin(kTwoPi * i / n);
      }
      break;
    case InitialKind::Spiral:
      for (int i = 0; i < n; ++i) {
        l.x(i) = i * std::cos(i * spec.r2);
        l.y(i) = i * std::sin(i * spec.r2);
      }
      break;
    case InitialKind::Shell: {
      auto sizes = shell_partition(n, spec.shells);
      int i = 0;
      for (int j = 0; j < spec.shells; ++j) {
        for (int k = 0; k < sizes[j]; ++k, ++i) {
          l.x(i) = spec.shell_radii[j] * std::cos(kTwoPi * k / sizes[j]);
          l.y(i) = spec.shell_radii[j] * std::sin(kTwoPi * k / sizes[j]);
        }
      }
      break;
    }
    case InitialKind::Uniform: {
      std::uniform_real_distribution<double> u(-spec.bound, spec.bound);
      for (double& v : l.xy) v = u(rng);
      break;
    }
  }
  return l;
}

void SpringParams::validate() const {
  require(area > 0, "area must be positive");
  require(cooling_factor > 0 && cooling_factor < 1, "cooling factor must lie in (0, 1)");
  require(t0 > 0, "initial temperature must be positive");
  require(iterations >= 0, "iterations must be non-negative");
}

Layout spring_refine(const Graph& g, const Layout& init, const SpringParams& p,
                     std::vector<SpringIteration>* trace) {
  p.validate();
  const int n = g.node_count();
  if (init.size() != n) throw std::invalid_argument("layout does not match graph");
  Layout l = init;
  if (n <= 1) return l;
  const double k = spring_optimal_distance(p.area, n);
  const double k2 = k * k;
  double t = p.t0;
  std::vector<double> fx(n), fy(n);
  for (int it = 0; it < p.iterations; ++it) {
    std::fill(fx.begin(), fx.end(), 0.0);
    std::fill(fy.begin(), fy.end(), 0.0);
    for (int u = 0; u < n; ++u) {
      for (int v = u + 1; v < n; ++v) {
        double dx = l.x(u) - l.x(v), dy = l.y(u) - l.y(v);
        double dist = std::hypot(dx, dy);
        if (dist < kCoincident) {
          jitter_direction(u, v, dx, dy);
          dist = std::hypot(dx, dy);
        }
        // Repulsion pushes u away from v.
        const double f = p.c_rep * k2 / dist;
        fx[u] += f * dx / dist;
        fy[u] += f * dy / dist;
        fx[v] -= f * dx / dist;
        fy[v] -= f * dy / dist;
      }
    }
    for (auto [u, v] : g.edges()) {
      double dx = l.x(u) - l.x(v), dy = l.y(u) - l.y(v);
      double dist = std::hypot(dx, dy);
      if (dist < kCoincident) continue;
      // Attraction pulls the endpoints together.
      const double f = p.c_att * dist * dist / k;
      fx[u] -= f * dx / dist;
      fy[u] -= f * dy / dist;
      fx[v] += f * dx / dist;
      fy[v] += f * dy / dist;
    }
    double max_move = 0.0;
    for (int u = 0; u < n; ++u) {
      const double mag = std::hypot(fx[u], fy[u]);
      if (mag <= 0.0) continue;
      const double step = std::min(t, mag);
      l.x(u) += step * fx[u] / mag;
      l.y(u) += step * fy[u] / mag;
      max_move = std::max(max_move, step);
    }
    if (trace) trace->push_back({t, max_move});
    t *= p.cooling_factor;
    if (max_move < p.tolerance) break;
  }
  return l;
}

void KKParams::validate() const {
  require(spring_constant > 0 && learning_rate > 0 && max_iterations > 0 &&
              convergence_threshold > 0,
          "Kamada-Kawai parameters must be positive");
}

double stress_energy(const Layout& l, const DistanceMatrix& d, double spring_constant) {
  if (l.size() != d.n) throw std::invalid_argument("layout does not match distances");
  double e = 0.0;
  for (int i = 0; i < d.n; ++i) {
    for (int j = i + 1; j < d.n; ++j) {
      const double dij = d(i, j);
      const double diff = std::hypot(l.x(i) - l.x(j), l.y(i) - l.y(j)) - dij;
      e += spring_constant / (dij * dij) * diff * diff;
    }
  }
  return e;
}

namespace {

// Energy terms that involve node u at position (x, y).
double node_energy(const Layout& l, const DistanceMatrix& d, double c, int u, double x,
                   double y) {
  double e = 0.0;
  for (int j = 0; j < d.n; ++j) {
    if (j == u) continue;
    const double dij = d(u, j);
    const double diff = std::hypot(x - l.x(j), y - l.y(j)) - dij;
    e += c / (dij * dij) * diff * diff;
  }
  return e;
}

}  // namespace

Layout kamada_kawai_refine(const Graph& g, const Layout& init, const DistanceMatrix& d,
                           const KKParams& p, std::vector<double>* energy_trace) {
  p.validate();
  const int n = g.node_count();
  if (init.size() != n || d.n != n) throw std::invalid_argument("layout does not match graph");
  Layout l = init;
  if (energy_trace) energy_trace->push_back(stress_energy(l, d, p.spring_constant));
  if (n <= 1) return l;
  const double c = p.spring_constant;
  for (int it = 0; it < p.max_iterations; ++it) {
    double max_change = 0.0;
    for (int u = 0; u < n; ++u) {
      double gx = 0.0, gy = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == u) continue;
        const double dx = l.x(u) - l.x(j), dy = l.y(u) - l.y(j);
        const double dist = std::hypot(dx, dy);
        if (dist < kCoincident) continue;
        const double kuj = c / (d(u, j) * d(u, j));
        gx += kuj * dx * (dist - d(u, j)) / dist;
        gy += kuj * dy * (dist - d(u, j)) / dist;
      }
      const double before = node_energy(l, d, c, u, l.x(u), l.y(u));
      double step = p.learning_rate;
      for (int h = 0; h <= p.max_halvings; ++h, step *= 0.5) {
        const double nx = l.x(u) - step * gx, ny = l.y(u) - step * gy;
        if (node_energy(l, d, c, u, nx, ny) <= before) {
          max_change = std::max({max_change, std::abs(nx - l.x(u)), std::abs(ny - l.y(u))});
          l.x(u) = nx;
          l.y(u) = ny;
          break;
        }
      }
    }
    if (energy_trace) energy_trace->push_back(stress_energy(l, d, c));
    if (max_change < p.convergence_threshold) break;
  }
  return l;
}

Layout reference_layout(const Graph& g, const InitialLayoutSpec& spec, const SpringParams& sp,
                        const KKParams& kp, Rng& rng) {
  Layout init = initial_layout(g.node_count(), spec, rng);
  Layout sprung = spring_refine(g, init, sp);
  return kamada_kawai_refine(g, sprung, shortest_paths(g), kp);
}

namespace {

double orient(double ax, double ay, double bx, double by, double cx, double cy) {
  return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
}

int sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

int count_edge_crossings(const Graph& g, const Layout& l) {
  const auto& e = g.edges();
  int crossings = 0;
  for (std::size_t a = 0; a < e.size(); ++a) {
    const auto [p, q] = e[a];
    for (std::size_t b = a + 1; b < e.size(); ++b) {
      const auto [r, s] = e[b];
      if (p == r || p == s || q == r || q == s) continue;
      const int o1 = sign(orient(l.x(p), l.y(p), l.x(q), l.y(q), l.x(r), l.y(r)));
      const int o2 = sign(orient(l.x(p), l.y(p), l.x(q), l.y(q), l.x(s), l.y(s)));
      const int o3 = sign(orient(l.x(r), l.y(r), l.x(s), l.y(s), l.x(p), l.y(p)));
      const int o4 = sign(orient(l.x(r), l.y(r), l.x(s), l.y(s), l.x(q), l.y(q)));
      if (o1 * o2 < 0 && o3 * o4 < 0) {
        ++crossings;
      } else if (o1 == 0 && o2 == 0 && o3 == 0 && o4 == 0) {
        // Collinear: project onto the dominant axis and test for an overlap
        // of positive length.
        const bool use_x = std::abs(l.x(q) - l.x(p)) >= std::abs(l.y(q) - l.y(p));
        auto coord = [&](int v) { return use_x ? l.x(v) : l.y(v); };
        const double lo1 = std::min(coord(p), coord(q)), hi1 = std::max(coord(p), coord(q));
        const double lo2 = std::min(coord(r), coord(s)), hi2 = std::max(coord(r), coord(s));
        if (std::min(hi1, hi2) > std::max(lo1, lo2)) ++crossings;
      }
    }
  }
  return crossings;
}

Layout center_and_scale(const Layout& l) {
  Layout out = l;
  const int n = l.size();
  if (n == 0) return out;
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += l.x(i);
    my += l.y(i);
  }
  mx /= n;
  my /= n;
  double scale = 0.0;
  for (int i = 0; i < n; ++i) {
    out.x(i) -= mx;
    out.y(i) -= my;
    scale = std::max({scale, std::abs(out.x(i)), std::abs(out.y(i))});
  }
  if (scale > 1e-12) {
    for (double& v : out.xy) v /= scale;
  }
  return out;
}

void write_layout_file(const Layout& l, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[64];
  for (int i = 0; i < l.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", l.x(i), l.y(i));
    out << buf;
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Layout read_layout_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Layout l;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    double x = 0, y = 0;
    if (!(row >> x >> y)) {
      throw ParseError(path.string() + ": malformed coordinate at line " +
                       std::to_string(line_no));
    }
    l.xy.push_back(x);
    l.xy.push_back(y);
  }
  return l;
}

}  // namespace vsal
