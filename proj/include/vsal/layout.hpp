#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <vector>

#include "vsal/datagen.hpp"
#include "vsal/graph.hpp"

namespace vsal {

/// n x 2 node coordinates, stored as (x, y) pairs in node order.
struct Layout {
  std::vector<double> xy;

  Layout() = default;
  explicit Layout(int n) : xy(static_cast<std::size_t>(n) * 2, 0.0) {}

  int size() const { return static_cast<int>(xy.size() / 2); }
  double& x(int i) { return xy[2 * static_cast<std::size_t>(i)]; }
  double& y(int i) { return xy[2 * static_cast<std::size_t>(i) + 1]; }
  double x(int i) const { return xy[2 * static_cast<std::size_t>(i)]; }
  double y(int i) const { return xy[2 * static_cast<std::size_t>(i) + 1]; }

  bool finite() const {
    for (double v : xy)
      if (!std::isfinite(v)) return false;
    return true;
  }
  bool operator==(const Layout&) const = default;
};

enum class InitialKind { Circular, Spiral, Shell, Uniform };

InitialKind parse_initial_kind(std::string_view name);

struct InitialLayoutSpec {
  InitialKind kind = InitialKind::Circular;
  double r1 = 1.0;
  double r2 = 0.2;
  int shells = 2;
  std::vector<double> shell_radii{0.5, 1.0};
  double bound = 1.0;

  void validate() const;
};

/// Node i sits at angle 2*pi*i/n on the r1 circle (Circular), at
/// (i cos(i r2), i sin(i r2)) (Spiral), on shell j at angle 2*pi*k/n_j
/// where k is its index within the shell (Shell), or uniformly in
/// [-b, b]^2 (Uniform; the only kind that consumes rng).
Layout initial_layout(int n, const InitialLayoutSpec& spec, Rng& rng);

/// Shell sizes: ceil(n/S) per shell in order, the last shell takes the rest.
std::vector<int> shell_partition(int n, int shells);

struct SpringParams {
  double area = 1.0;
  int iterations = 50;
  double t0 = 0.1;  // 0.1 * sqrt(area)
  double cooling_factor = 0.95;
  double c_rep = 1.0;
  double c_att = 1.0;
  // Stop once the largest per-node move falls below this.
  double tolerance = 1e-7;

  void validate() const;
};

struct SpringIteration {
  double temperature = 0.0;
  double max_displacement = 0.0;
};

/// Fruchterman-Reingold force simulation: repulsion C_rep k^2/dist between
/// all pairs, attraction C_att dist^2/k along edges, moves capped at the
/// current temperature, with k = sqrt(area / n).
Layout spring_refine(const Graph& g, const Layout& init, const SpringParams& p,
                     std::vector<SpringIteration>* trace = nullptr);

inline double spring_optimal_distance(double area, int n) { return std::sqrt(area / n); }

struct KKParams {
  double spring_constant = 1.0;
  double learning_rate = 0.1;
  int max_iterations = 300;
  double convergence_threshold = 1e-5;
  int max_halvings = 20;

  void validate() const;
};

/// Energy sum over unordered pairs of (c / d_ij^2) (|p_i - p_j| - d_ij)^2.
double stress_energy(const Layout& l, const DistanceMatrix& d, double spring_constant);

/// Per-node gradient descent on the stress energy with backtracking step
/// halving. `energy_trace`, when given, receives the energy before the
/// first sweep and after every sweep; it never increases.
Layout kamada_kawai_refine(const Graph& g, const Layout& init, const DistanceMatrix& d,
                           const KKParams& p, std::vector<double>* energy_trace = nullptr);

/// Kamada(Spring(initial)).
Layout reference_layout(const Graph& g, const InitialLayoutSpec& spec, const SpringParams& sp,
                        const KKParams& kp, Rng& rng);

/// Number of edge pairs without a shared endpoint whose open segments
/// cross; collinear overlapping pairs count once.
int count_edge_crossings(const Graph& g, const Layout& l);

/// Shifts to zero mean and scales so the largest |coordinate| is 1.
Layout center_and_scale(const Layout& l);

void write_layout_file(const Layout& l, const std::filesystem::path& path);
Layout read_layout_file(const std::filesystem::path& path);

}  // namespace vsal
