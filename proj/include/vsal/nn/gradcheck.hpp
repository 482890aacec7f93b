#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vsal/nn/tape.hpp"

namespace vsal::nn {

/// ||a - b||_2 / max(||a||_2, ||b||_2, 1e-12).
double relative_error(const std::vector<double>& a, const std::vector<double>& b);

/// Central differences of f at x with step h, one coordinate at a time.
std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h);

struct CheckResult {
  std::string name;
  double error = 0.0;
};

/// Tape gradient of every primitive against central differences (h = 1e-6).
std::vector<CheckResult> check_primitives(std::uint64_t seed);

/// Gradient-penalty term differentiated through a recorded backward pass,
/// compared with central differences over the discriminator parameters, on
/// a two-layer encoder plus linear head. Returns per-instance errors.
std::vector<double> check_double_backprop(int instances, std::uint64_t seed);

struct RenderCheckOptions {
  int graphs = 20;
  int resolution = 32;
  int max_nodes = 8;
  double step = 1e-3;  // pixels; layouts are drawn over [0, resolution]^2
  std::uint64_t seed = 0;
  bool flip_edge_gradient = false;  // mutation fixture
};

/// Analytic render gradient of a random pixel-weighted loss against central
/// differences. Returns per-graph errors.
std::vector<double> check_render(const RenderCheckOptions& opt);

}  // namespace vsal::nn
