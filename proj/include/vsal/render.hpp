#pragma once

#include <filesystem>
#include <vector>

#include "vsal/graph.hpp"
#include "vsal/layout.hpp"

namespace vsal {

/// H x W x 3 pixel grid, row-major with interleaved channels:
/// index (p * W + q) * 3 + c.
struct ImageTensor {
  int h = 0;
  int w = 0;
  std::vector<double> px;

  ImageTensor() = default;
  ImageTensor(int height, int width, double fill = 255.0)
      : h(height), w(width), px(static_cast<std::size_t>(height) * width * 3, fill) {}

  double& at(int p, int q, int c) { return px[(static_cast<std::size_t>(p) * w + q) * 3 + c]; }
  double at(int p, int q, int c) const {
    return px[(static_cast<std::size_t>(p) * w + q) * 3 + c];
  }
  bool operator==(const ImageTensor&) const = default;
};

struct RenderParams {
  int h = 224;
  int w = 224;
  double r = 2.0;      // node influence radius (pixels)
  double delta = 1.0;  // edge influence (pixels)
  double beta = 10.0;  // softmin sharpness
  int edge_samples = 0;  // fixed N when > 0, otherwise length-dependent
  int kernel_radius = 5;
  double smooth_sigma = 2.0;

  void validate() const;
};

/// Per-axis affine map of [min, max] onto [0, H] (first coordinate) and
/// [0, W] (second). A degenerate axis maps to its midpoint.
Layout normalize_coords(const Layout& l, int h, int w);

/// Sample count per edge: N = clamp(ceil(len / 2), 8, 64) for an edge of
/// pixel length len, or the fixed value from params.
std::vector<int> edge_sample_counts(const Graph& g, const Layout& normalized,
                                    const RenderParams& p);

/// Blends each pixel toward red with weight
/// 1 - prod_i (1 - exp(-d_i^2 / (2 r^2))).
void render_nodes(ImageTensor& m, const Layout& normalized, double r);

/// Blends each pixel toward blue with weight 1 - prod_e (1 - exp(-D_e^2 / (2 delta^2))),
/// where D_e is the softmin distance to the N interior samples of edge e.
void render_edges(ImageTensor& m, const Layout& normalized, const std::vector<Edge>& edges,
                  double delta, double beta, const std::vector<int>& samples);

/// Renormalized (2K+1)^2 Gaussian blur with clamp-to-edge borders.
ImageTensor gaussian_smooth(const ImageTensor& m, int k, double sigma);

/// Unnormalized kernel value 1/(2 pi sigma^2) exp(-(u^2+v^2)/(2 sigma^2)).
double gaussian_kernel_value(int u, int v, double sigma);

/// normalize -> nodes -> edges -> smooth, starting from a white canvas.
ImageTensor render(const Layout& l, const Graph& g, const RenderParams& p);

/// As above with per-edge sample counts held fixed.
ImageTensor render(const Layout& l, const Graph& g, const RenderParams& p,
                   const std::vector<int>& samples);

/// Gradient of sum(d_image * render(l)) with respect to the raw layout
/// coordinates; returned in Layout storage order.
std::vector<double> render_backward(const Layout& l, const Graph& g, const RenderParams& p,
                                    const std::vector<double>& d_image);

std::vector<double> render_backward(const Layout& l, const Graph& g, const RenderParams& p,
                                    const std::vector<double>& d_image,
                                    const std::vector<int>& samples);

namespace detail {
/// render_backward split into the node-rendering and edge-rendering
/// contributions (their sum is the full gradient). Used by gradcheck.
std::pair<std::vector<double>, std::vector<double>> render_backward_split(
    const Layout& l, const Graph& g, const RenderParams& p, const std::vector<double>& d_image,
    const std::vector<int>& samples);
}  // namespace detail

/// 8-bit RGB PNG, channels rounded half-to-even then clamped to [0, 255].
void export_png(const ImageTensor& m, const std::filesystem::path& path);

/// Decodes an 8-bit PNG into an RGB tensor (values 0..255).
ImageTensor read_png(const std::filesystem::path& path);

}  // namespace vsal
