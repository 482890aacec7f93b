#include "vsal/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "vsal/error.hpp"
#include "vsal/parallel.hpp"

namespace vsal {

namespace {

// Exponent above which a term is skipped (exp(-40) < 2^-53).
constexpr double kNegligibleExponent = 40.0;
constexpr double kDegenerateRange = 1e-9;
constexpr int kRowsPerChunk = 8;

constexpr double kWhite = 255.0;

struct Segment {
  double ax, ay, bx, by;
  int n_samples;
  std::vector<double> sx, sy;  // interior sample points

  Segment(double ax_, double ay_, double bx_, double by_, int n)
      : ax(ax_), ay(ay_), bx(bx_), by(by_), n_samples(n), sx(n), sy(n) {
    for (int k = 1; k <= n; ++k) {
      const double t = static_cast<double>(k) / (n + 1);
      sx[k - 1] = (1.0 - t) * ax + t * bx;
      sy[k - 1] = (1.0 - t) * ay + t * by;
    }
  }
};

double point_segment_distance(double px, double py, const Segment& s) {
  const double vx = s.bx - s.ax, vy = s.by - s.ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - s.ax) * vx + (py - s.ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (s.ax + t * vx), dy = py - (s.ay + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

std::vector<Segment> make_segments(const Graph& g, const Layout& nl,
                                   const std::vector<int>& samples) {
  std::vector<Segment> segs;
  segs.reserve(g.edges().size());
  for (std::size_t e = 0; e < g.edges().size(); ++e) {
    auto [i, j] = g.edges()[e];
    segs.emplace_back(nl.x(i), nl.y(i), nl.x(j), nl.y(j), samples[e]);
  }
  return segs;
}

// Per-pixel node and edge survival products with the factors that entered
// them; shared by the forward pass and the gradient so both see the same
// terms in the same order.
struct PixelTerms {
  double pv = 1.0;  // prod (1 - g_i)
  double pe = 1.0;  // prod (1 - h_e)
  std::vector<int> node_ids;
  std::vector<double> node_g;
  std::vector<int> edge_ids;
  std::vector<double> edge_h;
  std::vector<double> edge_d;  // softmin distance D_e
};

class PixelEvaluator {
 public:
  PixelEvaluator(const Layout& nl, const std::vector<Segment>& segs, double r, double delta,
                 double beta)
      : nl_(nl), segs_(segs), r_(r), delta_(delta), beta_(beta) {
    node_cut2_ = 2.0 * r * r * kNegligibleExponent;
    edge_cut_ = std::sqrt(2.0 * delta * delta * kNegligibleExponent);
  }

  void nodes(double p, double q, PixelTerms& t) const {
    t.pv = 1.0;
    t.node_ids.clear();
    t.node_g.clear();
    for (int i = 0; i < nl_.size(); ++i) {
      const double dx = p - nl_.x(i), dy = q - nl_.y(i);
      const double d2 = dx * dx + dy * dy;
      if (d2 > node_cut2_) continue;
      const double g = std::exp(-d2 / (2.0 * r_ * r_));
      t.pv *= 1.0 - g;
      t.node_ids.push_back(i);
      t.node_g.push_back(g);
    }
  }

  // Softmin-weighted distance from (p, q) to the interior samples of s.
  // Samples with beta (d_k - d_min) > 40 carry weight below exp(-40) and
  // are left out.
  double softmin_distance(double p, double q, const Segment& s) const {
    const int kept = near_samples(p, q, s);
    double num = 0.0, den = 0.0;
    for (int j = 0; j < kept; ++j) {
      const double wk = std::exp(-beta_ * (dist_[j] - dmin_));
      num += wk * dist_[j];
      den += wk;
    }
    return num / den;
  }

  void edges(double p, double q, PixelTerms& t) const {
    t.pe = 1.0;
    t.edge_ids.clear();
    t.edge_h.clear();
    t.edge_d.clear();
    for (std::size_t e = 0; e < segs_.size(); ++e) {
      const Segment& s = segs_[e];
      const double lo_x = std::min(s.ax, s.bx) - edge_cut_, hi_x = std::max(s.ax, s.bx) + edge_cut_;
      const double lo_y = std::min(s.ay, s.by) - edge_cut_, hi_y = std::max(s.ay, s.by) + edge_cut_;
      if (p < lo_x || p > hi_x || q < lo_y || q > hi_y) continue;
      if (point_segment_distance(p, q, s) > edge_cut_) continue;
      const double d = softmin_distance(p, q, s);
      const double h = std::exp(-d * d / (2.0 * delta_ * delta_));
      t.pe *= 1.0 - h;
      t.edge_ids.push_back(static_cast<int>(e));
      t.edge_h.push_back(h);
      t.edge_d.push_back(d);
    }
  }

  // Accumulates dL/dD_e into sample-point gradients of segment endpoints.
  void edge_backward(double p, double q, const Segment& s, double d_soft, double grad_d,
                     double* ga, double* gb) const {
    const int kept = near_samples(p, q, s);
    const int n = s.n_samples;
    double den = 0.0;
    w_.resize(kept);
    for (int j = 0; j < kept; ++j) {
      w_[j] = std::exp(-beta_ * (dist_[j] - dmin_));
      den += w_[j];
    }
    for (int j = 0; j < kept; ++j) {
      if (dist_[j] <= 0.0) continue;
      const int k = idx_[j];
      // dD/dd_k = (w_k / W) (1 - beta (d_k - D))
      const double gd = grad_d * w_[j] / den * (1.0 - beta_ * (dist_[j] - d_soft));
      const double gx = gd * (s.sx[k] - p) / dist_[j];
      const double gy = gd * (s.sy[k] - q) / dist_[j];
      const double t = static_cast<double>(k + 1) / (n + 1);
      ga[0] += (1.0 - t) * gx;
      ga[1] += (1.0 - t) * gy;
      gb[0] += t * gx;
      gb[1] += t * gy;
    }
  }

  double r() const { return r_; }
  double delta() const { return delta_; }

 private:
  // Fills dist_/idx_ with the samples inside the softmin cutoff, in sample
  // order, and sets dmin_. Returns how many were kept.
  int near_samples(double p, double q, const Segment& s) const {
    const int n = s.n_samples;
    d2_.resize(n);
    double d2min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      const double dx = p - s.sx[k], dy = q - s.sy[k];
      d2_[k] = dx * dx + dy * dy;
      d2min = std::min(d2min, d2_[k]);
    }
    dmin_ = std::sqrt(d2min);
    const double reach = dmin_ + kNegligibleExponent / beta_;
    const double reach2 = reach * reach;
    dist_.clear();
    idx_.clear();
    for (int k = 0; k < n; ++k) {
      if (d2_[k] > reach2) continue;
      dist_.push_back(d2_[k] == d2min ? dmin_ : std::sqrt(d2_[k]));
      idx_.push_back(k);
    }
    return static_cast<int>(dist_.size());
  }

  const Layout& nl_;
  const std::vector<Segment>& segs_;
  double r_, delta_, beta_;
  double node_cut2_, edge_cut_;
  mutable std::vector<double> d2_, dist_, w_;
  mutable std::vector<int> idx_;
  mutable double dmin_ = 0.0;
};

// Smoothing weights for one axis: normalized 1-D Gaussian. The 2-D kernel
// exp(-(u^2+v^2)/(2 s^2)) / (2 pi s^2) renormalized to unit mass is the
// outer product of these.
std::vector<double> axis_weights(int k, double sigma) {
  std::vector<double> w(2 * k + 1);
  double sum = 0.0;
  for (int u = -k; u <= k; ++u) {
    w[u + k] = std::exp(-(u * u) / (2.0 * sigma * sigma));
    sum += w[u + k];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Adjoint of gaussian_smooth.
std::vector<double> smooth_transpose(const std::vector<double>& g, int h, int w, int k,
                                     double sigma) {
  const auto wt = axis_weights(k, sigma);
  // Forward: tmp = blur along p, out = blur tmp along q.
  std::vector<double> gtmp(g.size(), 0.0), gin(g.size(), 0.0);
  for (int p = 0; p < h; ++p) {
    for (int q = 0; q < w; ++q) {
      for (int v = -k; v <= k; ++v) {
        const int qq = std::clamp(q + v, 0, w - 1);
        for (int c = 0; c < 3; ++c) {
          gtmp[(static_cast<std::size_t>(p) * w + qq) * 3 + c] +=
              wt[v + k] * g[(static_cast<std::size_t>(p) * w + q) * 3 + c];
        }
      }
    }
  }
  for (int p = 0; p < h; ++p) {
    for (int u = -k; u <= k; ++u) {
      const int pp = std::clamp(p + u, 0, h - 1);
      for (int q = 0; q < w; ++q) {
        for (int c = 0; c < 3; ++c) {
          gin[(static_cast<std::size_t>(pp) * w + q) * 3 + c] +=
              wt[u + k] * gtmp[(static_cast<std::size_t>(p) * w + q) * 3 + c];
        }
      }
    }
  }
  return gin;
}

struct NormalizationAxis {
  double lo = 0.0;
  double range = 0.0;
  int argmin = 0;
  int argmax = 0;
  bool degenerate = false;
};

NormalizationAxis axis_stats(const Layout& l, int axis) {
  NormalizationAxis a;
  auto coord = [&](int i) { return axis == 0 ? l.x(i) : l.y(i); };
  double lo = coord(0), hi = coord(0);
  for (int i = 1; i < l.size(); ++i) {
    if (coord(i) < lo) {
      lo = coord(i);
      a.argmin = i;
    }
    if (coord(i) > hi) {
      hi = coord(i);
      a.argmax = i;
    }
  }
  a.lo = lo;
  a.range = hi - lo;
  a.degenerate = a.range < kDegenerateRange;
  return a;
}

}  // namespace

void RenderParams::validate() const {
  if (h <= 0 || w <= 0 || r <= 0 || delta <= 0 || beta <= 0 || kernel_radius <= 0 ||
      smooth_sigma <= 0 || edge_samples < 0) {
    throw std::invalid_argument("render parameters must be positive");
  }
  if (kernel_radius > std::min(h, w) / 4) {
    throw std::invalid_argument("kernel radius exceeds a quarter of the image size");
  }
}

Layout normalize_coords(const Layout& l, int h, int w) {
  Layout out(l.size());
  if (l.size() == 0) return out;
  const double extent[2] = {static_cast<double>(h), static_cast<double>(w)};
  for (int axis = 0; axis < 2; ++axis) {
    const auto a = axis_stats(l, axis);
    for (int i = 0; i < l.size(); ++i) {
      const double v = axis == 0 ? l.x(i) : l.y(i);
      const double nv = a.degenerate ? extent[axis] / 2.0 : (v - a.lo) / a.range * extent[axis];
      (axis == 0 ? out.x(i) : out.y(i)) = nv;
    }
  }
  return out;
}

std::vector<int> edge_sample_counts(const Graph& g, const Layout& normalized,
                                    const RenderParams& p) {
  std::vector<int> counts;
  counts.reserve(g.edges().size());
  for (auto [i, j] : g.edges()) {
    if (p.edge_samples > 0) {
      counts.push_back(p.edge_samples);
      continue;
    }
    const double len =
        std::hypot(normalized.x(i) - normalized.x(j), normalized.y(i) - normalized.y(j));
    counts.push_back(std::clamp(static_cast<int>(std::ceil(len / 2.0)), 8, 64));
  }
  return counts;
}

void render_nodes(ImageTensor& m, const Layout& normalized, double r) {
  std::vector<Segment> none;
  PixelEvaluator ev(normalized, none, r, 1.0, 1.0);
  PixelTerms t;
  for (int p = 0; p < m.h; ++p) {
    for (int q = 0; q < m.w; ++q) {
      ev.nodes(p, q, t);
      const double a = 1.0 - t.pv;
      const double red[3] = {255.0, 0.0, 0.0};
      for (int c = 0; c < 3; ++c) m.at(p, q, c) = (1.0 - a) * m.at(p, q, c) + a * red[c];
    }
  }
}

void render_edges(ImageTensor& m, const Layout& normalized, const std::vector<Edge>& edges,
                  double delta, double beta, const std::vector<int>& samples) {
  std::vector<Segment> segs;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    auto [i, j] = edges[e];
    segs.emplace_back(normalized.x(i), normalized.y(i), normalized.x(j), normalized.y(j),
                      samples.at(e));
  }
  PixelEvaluator ev(normalized, segs, 1.0, delta, beta);
  PixelTerms t;
  for (int p = 0; p < m.h; ++p) {
    for (int q = 0; q < m.w; ++q) {
      ev.edges(p, q, t);
      const double a = 1.0 - t.pe;
      const double blue[3] = {0.0, 0.0, 255.0};
      for (int c = 0; c < 3; ++c) m.at(p, q, c) = (1.0 - a) * m.at(p, q, c) + a * blue[c];
    }
  }
}

double gaussian_kernel_value(int u, int v, double sigma) {
  return std::exp(-(u * u + v * v) / (2.0 * sigma * sigma)) /
         (2.0 * std::numbers::pi * sigma * sigma);
}

ImageTensor gaussian_smooth(const ImageTensor& m, int k, double sigma) {
  const auto wt = axis_weights(k, sigma);
  ImageTensor tmp(m.h, m.w, 0.0), out(m.h, m.w, 0.0);
  for (int p = 0; p < m.h; ++p) {
    for (int q = 0; q < m.w; ++q) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int u = -k; u <= k; ++u) acc += wt[u + k] * m.at(std::clamp(p + u, 0, m.h - 1), q, c);
        tmp.at(p, q, c) = acc;
      }
    }
  }
  for (int p = 0; p < m.h; ++p) {
    for (int q = 0; q < m.w; ++q) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int v = -k; v <= k; ++v) acc += wt[v + k] * tmp.at(p, std::clamp(q + v, 0, m.w - 1), c);
        out.at(p, q, c) = acc;
      }
    }
  }
  return out;
}

ImageTensor render(const Layout& l, const Graph& g, const RenderParams& p) {
  p.validate();
  const Layout nl = normalize_coords(l, p.h, p.w);
  return render(l, g, p, edge_sample_counts(g, nl, p));
}

ImageTensor render(const Layout& l, const Graph& g, const RenderParams& p,
                   const std::vector<int>& samples) {
  p.validate();
  if (l.size() != g.node_count()) throw std::invalid_argument("layout does not match graph");
  const Layout nl = normalize_coords(l, p.h, p.w);
  const auto segs = make_segments(g, nl, samples);
  ImageTensor m(p.h, p.w, kWhite);
  const int chunks = (p.h + kRowsPerChunk - 1) / kRowsPerChunk;
  // Nodes then edges on a white canvas; per pixel this is
  // (255 PE, 255 PV PE, 255 (PV PE + 1 - PE)).
  parallel_chunks(chunks, [&](int chunk) {
    PixelEvaluator ev(nl, segs, p.r, p.delta, p.beta);
    PixelTerms t;
    const int p_end = std::min(p.h, (chunk + 1) * kRowsPerChunk);
    for (int row = chunk * kRowsPerChunk; row < p_end; ++row) {
      for (int col = 0; col < p.w; ++col) {
        ev.nodes(row, col, t);
        ev.edges(row, col, t);
        const double av = 1.0 - t.pv, ae = 1.0 - t.pe;
        double rgb[3] = {kWhite, kWhite, kWhite};
        const double red[3] = {255.0, 0.0, 0.0}, blue[3] = {0.0, 0.0, 255.0};
        for (int c = 0; c < 3; ++c) {
          rgb[c] = (1.0 - av) * rgb[c] + av * red[c];
          rgb[c] = (1.0 - ae) * rgb[c] + ae * blue[c];
          m.at(row, col, c) = rgb[c];
        }
      }
    }
  });
  return gaussian_smooth(m, p.kernel_radius, p.smooth_sigma);
}

namespace {

// Splits the coordinate gradient into the part flowing through node
// rendering and the part flowing through edge rendering, both already
// mapped back through normalization.
struct GradientParts {
  std::vector<double> nodes;
  std::vector<double> edges;
};

std::vector<double> normalization_backward(const Layout& l, const Layout& nl, int h, int w,
                                           const std::vector<double>& g_norm) {
  const int n = l.size();
  std::vector<double> g(static_cast<std::size_t>(n) * 2, 0.0);
  const double extent[2] = {static_cast<double>(h), static_cast<double>(w)};
  for (int axis = 0; axis < 2; ++axis) {
    const auto a = axis_stats(l, axis);
    if (a.degenerate) continue;
    const double s = extent[axis] / a.range;
    double to_min = 0.0, to_max = 0.0;
    for (int i = 0; i < n; ++i) {
      const double gi = g_norm[2 * i + axis];
      const double ni = axis == 0 ? nl.x(i) : nl.y(i);
      g[2 * i + axis] += s * gi;
      to_min += gi * (-s + ni / a.range);
      to_max += gi * (-ni / a.range);
    }
    g[2 * a.argmin + axis] += to_min;
    g[2 * a.argmax + axis] += to_max;
  }
  return g;
}

GradientParts render_backward_parts(const Layout& l, const Graph& g, const RenderParams& p,
                                    const std::vector<double>& d_image,
                                    const std::vector<int>& samples) {
  p.validate();
  const int n = g.node_count();
  if (l.size() != n) throw std::invalid_argument("layout does not match graph");
  if (d_image.size() != static_cast<std::size_t>(p.h) * p.w * 3) {
    throw std::invalid_argument("image gradient has the wrong size");
  }
  const Layout nl = normalize_coords(l, p.h, p.w);
  const auto segs = make_segments(g, nl, samples);
  const auto g2 = smooth_transpose(d_image, p.h, p.w, p.kernel_radius, p.smooth_sigma);

  const int chunks = (p.h + kRowsPerChunk - 1) / kRowsPerChunk;
  std::vector<std::vector<double>> node_part(chunks), edge_part(chunks);
  parallel_chunks(chunks, [&](int chunk) {
    auto& gn = node_part[chunk];
    auto& ge = edge_part[chunk];
    gn.assign(static_cast<std::size_t>(n) * 2, 0.0);
    ge.assign(static_cast<std::size_t>(n) * 2, 0.0);
    PixelEvaluator ev(nl, segs, p.r, p.delta, p.beta);
    PixelTerms t;
    std::vector<double> prefix, suffix;
    const double inv_r2 = 1.0 / (p.r * p.r);
    const double inv_d2 = 1.0 / (p.delta * p.delta);
    const int p_end = std::min(p.h, (chunk + 1) * kRowsPerChunk);
    for (int row = chunk * kRowsPerChunk; row < p_end; ++row) {
      for (int col = 0; col < p.w; ++col) {
        const double* gp = &g2[(static_cast<std::size_t>(row) * p.w + col) * 3];
        if (gp[0] == 0.0 && gp[1] == 0.0 && gp[2] == 0.0) continue;
        ev.nodes(row, col, t);
        ev.edges(row, col, t);
        if (t.node_ids.empty() && t.edge_ids.empty()) continue;
        const double d_pe = 255.0 * (gp[0] + t.pv * gp[1] + (t.pv - 1.0) * gp[2]);
        const double d_pv = 255.0 * t.pe * (gp[1] + gp[2]);

        // Product of the other factors via prefix/suffix products, so a
        // factor equal to zero (pixel on a node) is handled exactly.
        auto others = [&](const std::vector<double>& f) {
          const std::size_t m = f.size();
          prefix.assign(m + 1, 1.0);
          suffix.assign(m + 1, 1.0);
          for (std::size_t k = 0; k < m; ++k) prefix[k + 1] = prefix[k] * (1.0 - f[k]);
          for (std::size_t k = m; k-- > 0;) suffix[k] = suffix[k + 1] * (1.0 - f[k]);
        };

        others(t.node_g);
        for (std::size_t k = 0; k < t.node_ids.size(); ++k) {
          const int i = t.node_ids[k];
          const double d_g = -d_pv * prefix[k] * suffix[k + 1];
          const double gk = t.node_g[k];
          gn[2 * i] += d_g * gk * (row - nl.x(i)) * inv_r2;
          gn[2 * i + 1] += d_g * gk * (col - nl.y(i)) * inv_r2;
        }

        others(t.edge_h);
        for (std::size_t k = 0; k < t.edge_ids.size(); ++k) {
          const int e = t.edge_ids[k];
          const double d_h = -d_pe * prefix[k] * suffix[k + 1];
          const double d_soft = d_h * (-t.edge_h[k] * t.edge_d[k] * inv_d2);
          auto [i, j] = g.edges()[e];
          ev.edge_backward(row, col, segs[e], t.edge_d[k], d_soft, &ge[2 * i], &ge[2 * j]);
        }
      }
    }
  });

  std::vector<double> gn_total(static_cast<std::size_t>(n) * 2, 0.0), ge_total = gn_total;
  for (int c = 0; c < chunks; ++c) {
    for (std::size_t k = 0; k < gn_total.size(); ++k) {
      gn_total[k] += node_part[c][k];
      ge_total[k] += edge_part[c][k];
    }
  }
  return {normalization_backward(l, nl, p.h, p.w, gn_total),
          normalization_backward(l, nl, p.h, p.w, ge_total)};
}

}  // namespace

std::vector<double> render_backward(const Layout& l, const Graph& g, const RenderParams& p,
                                    const std::vector<double>& d_image) {
  p.validate();
  const Layout nl = normalize_coords(l, p.h, p.w);
  return render_backward(l, g, p, d_image, edge_sample_counts(g, nl, p));
}

std::vector<double> render_backward(const Layout& l, const Graph& g, const RenderParams& p,
                                    const std::vector<double>& d_image,
                                    const std::vector<int>& samples) {
  auto parts = render_backward_parts(l, g, p, d_image, samples);
  for (std::size_t k = 0; k < parts.nodes.size(); ++k) parts.nodes[k] += parts.edges[k];
  return parts.nodes;
}

namespace detail {

std::pair<std::vector<double>, std::vector<double>> render_backward_split(
    const Layout& l, const Graph& g, const RenderParams& p, const std::vector<double>& d_image,
    const std::vector<int>& samples) {
  auto parts = render_backward_parts(l, g, p, d_image, samples);
  return {std::move(parts.nodes), std::move(parts.edges)};
}

}  // namespace detail

void export_png(const ImageTensor& m, const std::filesystem::path& path) {
  std::vector<png_byte> bytes(m.px.size());
  for (std::size_t k = 0; k < m.px.size(); ++k) {
    bytes[k] = static_cast<png_byte>(std::clamp(std::nearbyint(m.px[k]), 0.0, 255.0));
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(m.w);
  image.height = static_cast<png_uint_32>(m.h);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot write PNG " + path.string() + ": " + msg);
  }
}

ImageTensor read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> bytes(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  ImageTensor m(static_cast<int>(image.height), static_cast<int>(image.width), 0.0);
  for (std::size_t k = 0; k < bytes.size(); ++k) m.px[k] = bytes[k];
  return m;
}

}  // namespace vsal
