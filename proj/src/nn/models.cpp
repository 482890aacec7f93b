#include "vsal/nn/models.hpp"

#include <cmath>
#include <stdexcept>

namespace vsal::nn {

int ParamSet::add(std::string name, Mat value) {
  names.push_back(std::move(name));
  values.push_back(std::move(value));
  return static_cast<int>(values.size()) - 1;
}

bool ParamSet::finite() const {
  for (const Mat& m : values)
    if (!m.allFinite()) return false;
  return true;
}

void add_dense(ParamSet& p, const std::string& prefix, int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> u(-bound, bound);
  Mat w(fan_in, fan_out);
  // Row-major fill so the draw order does not depend on storage order.
  for (int i = 0; i < fan_in; ++i)
    for (int j = 0; j < fan_out; ++j) w(i, j) = u(rng);
  p.add(prefix + ".w", std::move(w));
  p.add(prefix + ".b", Mat::Zero(1, fan_out));
}

std::vector<Var> bind(Tape& t, const ParamSet& p) {
  std::vector<Var> out;
  out.reserve(p.size());
  for (const Mat& m : p.values) out.push_back(t.constant(m));
  return out;
}

Mat normalized_adjacency(const Graph& g) {
  const int n = g.node_count();
  Mat a = Mat::Identity(n, n);
  for (auto [i, j] : g.edges()) a(i, j) = a(j, i) = 1.0;
  Eigen::VectorXd dinv(n);
  for (int i = 0; i < n; ++i) dinv(i) = 1.0 / std::sqrt(a.row(i).sum());
  return dinv.asDiagonal() * a * dinv.asDiagonal();
}

GraphContext make_context(const Graph& g) {
  GraphContext ctx;
  ctx.graph = &g;
  ctx.a_hat = normalized_adjacency(g);
  ctx.features.resize(g.node_count(), 1);
  for (int i = 0; i < g.node_count(); ++i) ctx.features(i, 0) = std::log1p(g.degree(i));
  return ctx;
}

Var graph_encode(const Mat& a_hat, const Var& h0, const std::vector<Var>& weights, int first,
                 int layers) {
  Tape& t = *h0.tape();
  const Var a = t.constant(a_hat);
  Var h = h0;
  for (int l = 0; l < layers; ++l) {
    const Var& w = weights[first + 2 * l];
    const Var& b = weights[first + 2 * l + 1];
    h = tanh(add_row(matmul(a, matmul(h, w)), b));
  }
  return h;
}

namespace {

Var dense(const Var& x, const std::vector<Var>& p, int at) {
  return add_row(matmul(x, p[at]), p[at + 1]);
}

void check_layers(int layers) {
  if (layers < 1) throw std::invalid_argument("encoder needs at least one layer");
}

}  // namespace

Generator Generator::init(const GeneratorConfig& cfg, Rng& rng) {
  check_layers(cfg.encoder_layers);
  if (cfg.d_g < 1 || cfg.d_z < 1 || cfg.coord_hidden < 1 || !(cfg.noise_std > 0)) {
    throw std::invalid_argument("generator widths and noise_std must be positive");
  }
  Generator g;
  g.cfg = cfg;
  for (int l = 0; l < cfg.encoder_layers; ++l)
    add_dense(g.params, "gen.enc" + std::to_string(l), l == 0 ? 1 : cfg.d_g, cfg.d_g, rng);
  add_dense(g.params, "gen.noise0", cfg.d_z, cfg.d_g, rng);
  add_dense(g.params, "gen.noise1", cfg.d_g, cfg.d_g, rng);
  add_dense(g.params, "gen.coord0", 2 * cfg.d_g, cfg.coord_hidden, rng);
  add_dense(g.params, "gen.coord1", cfg.coord_hidden, 2, rng);
  return g;
}

Mat sample_noise(const GeneratorConfig& cfg, Rng& rng) {
  std::normal_distribution<double> nd(0.0, cfg.noise_std);
  Mat z(1, cfg.d_z);
  for (int k = 0; k < cfg.d_z; ++k) z(0, k) = nd(rng);
  return z;
}

Var generator_encode(const GraphContext& ctx, const Var& features, const std::vector<Var>& p,
                     const GeneratorConfig& cfg) {
  return graph_encode(ctx.a_hat, features, p, 0, cfg.encoder_layers);
}

Var generator_decode(const Var& h_graph, const Var& z, const std::vector<Var>& p,
                     const GeneratorConfig& cfg) {
  const int base = 2 * cfg.encoder_layers;
  Var hz = dense(tanh(dense(z, p, base)), p, base + 2);
  Var cond = concat_cols(h_graph, tile_rows(hz, h_graph.rows()));
  return dense(tanh(dense(cond, p, base + 4)), p, base + 6);
}

Layout generate_layout(const Graph& g, const Mat& z, const Generator& gen) {
  Tape t;
  NoGrad off(t);
  const auto p = bind(t, gen.params);
  const GraphContext ctx = make_context(g);
  Var h = generator_encode(ctx, t.constant(ctx.features), p, gen.cfg);
  return mat_to_layout(generator_decode(h, t.constant(z), p, gen.cfg).value());
}

Discriminator Discriminator::init(const DiscriminatorConfig& cfg, Rng& rng) {
  check_layers(cfg.encoder_layers);
  if (cfg.d_s < 1) throw std::invalid_argument("discriminator width must be positive");
  Discriminator d;
  d.cfg = cfg;
  for (int l = 0; l < cfg.encoder_layers; ++l)
    add_dense(d.params, "dis.enc" + std::to_string(l), l == 0 ? 4 : cfg.d_s, cfg.d_s, rng);
  add_dense(d.params, "dis.head", cfg.d_s, 1, rng);
  return d;
}

Var discriminate_var(const GraphContext& ctx, const Var& layout, const std::vector<Var>& p,
                     const DiscriminatorConfig& cfg) {
  Tape& t = *layout.tape();
  Var x = concat_cols(layout, matmul(t.constant(ctx.a_hat), layout));
  Var h = graph_encode(ctx.a_hat, x, p, 0, cfg.encoder_layers);
  return dense(mean_rows(h), p, 2 * cfg.encoder_layers);
}

double discriminate(const Layout& l, const Graph& g, const Discriminator& dis) {
  if (l.size() != g.node_count()) throw std::invalid_argument("layout does not match graph");
  Tape t;
  NoGrad off(t);
  const auto p = bind(t, dis.params);
  const GraphContext ctx = make_context(g);
  return discriminate_var(ctx, t.constant(layout_to_mat(l)), p, dis.cfg).scalar();
}

Classifier Classifier::init(const ClassifierConfig& cfg, Rng& rng) {
  if (cfg.resolution < 8) throw std::invalid_argument("classifier resolution must be >= 8");
  Classifier c;
  c.cfg = cfg;
  int in = 3;
  for (int k = 0; k < 3; ++k) {
    if (cfg.channels[k] < 1) throw std::invalid_argument("channel counts must be positive");
    add_dense(c.params, "cls.conv" + std::to_string(k), 9 * in, cfg.channels[k], rng);
    in = cfg.channels[k];
  }
  add_dense(c.params, "cls.dense", in, 2, rng);
  return c;
}

std::vector<int> im2col_index(int h, int w, int c) {
  const int hw = h * w;
  std::vector<int> idx(static_cast<std::size_t>(hw) * 9 * c);
  for (int ch = 0; ch < c; ++ch) {
    for (int k = 0; k < 9; ++k) {
      const int dy = k / 3 - 1, dx = k % 3 - 1;
      const std::size_t col = static_cast<std::size_t>(k) * c + ch;
      for (int p = 0; p < h; ++p) {
        for (int q = 0; q < w; ++q) {
          const int pp = p + dy, qq = q + dx;
          const bool inside = pp >= 0 && pp < h && qq >= 0 && qq < w;
          idx[col * hw + p * w + q] = inside ? (pp * w + qq) + ch * hw : -1;
        }
      }
    }
  }
  return idx;
}

std::vector<int> maxpool_index(const Mat& x, int h, int w) {
  const int oh = h / 2, ow = w / 2, c = static_cast<int>(x.cols());
  const int hw = h * w, ohw = oh * ow;
  std::vector<int> idx(static_cast<std::size_t>(ohw) * c);
  const double* data = x.data();
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        int best = (2 * i) * w + 2 * j + ch * hw;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) {
            const int cand = (2 * i + a) * w + (2 * j + b) + ch * hw;
            if (data[cand] > data[best]) best = cand;
          }
        idx[static_cast<std::size_t>(ch) * ohw + i * ow + j] = best;
      }
    }
  }
  return idx;
}

Var classify_var(const Var& image, const std::vector<Var>& p, const ClassifierConfig& cfg) {
  const int res = cfg.resolution;
  if (image.rows() != static_cast<Eigen::Index>(res) * res || image.cols() != 3) {
    throw std::invalid_argument("image is not " + std::to_string(res) + "x" +
                                std::to_string(res) + " RGB as the classifier expects");
  }
  Var x = scale(image, 1.0 / 255.0);
  int h = res, w = res, c = 3;
  for (int k = 0; k < 3; ++k) {
    Var cols = gather(x, im2col_index(h, w, c), static_cast<Eigen::Index>(h) * w, 9 * c);
    Var y = relu(dense(cols, p, 2 * k));
    c = cfg.channels[k];
    const auto pool = maxpool_index(y.value(), h, w);
    h /= 2;
    w /= 2;
    x = gather(y, pool, static_cast<Eigen::Index>(h) * w, c);
  }
  return dense(mean_rows(x), p, 6);
}

std::array<double, 2> classify(const ImageTensor& m, const Classifier& cls) {
  if (m.h != cls.cfg.resolution || m.w != cls.cfg.resolution) {
    throw std::invalid_argument("image resolution " + std::to_string(m.h) + "x" +
                                std::to_string(m.w) + " does not match trained resolution " +
                                std::to_string(cls.cfg.resolution));
  }
  Tape t;
  NoGrad off(t);
  const auto p = bind(t, cls.params);
  const Mat logits = classify_var(t.constant(image_to_mat(m)), p, cls.cfg).value();
  return {logits(0, 0), logits(0, 1)};
}

Mat image_to_mat(const ImageTensor& m) {
  Mat out(static_cast<Eigen::Index>(m.h) * m.w, 3);
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (int c = 0; c < 3; ++c) out(r, c) = m.px[static_cast<std::size_t>(r) * 3 + c];
  return out;
}

ImageTensor mat_to_image(const Mat& m, int h, int w) {
  ImageTensor out(h, w, 0.0);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (int c = 0; c < 3; ++c) out.px[static_cast<std::size_t>(r) * 3 + c] = m(r, c);
  return out;
}

Mat layout_to_mat(const Layout& l) {
  Mat out(l.size(), 2);
  for (int i = 0; i < l.size(); ++i) {
    out(i, 0) = l.x(i);
    out(i, 1) = l.y(i);
  }
  return out;
}

Layout mat_to_layout(const Mat& m) {
  Layout l(static_cast<int>(m.rows()));
  for (int i = 0; i < l.size(); ++i) {
    l.x(i) = m(i, 0);
    l.y(i) = m(i, 1);
  }
  return l;
}

Var render_var(const Var& layout, const Graph& g, const RenderParams& p) {
  const Layout l = mat_to_layout(layout.value());
  const auto samples = edge_sample_counts(g, normalize_coords(l, p.h, p.w), p);
  Mat img = image_to_mat(render(l, g, p, samples));
  return layout.tape()->record(
      std::move(img), {layout},
      [l, g, p, samples](const std::vector<Var>&, const Var&, const Var& grad) {
        const Mat& gm = grad.value();
        std::vector<double> d(static_cast<std::size_t>(gm.rows()) * 3);
        for (Eigen::Index r = 0; r < gm.rows(); ++r)
          for (int c = 0; c < 3; ++c) d[static_cast<std::size_t>(r) * 3 + c] = gm(r, c);
        const auto gl = render_backward(l, g, p, d, samples);
        Mat out(l.size(), 2);
        for (int i = 0; i < l.size(); ++i) {
          out(i, 0) = gl[2 * i];
          out(i, 1) = gl[2 * i + 1];
        }
        return std::vector<Var>{grad.tape()->constant(std::move(out))};
      },
      true);
}

}  // namespace vsal::nn
