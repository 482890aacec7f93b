#include "vsal/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vsal/datagen.hpp"
#include "vsal/nn/train.hpp"
#include "vsal/render.hpp"

namespace vsal::nn {

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_error: size mismatch");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + h;
    const double up = f(x);
    x[k] = saved - h;
    const double down = f(x);
    x[k] = saved;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

namespace {

using Op = std::function<Var(const std::vector<Var>&)>;

std::vector<double> flatten(const std::vector<Mat>& ms) {
  std::vector<double> out;
  for (const Mat& m : ms) out.insert(out.end(), m.data(), m.data() + m.size());
  return out;
}

std::vector<Mat> unflatten(const std::vector<double>& v, const std::vector<Mat>& shapes) {
  std::vector<Mat> out;
  std::size_t at = 0;
  for (const Mat& s : shapes) {
    Mat m(s.rows(), s.cols());
    std::copy(v.begin() + at, v.begin() + at + m.size(), m.data());
    at += m.size();
    out.push_back(std::move(m));
  }
  return out;
}

// sum(op(inputs) .* W) for a fixed random W.
Var weighted_output(const Op& op, const std::vector<Var>& in, std::uint64_t wseed) {
  Var out = op(in);
  Rng rng(wseed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat w(out.rows(), out.cols());
  for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = u(rng);
  return sum(mul(out, out.tape()->constant(std::move(w))));
}

double check_case(const std::vector<Mat>& inputs, const Op& op, std::uint64_t wseed) {
  Tape t;
  std::vector<Var> vars;
  for (const Mat& m : inputs) vars.push_back(t.constant(m));
  Var y = weighted_output(op, vars, wseed);
  std::vector<Mat> grads;
  for (const Var& g : t.grad(y, vars)) grads.push_back(g.value());
  auto f = [&](const std::vector<double>& x) {
    Tape tt;
    std::vector<Var> vs;
    for (Mat& m : unflatten(x, inputs)) vs.push_back(tt.constant(std::move(m)));
    return weighted_output(op, vs, wseed).scalar();
  };
  return relative_error(flatten(grads), central_differences(f, flatten(inputs), 1e-6));
}

Mat random_mat(Rng& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
  return m;
}

// Entries bounded away from zero, for ops with a kink there.
Mat away_from_zero(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Mat m = random_mat(rng, r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k)
    m.data()[k] = (m.data()[k] < 0 ? -0.1 : 0.1) + m.data()[k];
  return m;
}

Graph random_graph(int n, double p, Rng& rng) {
  std::bernoulli_distribution flip(p);
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (flip(rng)) e.emplace_back(i, j);
  return Graph(n, e);
}

Layout random_layout(int n, Rng& rng, double extent = 1.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  Layout l(n);
  for (double& v : l.xy) v = u(rng);
  return l;
}

}  // namespace

std::vector<CheckResult> check_primitives(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CheckResult> out;
  auto run = [&](const std::string& name, std::vector<Mat> in, const Op& op) {
    out.push_back({name, check_case(in, op, seed + out.size() + 1)});
  };
  run("add", {random_mat(rng, 2, 3), random_mat(rng, 2, 3)},
      [](const auto& v) { return add(v[0], v[1]); });
  run("sub", {random_mat(rng, 2, 3), random_mat(rng, 2, 3)},
      [](const auto& v) { return sub(v[0], v[1]); });
  run("mul", {random_mat(rng, 2, 3), random_mat(rng, 2, 3)},
      [](const auto& v) { return mul(v[0], v[1]); });
  run("div", {random_mat(rng, 2, 3), random_mat(rng, 2, 3, 0.5, 2.0)},
      [](const auto& v) { return div(v[0], v[1]); });
  run("matmul", {random_mat(rng, 2, 3), random_mat(rng, 3, 4)},
      [](const auto& v) { return matmul(v[0], v[1]); });
  run("transpose", {random_mat(rng, 2, 3)}, [](const auto& v) { return transpose(v[0]); });
  run("scale", {random_mat(rng, 2, 3)}, [](const auto& v) { return scale(v[0], 1.7); });
  run("add_scalar", {random_mat(rng, 2, 3)}, [](const auto& v) { return add_scalar(v[0], 0.3); });
  run("tanh", {random_mat(rng, 3, 3, -2.0, 2.0)}, [](const auto& v) { return tanh(v[0]); });
  run("relu", {away_from_zero(rng, 3, 3)}, [](const auto& v) { return relu(v[0]); });
  run("square", {random_mat(rng, 3, 2)}, [](const auto& v) { return square(v[0]); });
  run("sqrt", {random_mat(rng, 3, 2, 0.2, 3.0)}, [](const auto& v) { return sqrt(v[0]); });
  run("sum", {random_mat(rng, 3, 2)}, [](const auto& v) { return sum(v[0]); });
  run("broadcast", {random_mat(rng, 1, 1)}, [](const auto& v) { return broadcast(v[0], 3, 2); });
  run("sum_rows", {random_mat(rng, 4, 3)}, [](const auto& v) { return sum_rows(v[0]); });
  run("tile_rows", {random_mat(rng, 1, 3)}, [](const auto& v) { return tile_rows(v[0], 4); });
  run("mean_rows", {random_mat(rng, 4, 3)}, [](const auto& v) { return mean_rows(v[0]); });
  run("add_row", {random_mat(rng, 4, 3), random_mat(rng, 1, 3)},
      [](const auto& v) { return add_row(v[0], v[1]); });
  run("concat_cols", {random_mat(rng, 3, 2), random_mat(rng, 3, 4)},
      [](const auto& v) { return concat_cols(v[0], v[1]); });
  run("slice_cols", {random_mat(rng, 3, 5)}, [](const auto& v) { return slice_cols(v[0], 1, 3); });
  run("embed_cols", {random_mat(rng, 3, 2)}, [](const auto& v) { return embed_cols(v[0], 5, 2); });
  {
    std::vector<int> idx{0, 5, -1, 3, 3, 1, 11, -1, 7, 2};
    run("gather", {random_mat(rng, 4, 3)}, [idx](const auto& v) { return gather(v[0], idx, 5, 2); });
    run("scatter_add", {random_mat(rng, 5, 2)},
        [idx](const auto& v) { return scatter_add(v[0], idx, 4, 3); });
  }
  run("softmax_cross_entropy", {random_mat(rng, 3, 2, -2.0, 2.0)},
      [](const auto& v) { return softmax_cross_entropy(v[0], {0, 1, 1}); });
  // A composite chain through every op kind used by the models.
  run("gcn_layer", {random_mat(rng, 4, 3), random_mat(rng, 3, 5), random_mat(rng, 1, 5)},
      [](const auto& v) {
        Mat a = Mat::Identity(4, 4) * 0.5;
        a(0, 1) = a(1, 0) = 0.5;
        return mean_rows(tanh(add_row(matmul(v[0].tape()->constant(a), matmul(v[0], v[1])), v[2])));
      });
  return out;
}

std::vector<double> check_double_backprop(int instances, std::uint64_t seed) {
  std::vector<double> errors;
  for (int k = 0; k < instances; ++k) {
    Rng rng(seed + k);
    const int n = std::uniform_int_distribution<int>(4, 7)(rng);
    Graph g = random_spanning_tree(n, rng).with_changes({{0, n - 1}}, {});
    GeneratorConfig gc{8, 4, 1, 8, 1.0};
    DiscriminatorConfig dc{8, 2};
    ClassifierConfig cc{8, {2, 2, 2}};
    Models models = Models::init(gc, dc, cc, seed + 1000 + k);
    TrainingSample sample{g, 1, center_and_scale(random_layout(n, rng))};
    Batch b = make_batch({&sample}, 1, gc, rng);

    auto grad_with = [&](double lambda_gp) { return flatten(loss_disc_grad(b, models, lambda_gp)); };
    std::vector<double> g1 = grad_with(1.0), g0 = grad_with(0.0);
    std::vector<double> analytic(g1.size());
    for (std::size_t q = 0; q < g1.size(); ++q) analytic[q] = g1[q] - g0[q];

    const std::vector<Mat> shapes = models.dis.params.values;
    auto penalty = [&](const std::vector<double>& x) {
      Models m = models;
      m.dis.params.values = unflatten(x, shapes);
      return loss_disc(b, m, 1.0).penalty;
    };
    errors.push_back(relative_error(analytic, central_differences(penalty, flatten(shapes), 1e-5)));
  }
  return errors;
}

std::vector<double> check_render(const RenderCheckOptions& opt) {
  RenderParams p;
  p.h = p.w = opt.resolution;
  p.r = 2.0;
  p.delta = 1.0;
  p.beta = 10.0;
  p.kernel_radius = 3;
  p.smooth_sigma = 1.0;
  std::vector<double> errors;
  for (int k = 0; k < opt.graphs; ++k) {
    Rng rng(opt.seed + k);
    const int n = std::uniform_int_distribution<int>(2, std::max(2, opt.max_nodes))(rng);
    Graph g = random_graph(n, 0.4, rng);
    // Pixel units: the step is in pixels.
    Layout l = random_layout(n, rng, 0.5 * p.h);
    for (double& v : l.xy) v += 0.5 * p.h;
    const auto samples = edge_sample_counts(g, normalize_coords(l, p.h, p.w), p);
    std::normal_distribution<double> nd;
    std::vector<double> w(static_cast<std::size_t>(p.h) * p.w * 3);
    for (double& v : w) v = nd(rng);

    auto [nodes, edges] = detail::render_backward_split(l, g, p, w, samples);
    std::vector<double> analytic(nodes.size());
    for (std::size_t q = 0; q < nodes.size(); ++q)
      analytic[q] = nodes[q] + (opt.flip_edge_gradient ? -edges[q] : edges[q]);

    auto objective = [&](const std::vector<double>& xy) {
      Layout x(n);
      x.xy = xy;
      const ImageTensor img = render(x, g, p, samples);
      double s = 0.0;
      for (std::size_t q = 0; q < w.size(); ++q) s += w[q] * img.px[q];
      return s;
    };
    errors.push_back(relative_error(analytic, central_differences(objective, l.xy, opt.step)));
  }
  return errors;
}

}  // namespace vsal::nn
