#pragma once

#include <array>
#include <string>
#include <vector>

#include "vsal/datagen.hpp"
#include "vsal/graph.hpp"
#include "vsal/layout.hpp"
#include "vsal/nn/tape.hpp"
#include "vsal/render.hpp"

namespace vsal::nn {

/// Named parameter matrices in a fixed order.
struct ParamSet {
  std::vector<std::string> names;
  std::vector<Mat> values;

  int add(std::string name, Mat value);
  std::size_t size() const { return values.size(); }
  bool finite() const;
  bool operator==(const ParamSet&) const = default;
};

/// Glorot-uniform weights (fan_in x fan_out) and a zero bias row.
void add_dense(ParamSet& p, const std::string& prefix, int fan_in, int fan_out, Rng& rng);

/// Registers every parameter as a tape leaf.
std::vector<Var> bind(Tape& t, const ParamSet& p);

/// Per-graph inputs shared by the generator and discriminator.
struct GraphContext {
  const Graph* graph = nullptr;
  Mat a_hat;     // D^-1/2 (A + I) D^-1/2
  Mat features;  // n x 1, log(1 + degree)
};

GraphContext make_context(const Graph& g);
Mat normalized_adjacency(const Graph& g);

/// Stacked message passing H <- tanh(A_hat H W + b); `weights` holds
/// (W, b) pairs starting at `first`.
Var graph_encode(const Mat& a_hat, const Var& h0, const std::vector<Var>& weights, int first,
                 int layers);

struct GeneratorConfig {
  int d_g = 128;
  int d_z = 128;
  int encoder_layers = 3;
  int coord_hidden = 128;
  double noise_std = 1.0;
};

struct Generator {
  GeneratorConfig cfg;
  ParamSet params;

  static Generator init(const GeneratorConfig& cfg, Rng& rng);
};

/// One draw from N(0, noise_std^2 I) as a 1 x d_z row.
Mat sample_noise(const GeneratorConfig& cfg, Rng& rng);

/// Encoder output for a graph (computed once per graph and reused across
/// noise draws).
Var generator_encode(const GraphContext& ctx, const Var& features, const std::vector<Var>& p,
                     const GeneratorConfig& cfg);
/// n x 2 coordinates from the encoder output and a noise row.
Var generator_decode(const Var& h_graph, const Var& z, const std::vector<Var>& p,
                     const GeneratorConfig& cfg);

Layout generate_layout(const Graph& g, const Mat& z, const Generator& gen);

struct DiscriminatorConfig {
  int d_s = 128;
  int encoder_layers = 2;
};

struct Discriminator {
  DiscriminatorConfig cfg;
  ParamSet params;

  static Discriminator init(const DiscriminatorConfig& cfg, Rng& rng);
};

/// Scalar score of an n x 2 layout: encoder over [L, A_hat L], mean over
/// nodes, linear head.
Var discriminate_var(const GraphContext& ctx, const Var& layout, const std::vector<Var>& p,
                     const DiscriminatorConfig& cfg);
double discriminate(const Layout& l, const Graph& g, const Discriminator& dis);

struct ClassifierConfig {
  int resolution = 64;
  std::array<int, 3> channels{8, 16, 32};
};

struct Classifier {
  ClassifierConfig cfg;
  ParamSet params;

  static Classifier init(const ClassifierConfig& cfg, Rng& rng);
};

/// 3 x (conv3x3 + relu + maxpool2), global average pool, dense -> 2 logits.
/// `image` is (H*W) x 3 with row p*W + q and values in [0, 255].
Var classify_var(const Var& image, const std::vector<Var>& p, const ClassifierConfig& cfg);
std::array<double, 2> classify(const ImageTensor& m, const Classifier& cls);

Mat image_to_mat(const ImageTensor& m);
ImageTensor mat_to_image(const Mat& m, int h, int w);
Mat layout_to_mat(const Layout& l);
Layout mat_to_layout(const Mat& m);

/// Differentiable rendering of an n x 2 coordinate Var into an (H*W) x 3
/// image Var. Edge sample counts are fixed at the forward pass. First order
/// only.
Var render_var(const Var& layout, const Graph& g, const RenderParams& p);

/// Index tables used by the classifier (exposed for tests).
std::vector<int> im2col_index(int h, int w, int c);
std::vector<int> maxpool_index(const Mat& x, int h, int w);

}  // namespace vsal::nn
