#pragma once

#include <cstdint>
#include <vector>

#include "vsal/datagen.hpp"
#include "vsal/layout.hpp"
#include "vsal/nn/models.hpp"
#include "vsal/render.hpp"

namespace vsal::nn {

struct TrainConfig {
  double lr_gen = 1e-4;
  double lr_dis = 5e-4;
  double lr_cls = 1e-5;
  double lambda_c = 30.0;
  double lambda_gp = 5.0;
  int m = 10;
  int epochs = 100;
  int batch_size = 16;
  int patience = 10;
  int pretrain_steps = 0;
  int dis_steps = 1;  // discriminator updates per generator update
  std::uint64_t seed = 0;

  void validate() const;
};

struct Models {
  Generator gen;
  Discriminator dis;
  Classifier cls;

  static Models init(const GeneratorConfig& g, const DiscriminatorConfig& d,
                     const ClassifierConfig& c, std::uint64_t seed);
  bool finite() const { return gen.params.finite() && dis.params.finite() && cls.params.finite(); }
  bool operator==(const Models& o) const {
    return gen.params == o.gen.params && dis.params == o.dis.params && cls.params == o.cls.params;
  }
};

struct ReferenceSpec {
  InitialLayoutSpec init;
  SpringParams spring;
  KKParams kk;
};

/// A graph with its label and centred, unit-scaled reference layout.
struct TrainingSample {
  Graph graph;
  int label = 0;
  Layout reference;
};

/// Reference layout of sample k uses an rng seeded with seed + k.
std::vector<TrainingSample> prepare_samples(const std::vector<LabeledSample>& samples,
                                            const ReferenceSpec& spec, std::uint64_t seed);

/// Graphs plus the noise rows and interpolation weights drawn for them.
struct Batch {
  std::vector<const TrainingSample*> items;
  std::vector<std::vector<Mat>> z;             // [item][draw]
  std::vector<std::vector<double>> lambda;     // [item][draw]
};

/// Draws m noise rows then m interpolation weights per item, in item order.
Batch make_batch(std::vector<const TrainingSample*> items, int m, const GeneratorConfig& cfg,
                 Rng& rng);

/// Mean cross-entropy of classify(render(generate)) over all (item, draw).
double loss_cls(const Batch& b, const Models& models, const RenderParams& rp);
/// -mean discriminator score of generated layouts + lambda_c * loss_cls.
double loss_gen(const Batch& b, const Models& models, const RenderParams& rp, double lambda_c);

struct DiscLoss {
  double total = 0.0;
  double gen_score = 0.0;   // mean over (item, draw)
  double ref_score = 0.0;   // mean over items
  double penalty = 0.0;     // mean (|grad| - 1)^2, before lambda_gp
};

/// mean score(generated) - mean score(reference) + lambda_gp * penalty.
DiscLoss loss_disc(const Batch& b, const Models& models, double lambda_gp);

/// Gradient of loss_disc with respect to the discriminator parameters.
std::vector<Mat> loss_disc_grad(const Batch& b, const Models& models, double lambda_gp,
                                DiscLoss* value = nullptr);

class Adam {
 public:
  explicit Adam(const ParamSet& p, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(ParamSet& p, const std::vector<Mat>& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  long step_ = 0;
  std::vector<Mat> m_, v_;
};

struct PretrainStep {
  double l_adv = 0.0;
  double l_d = 0.0;
};

/// Alternating discriminator (L_d) and generator (L_adv) updates.
void pretrain(Models& models, const std::vector<TrainingSample>& set, const TrainConfig& cfg,
              std::vector<PretrainStep>* trace = nullptr);

/// mean reference score - mean generated score over the whole set with m
/// draws per graph from an rng seeded with `seed`.
double wasserstein_estimate(const Models& models, const std::vector<TrainingSample>& set, int m,
                            std::uint64_t seed);

struct EpochRecord {
  int epoch = 0;
  double l_g = 0.0;
  double l_d = 0.0;
  double l_c = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  Models best;
  std::vector<EpochRecord> trace;  // row 0: before any update
  int best_epoch = 0;
  bool diverged = false;
};

/// Coordinated training with early stopping on validation accuracy.
TrainResult train(const Models& init, const std::vector<TrainingSample>& train_set,
                  const std::vector<TrainingSample>& val_set, const TrainConfig& cfg,
                  const RenderParams& rp);

std::string trace_csv(const std::vector<EpochRecord>& trace);

/// Renders at the classifier resolution using the remaining fields of rp.
int predict(const Graph& g, const Models& models, const RenderParams& rp, Rng& rng);

struct Metrics {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  int tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Label 1 is positive; F1 is 0 when precision + recall is 0.
Metrics compute_metrics(const std::vector<int>& predicted, const std::vector<int>& truth);

Metrics evaluate(const Models& models, const std::vector<LabeledSample>& test,
                 const RenderParams& rp, std::uint64_t seed);

}  // namespace vsal::nn
