#include "vsal/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "vsal/error.hpp"

namespace vsal::nn {

namespace {

constexpr double kNormEps = 1e-12;
constexpr std::uint64_t kValidationStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kEvalStream = 0x5851f42d4c957f2dULL;

RenderParams at_resolution(const RenderParams& rp, int res) {
  RenderParams out = rp;
  out.h = out.w = res;
  out.validate();
  return out;
}

struct GenForward {
  Var l_adv;
  Var l_c;  // invalid when the classifier is skipped
};

Var accumulate(const Var& acc, const Var& v) { return acc.valid() ? add(acc, v) : v; }

// Generator-side losses on tape t. `cp` null skips rendering and the
// classifier.
GenForward gen_forward(Tape& t, const Batch& b, const Models& models, const std::vector<Var>& gp,
                       const std::vector<Var>& dp, const std::vector<Var>* cp,
                       const RenderParams& rp) {
  Var adv, ce;
  int count = 0;
  for (std::size_t i = 0; i < b.items.size(); ++i) {
    const TrainingSample& s = *b.items[i];
    const GraphContext ctx = make_context(s.graph);
    Var h = generator_encode(ctx, t.constant(ctx.features), gp, models.gen.cfg);
    for (const Mat& z : b.z[i]) {
      Var l = generator_decode(h, t.constant(z), gp, models.gen.cfg);
      adv = accumulate(adv, discriminate_var(ctx, l, dp, models.dis.cfg));
      if (cp) {
        Var logits = classify_var(render_var(l, s.graph, rp), *cp, models.cls.cfg);
        ce = accumulate(ce, softmax_cross_entropy(logits, {s.label}));
      }
      ++count;
    }
  }
  GenForward f;
  f.l_adv = scale(adv, -1.0 / count);
  if (cp) f.l_c = scale(ce, 1.0 / count);
  return f;
}

struct DiscForward {
  Var total;
  DiscLoss value;
};

DiscForward disc_forward(Tape& t, const Batch& b, const Models& models,
                         const std::vector<Var>& dp, double lambda_gp) {
  Var gen_sum, ref_sum, pen_sum;
  int draws = 0;
  for (std::size_t i = 0; i < b.items.size(); ++i) {
    const TrainingSample& s = *b.items[i];
    const GraphContext ctx = make_context(s.graph);
    const Mat ref = layout_to_mat(s.reference);
    std::vector<Mat> generated;
    {
      NoGrad off(t);
      const auto gp = bind(t, models.gen.params);
      Var h = generator_encode(ctx, t.constant(ctx.features), gp, models.gen.cfg);
      for (const Mat& z : b.z[i])
        generated.push_back(generator_decode(h, t.constant(z), gp, models.gen.cfg).value());
    }
    ref_sum = accumulate(ref_sum, discriminate_var(ctx, t.constant(ref), dp, models.dis.cfg));
    for (std::size_t j = 0; j < generated.size(); ++j) {
      gen_sum = accumulate(gen_sum,
                           discriminate_var(ctx, t.constant(generated[j]), dp, models.dis.cfg));
      const double lam = b.lambda[i][j];
      Var mixed = t.constant(lam * ref + (1.0 - lam) * generated[j]);
      Var score = discriminate_var(ctx, mixed, dp, models.dis.cfg);
      Var g = t.grad(score, {mixed}, true)[0];
      Var norm = sqrt(add_scalar(sum(square(g)), kNormEps));
      pen_sum = accumulate(pen_sum, square(add_scalar(norm, -1.0)));
      ++draws;
    }
  }
  Var gen_mean = scale(gen_sum, 1.0 / draws);
  Var ref_mean = scale(ref_sum, 1.0 / static_cast<double>(b.items.size()));
  Var pen_mean = scale(pen_sum, 1.0 / draws);
  DiscForward f;
  f.total = add(sub(gen_mean, ref_mean), scale(pen_mean, lambda_gp));
  f.value = {f.total.scalar(), gen_mean.scalar(), ref_mean.scalar(), pen_mean.scalar()};
  return f;
}

std::vector<Mat> values_of(const std::vector<Var>& vs) {
  std::vector<Mat> out;
  out.reserve(vs.size());
  for (const Var& v : vs) out.push_back(v.value());
  return out;
}

void require_nonempty(const Batch& b) {
  if (b.items.empty() || b.z.empty() || b.z[0].empty()) {
    throw std::invalid_argument("batch must contain at least one graph and one draw");
  }
}

std::vector<const TrainingSample*> pointers(const std::vector<TrainingSample>& set,
                                            const std::vector<int>& order, std::size_t from,
                                            std::size_t count) {
  std::vector<const TrainingSample*> out;
  for (std::size_t k = from; k < std::min(order.size(), from + count); ++k)
    out.push_back(&set[order[k]]);
  return out;
}

double disc_step(Models& models, Adam& opt, const Batch& b, double lambda_gp) {
  DiscLoss value;
  auto grads = loss_disc_grad(b, models, lambda_gp, &value);
  opt.step(models.dis.params, grads);
  return value.total;
}

struct GenStepResult {
  double l_adv = 0.0;
  double l_c = 0.0;
};

GenStepResult gen_step(Models& models, Adam& gen_opt, Adam* cls_opt, const Batch& b,
                       const RenderParams& rp, double lambda_c) {
  Tape t;
  const auto gp = bind(t, models.gen.params);
  const auto dp = bind(t, models.dis.params);
  GenStepResult r;
  if (!cls_opt) {
    GenForward f = gen_forward(t, b, models, gp, dp, nullptr, rp);
    r.l_adv = f.l_adv.scalar();
    gen_opt.step(models.gen.params, values_of(t.grad(f.l_adv, gp)));
    return r;
  }
  const auto cp = bind(t, models.cls.params);
  GenForward f = gen_forward(t, b, models, gp, dp, &cp, rp);
  r.l_adv = f.l_adv.scalar();
  r.l_c = f.l_c.scalar();
  Var lg = add(f.l_adv, scale(f.l_c, lambda_c));
  std::vector<Mat> g_gen, g_cls;
  if (lambda_c > 0.0) {
    // l_adv does not reach the classifier: d lg / d cls = lambda_c d l_c / d cls.
    std::vector<Var> all = gp;
    all.insert(all.end(), cp.begin(), cp.end());
    auto g = values_of(t.grad(lg, all));
    g_gen.assign(g.begin(), g.begin() + gp.size());
    for (std::size_t k = gp.size(); k < g.size(); ++k) g_cls.push_back(g[k] / lambda_c);
  } else {
    g_gen = values_of(t.grad(lg, gp));
    g_cls = values_of(t.grad(f.l_c, cp));
  }
  gen_opt.step(models.gen.params, g_gen);
  cls_opt->step(models.cls.params, g_cls);
  return r;
}

double validation_accuracy(const Models& models, const std::vector<TrainingSample>& val,
                           const RenderParams& rp, std::uint64_t seed) {
  Rng rng(seed ^ kValidationStream);
  int correct = 0;
  for (const auto& s : val) correct += predict(s.graph, models, rp, rng) == s.label;
  return static_cast<double>(correct) / static_cast<double>(val.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr_gen > 0 && lr_dis > 0 && lr_cls > 0)) throw std::invalid_argument("learning rates must be positive");
  if (!(lambda_c >= 0 && lambda_gp >= 0)) throw std::invalid_argument("loss weights must be non-negative");
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (epochs < 0 || pretrain_steps < 0) throw std::invalid_argument("step counts must be non-negative");
  if (batch_size < 1 || patience < 1 || dis_steps < 1) {
    throw std::invalid_argument("batch_size, patience and dis_steps must be >= 1");
  }
}

Models Models::init(const GeneratorConfig& g, const DiscriminatorConfig& d,
                    const ClassifierConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  Models m{Generator::init(g, rng), Discriminator::init(d, rng), Classifier::init(c, rng)};
  return m;
}

std::vector<TrainingSample> prepare_samples(const std::vector<LabeledSample>& samples,
                                            const ReferenceSpec& spec, std::uint64_t seed) {
  std::vector<TrainingSample> out;
  out.reserve(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    Rng rng(seed + k);
    Layout ref = reference_layout(samples[k].graph, spec.init, spec.spring, spec.kk, rng);
    out.push_back({samples[k].graph, samples[k].label, center_and_scale(ref)});
  }
  return out;
}

Batch make_batch(std::vector<const TrainingSample*> items, int m, const GeneratorConfig& cfg,
                 Rng& rng) {
  Batch b;
  b.items = std::move(items);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < b.items.size(); ++i) {
    std::vector<Mat> zs;
    for (int j = 0; j < m; ++j) zs.push_back(sample_noise(cfg, rng));
    std::vector<double> lam;
    for (int j = 0; j < m; ++j) lam.push_back(u(rng));
    b.z.push_back(std::move(zs));
    b.lambda.push_back(std::move(lam));
  }
  return b;
}

double loss_cls(const Batch& b, const Models& models, const RenderParams& rp) {
  require_nonempty(b);
  const RenderParams r = at_resolution(rp, models.cls.cfg.resolution);
  Tape t;
  NoGrad off(t);
  const auto gp = bind(t, models.gen.params);
  const auto dp = bind(t, models.dis.params);
  const auto cp = bind(t, models.cls.params);
  return gen_forward(t, b, models, gp, dp, &cp, r).l_c.scalar();
}

double loss_gen(const Batch& b, const Models& models, const RenderParams& rp, double lambda_c) {
  require_nonempty(b);
  Tape t;
  NoGrad off(t);
  const auto gp = bind(t, models.gen.params);
  const auto dp = bind(t, models.dis.params);
  if (lambda_c == 0.0) return gen_forward(t, b, models, gp, dp, nullptr, rp).l_adv.scalar();
  const RenderParams r = at_resolution(rp, models.cls.cfg.resolution);
  const auto cp = bind(t, models.cls.params);
  GenForward f = gen_forward(t, b, models, gp, dp, &cp, r);
  return f.l_adv.scalar() + lambda_c * f.l_c.scalar();
}

DiscLoss loss_disc(const Batch& b, const Models& models, double lambda_gp) {
  require_nonempty(b);
  Tape t;
  const auto dp = bind(t, models.dis.params);
  return disc_forward(t, b, models, dp, lambda_gp).value;
}

std::vector<Mat> loss_disc_grad(const Batch& b, const Models& models, double lambda_gp,
                                DiscLoss* value) {
  require_nonempty(b);
  Tape t;
  const auto dp = bind(t, models.dis.params);
  DiscForward f = disc_forward(t, b, models, dp, lambda_gp);
  if (value) *value = f.value;
  return values_of(t.grad(f.total, dp));
}

Adam::Adam(const ParamSet& p, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const Mat& v : p.values) {
    m_.push_back(Mat::Zero(v.rows(), v.cols()));
    v_.push_back(Mat::Zero(v.rows(), v.cols()));
  }
}

void Adam::step(ParamSet& p, const std::vector<Mat>& grads) {
  if (grads.size() != p.size()) throw std::invalid_argument("gradient count does not match parameters");
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t k = 0; k < p.size(); ++k) {
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grads[k];
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grads[k].cwiseProduct(grads[k]);
    p.values[k].array() -=
        lr_ * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps_);
  }
}

void pretrain(Models& models, const std::vector<TrainingSample>& set, const TrainConfig& cfg,
              std::vector<PretrainStep>* trace) {
  cfg.validate();
  if (cfg.pretrain_steps == 0) return;
  if (set.empty()) throw TrainingError("pretraining set is empty");
  Rng rng(cfg.seed);
  Adam gen_opt(models.gen.params, cfg.lr_gen);
  Adam dis_opt(models.dis.params, cfg.lr_dis);
  std::vector<int> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  const RenderParams unused;
  for (int step = 0; step < cfg.pretrain_steps; ++step) {
    if (cursor >= order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    auto items = pointers(set, order, cursor, cfg.batch_size);
    cursor += items.size();
    PretrainStep rec;
    for (int k = 0; k < cfg.dis_steps; ++k) {
      Batch b = make_batch(items, cfg.m, models.gen.cfg, rng);
      rec.l_d = disc_step(models, dis_opt, b, cfg.lambda_gp);
    }
    Batch b = make_batch(items, cfg.m, models.gen.cfg, rng);
    rec.l_adv = gen_step(models, gen_opt, nullptr, b, unused, 0.0).l_adv;
    if (!std::isfinite(rec.l_d) || !std::isfinite(rec.l_adv)) {
      throw TrainingError("pretraining diverged at step " + std::to_string(step));
    }
    if (trace) trace->push_back(rec);
  }
}

double wasserstein_estimate(const Models& models, const std::vector<TrainingSample>& set, int m,
                            std::uint64_t seed) {
  if (set.empty()) throw std::invalid_argument("empty set");
  Rng rng(seed);
  double gen = 0.0, ref = 0.0;
  int draws = 0;
  for (const auto& s : set) {
    ref += discriminate(s.reference, s.graph, models.dis);
    for (int j = 0; j < m; ++j) {
      Layout l = generate_layout(s.graph, sample_noise(models.gen.cfg, rng), models.gen);
      gen += discriminate(l, s.graph, models.dis);
      ++draws;
    }
  }
  return ref / static_cast<double>(set.size()) - gen / draws;
}

TrainResult train(const Models& init, const std::vector<TrainingSample>& train_set,
                  const std::vector<TrainingSample>& val_set, const TrainConfig& cfg,
                  const RenderParams& rp) {
  cfg.validate();
  if (train_set.empty()) throw TrainingError("training split is empty");
  if (val_set.empty()) throw TrainingError("validation split is empty");
  const RenderParams r = at_resolution(rp, init.cls.cfg.resolution);

  TrainResult result;
  result.best = init;
  Models models = init;

  // Row 0: losses on the training set before any update.
  {
    Rng eval_rng(cfg.seed ^ kEvalStream);
    std::vector<int> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    EpochRecord row;
    int batches = 0;
    for (std::size_t from = 0; from < order.size(); from += cfg.batch_size) {
      Batch b = make_batch(pointers(train_set, order, from, cfg.batch_size), cfg.m,
                           models.gen.cfg, eval_rng);
      const double lc = loss_cls(b, models, r);
      row.l_c += lc;
      row.l_g += loss_gen(b, models, r, 0.0) + cfg.lambda_c * lc;
      row.l_d += loss_disc(b, models, cfg.lambda_gp).total;
      ++batches;
    }
    row.l_c /= batches;
    row.l_g /= batches;
    row.l_d /= batches;
    row.val_acc = validation_accuracy(models, val_set, r, cfg.seed);
    result.trace.push_back(row);
  }
  double best_acc = result.trace[0].val_acc;
  if (cfg.epochs == 0) return result;

  Rng rng(cfg.seed);
  Adam gen_opt(models.gen.params, cfg.lr_gen);
  Adam dis_opt(models.dis.params, cfg.lr_dis);
  Adam cls_opt(models.cls.params, cfg.lr_cls);
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord row;
    row.epoch = epoch;
    int batches = 0;
    for (std::size_t from = 0; from < order.size(); from += cfg.batch_size) {
      auto items = pointers(train_set, order, from, cfg.batch_size);
      double ld = 0.0;
      for (int k = 0; k < cfg.dis_steps; ++k) {
        Batch b = make_batch(items, cfg.m, models.gen.cfg, rng);
        ld = disc_step(models, dis_opt, b, cfg.lambda_gp);
      }
      Batch b = make_batch(items, cfg.m, models.gen.cfg, rng);
      GenStepResult g = gen_step(models, gen_opt, &cls_opt, b, r, cfg.lambda_c);
      row.l_d += ld;
      row.l_c += g.l_c;
      row.l_g += g.l_adv + cfg.lambda_c * g.l_c;
      ++batches;
    }
    row.l_d /= batches;
    row.l_c /= batches;
    row.l_g /= batches;
    if (!std::isfinite(row.l_d) || !std::isfinite(row.l_c) || !std::isfinite(row.l_g) ||
        !models.finite()) {
      row.val_acc = 0.0;
      result.trace.push_back(row);
      result.diverged = true;
      return result;
    }
    row.val_acc = validation_accuracy(models, val_set, r, cfg.seed);
    result.trace.push_back(row);
    if (row.val_acc >= best_acc) {
      since_best = row.val_acc > best_acc ? 0 : since_best + 1;
      best_acc = row.val_acc;
      result.best = models;
      result.best_epoch = epoch;
    } else {
      ++since_best;
    }
    if (since_best >= cfg.patience) break;
  }
  return result;
}

std::string trace_csv(const std::vector<EpochRecord>& trace) {
  std::string out = "epoch,L_g,L_d,L_c,val_acc\n";
  char line[256];
  for (const auto& r : trace) {
    std::snprintf(line, sizeof line, "%d,%.10g,%.10g,%.10g,%.10g\n", r.epoch, r.l_g, r.l_d, r.l_c,
                  r.val_acc);
    out += line;
  }
  return out;
}

int predict(const Graph& g, const Models& models, const RenderParams& rp, Rng& rng) {
  const RenderParams r = at_resolution(rp, models.cls.cfg.resolution);
  const Layout l = generate_layout(g, sample_noise(models.gen.cfg, rng), models.gen);
  const auto logits = classify(render(l, g, r), models.cls);
  return logits[1] > logits[0] ? 1 : 0;
}

Metrics compute_metrics(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("prediction count mismatch");
  Metrics m;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const bool p = predicted[k] == 1, t = truth[k] == 1;
    if (p && t) ++m.tp;
    else if (p) ++m.fp;
    else if (t) ++m.fn;
    else ++m.tn;
  }
  const int total = m.tp + m.fp + m.tn + m.fn;
  m.precision = m.tp + m.fp > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
  m.recall = m.tp + m.fn > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.accuracy = total > 0 ? static_cast<double>(m.tp + m.tn) / total : 0.0;
  return m;
}

Metrics evaluate(const Models& models, const std::vector<LabeledSample>& test,
                 const RenderParams& rp, std::uint64_t seed) {
  if (test.empty()) throw std::invalid_argument("test set is empty");
  Rng rng(seed);
  std::vector<int> pred, truth;
  for (const auto& s : test) {
    pred.push_back(predict(s.graph, models, rp, rng));
    truth.push_back(s.label);
  }
  return compute_metrics(pred, truth);
}

}  // namespace vsal::nn
