#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "vsal/error.hpp"
#include "vsal/nn/checkpoint.hpp"
#include "vsal/nn/gradcheck.hpp"
#include "vsal/nn/train.hpp"

using namespace vsal;
using namespace vsal::nn;

namespace {

GeneratorConfig small_gen() { return {16, 8, 2, 16, 1.0}; }
DiscriminatorConfig small_dis() { return {16, 1}; }
ClassifierConfig small_cls() { return {16, {4, 4, 4}}; }

RenderParams small_render() {
  RenderParams p;
  p.h = p.w = 16;
  p.kernel_radius = 3;
  p.smooth_sigma = 1.0;
  return p;
}

Models small_models(std::uint64_t seed) {
  return Models::init(small_gen(), small_dis(), small_cls(), seed);
}

void zero_all(ParamSet& p) {
  for (Mat& m : p.values) m.setZero();
}

std::vector<int> random_perm(int n, Rng& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

std::vector<TrainingSample> small_set(Task task, int count, std::uint64_t seed) {
  GenParams gp;
  gp.n_min = 8;
  gp.n_max = 10;
  gp.seed = seed;
  ReferenceSpec spec;
  return prepare_samples(generate_dataset(task, count, gp), spec, seed);
}

}  // namespace

TEST_CASE("every primitive matches central differences") {
  for (const auto& c : check_primitives(42)) {
    CAPTURE(c.name);
    CHECK(c.error < 1e-4);
  }
}

TEST_CASE("second-order gradients match differences of first-order gradients") {
  // h(W) = |d/dx sum(tanh(x W) * c)|^2; its W-gradient needs a recorded
  // backward pass through matmul, tanh and mul.
  Rng rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  Mat x(3, 4), w(4, 2), c(3, 2);
  for (Mat* m : {&x, &w, &c})
    for (Eigen::Index k = 0; k < m->size(); ++k) m->data()[k] = u(rng);
  auto h_of = [&](const Mat& wv, Mat* grad_w) {
    Tape t;
    Var xv = t.constant(x), wvv = t.constant(wv);
    Var f = sum(mul(tanh(matmul(xv, wvv)), t.constant(c)));
    Var gx = t.grad(f, {xv}, true)[0];
    Var h = sum(square(gx));
    if (grad_w) *grad_w = t.grad(h, {wvv})[0].value();
    return h.scalar();
  };
  Mat analytic;
  h_of(w, &analytic);
  std::vector<double> flat(w.data(), w.data() + w.size());
  auto fd = central_differences(
      [&](const std::vector<double>& v) {
        Mat m = Eigen::Map<const Mat>(v.data(), 4, 2);
        return h_of(m, nullptr);
      },
      flat, 1e-6);
  std::vector<double> an(analytic.data(), analytic.data() + analytic.size());
  CHECK(relative_error(an, fd) < 1e-6);
}

TEST_CASE("gradient penalty differentiates through the recorded backward pass") {
  for (double e : check_double_backprop(5, 11)) CHECK(e < 1e-2);
}

TEST_CASE("second order through cross-entropy is refused") {
  Tape t;
  Var z = t.constant(Mat::Ones(1, 2));
  Var l = softmax_cross_entropy(z, {1});
  CHECK_THROWS_AS(t.grad(l, {z}, true), std::logic_error);
  CHECK(t.grad(l, {z})[0].value().allFinite());
}

TEST_CASE("unrelated inputs receive zero gradients") {
  Tape t;
  Var a = t.constant(Mat::Ones(2, 2)), b = t.constant(Mat::Ones(2, 2));
  auto g = t.grad(sum(a), {a, b});
  CHECK(g[0].value() == Mat::Ones(2, 2));
  CHECK(g[1].value() == Mat::Zero(2, 2));
}

TEST_CASE("graph encoder examples") {
  Rng rng(1);
  Generator gen = Generator::init(small_gen(), rng);
  Graph g = Graph::path(5);
  GraphContext ctx = make_context(g);
  {
    Generator z = gen;
    zero_all(z.params);
    Tape t;
    auto p = bind(t, z.params);
    Var h = generator_encode(ctx, t.constant(ctx.features), p, z.cfg);
    CHECK(h.value().isZero());
  }
  Tape t;
  auto p = bind(t, gen.params);
  Var h = generator_encode(ctx, t.constant(ctx.features), p, gen.cfg);
  auto perm = random_perm(5, rng);
  Graph gp = g.permuted(perm);
  GraphContext cp = make_context(gp);
  Var hp = generator_encode(cp, t.constant(cp.features), p, gen.cfg);
  for (int i = 0; i < 5; ++i) CHECK((hp.value().row(perm[i]) - h.value().row(i)).norm() < 1e-12);

  GraphContext one = make_context(Graph::empty(1));
  Var h1 = generator_encode(one, t.constant(one.features), p, gen.cfg);
  CHECK(h1.rows() == 1);
  CHECK(h1.value().allFinite());
}

TEST_CASE("generator is deterministic and equivariant") {
  Rng rng(5);
  Generator gen = Generator::init(small_gen(), rng);
  Mat z = sample_noise(gen.cfg, rng);
  GenParams params;
  for (int trial = 0; trial < 10; ++trial) {
    Graph g = gen_planar(8 + trial % 4, params, rng).graph;
    Layout a = generate_layout(g, z, gen), b = generate_layout(g, z, gen);
    CHECK(a == b);
    CHECK(a.size() == g.node_count());
    auto perm = random_perm(g.node_count(), rng);
    Layout c = generate_layout(g.permuted(perm), z, gen);
    for (int i = 0; i < g.node_count(); ++i) {
      CHECK(std::abs(c.x(perm[i]) - a.x(i)) < 1e-10);
      CHECK(std::abs(c.y(perm[i]) - a.y(i)) < 1e-10);
    }
  }
  CHECK(generate_layout(Graph::empty(1), z, gen).size() == 1);
}

TEST_CASE("discriminator is permutation invariant") {
  Rng rng(6);
  Discriminator dis = Discriminator::init(DiscriminatorConfig{16, 2}, rng);
  std::uniform_real_distribution<double> u(-1, 1);
  GenParams params;
  for (int trial = 0; trial < 10; ++trial) {
    Graph g = gen_hamiltonian(7 + trial % 3, params, rng).graph;
    Layout l(g.node_count());
    for (double& v : l.xy) v = u(rng);
    auto perm = random_perm(g.node_count(), rng);
    Layout lp(g.node_count());
    for (int i = 0; i < g.node_count(); ++i) {
      lp.x(perm[i]) = l.x(i);
      lp.y(perm[i]) = l.y(i);
    }
    const double s = discriminate(l, g, dis);
    CHECK(std::isfinite(s));
    CHECK(std::abs(discriminate(lp, g.permuted(perm), dis) - s) < 1e-10);
  }
  Discriminator zero = dis;
  zero_all(zero.params);
  zero.params.values.back()(0, 0) = 0.75;
  CHECK(discriminate(Layout(3), Graph::path(3), zero) == doctest::Approx(0.75));
}

TEST_CASE("classifier examples") {
  Rng rng(7);
  Classifier cls = Classifier::init(small_cls(), rng);
  ImageTensor img(16, 16, 255.0);
  img.at(3, 4, 1) = 0.0;
  auto a = classify(img, cls), b = classify(img, cls);
  CHECK(a == b);
  CHECK(std::isfinite(a[0]));
  CHECK(std::isfinite(a[1]));
  CHECK_THROWS_AS(classify(ImageTensor(32, 32), cls), std::invalid_argument);
}

TEST_CASE("fresh classifier is near chance on balanced data") {
  Models models = small_models(9);
  GenParams gp;
  gp.seed = 9;
  auto data = generate_dataset(Task::Tree, 200, gp);
  Metrics m = evaluate(models, data, small_render(), 1);
  CHECK(std::abs(m.accuracy - 0.5) <= 0.1);
}

TEST_CASE("classification loss examples") {
  auto set = small_set(Task::Tree, 4, 2);
  Models models = small_models(2);
  Rng rng(2);
  std::vector<const TrainingSample*> items;
  for (auto& s : set) items.push_back(&s);
  Batch b = make_batch(items, 2, models.gen.cfg, rng);
  CHECK(loss_cls(b, models, small_render()) >= 0.0);
  Models uniform = models;
  zero_all(uniform.cls.params);
  CHECK(loss_cls(b, uniform, small_render()) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("generator loss examples") {
  auto set = small_set(Task::Planar, 4, 3);
  Models models = small_models(3);
  Rng rng(3);
  std::vector<const TrainingSample*> items;
  for (auto& s : set) items.push_back(&s);
  Batch b = make_batch(items, 2, models.gen.cfg, rng);
  // lambda_c = 0: negated mean score.
  double mean_score = 0;
  for (std::size_t i = 0; i < items.size(); ++i)
    for (const Mat& z : b.z[i])
      mean_score += discriminate(generate_layout(items[i]->graph, z, models.gen), items[i]->graph,
                                 models.dis);
  mean_score /= 8;
  CHECK(loss_gen(b, models, small_render(), 0.0) == doctest::Approx(-mean_score).epsilon(1e-12));

  Models constant = models;
  zero_all(constant.dis.params);
  constant.dis.params.values.back()(0, 0) = 1.5;
  CHECK(loss_gen(b, constant, small_render(), 0.0) == doctest::Approx(-1.5));
  const double lc = loss_cls(b, constant, small_render());
  CHECK(loss_gen(b, constant, small_render(), 30.0) == doctest::Approx(-1.5 + 30.0 * lc));
}

TEST_CASE("discriminator loss examples") {
  auto set = small_set(Task::Claw, 2, 4);
  Models models = small_models(4);
  Rng rng(4);
  Batch b = make_batch({&set[0], &set[1]}, 3, models.gen.cfg, rng);

  Models constant = models;
  zero_all(constant.dis.params);
  constant.dis.params.values.back()(0, 0) = -0.4;
  DiscLoss c = loss_disc(b, constant, 5.0);
  CHECK(c.penalty == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(c.total == doctest::Approx(5.0).epsilon(1e-5));

  // Reference equal to the generated layout: the score terms cancel.
  TrainingSample same = set[0];
  Batch one = make_batch({&same}, 1, models.gen.cfg, rng);
  same.reference = generate_layout(same.graph, one.z[0][0], models.gen);
  DiscLoss d = loss_disc(one, models, 5.0);
  CHECK(d.gen_score == doctest::Approx(d.ref_score).epsilon(1e-12));
  CHECK(d.total == doctest::Approx(5.0 * d.penalty).epsilon(1e-9));
  CHECK(d.penalty >= 0.0);
}

TEST_CASE("Adam first step moves by the learning rate") {
  ParamSet p;
  p.add("w", Mat::Constant(1, 2, 1.0));
  Adam opt(p, 0.01);
  Mat g(1, 2);
  g << 3.0, -0.5;
  opt.step(p, {g});
  CHECK(p.values[0](0, 0) == doctest::Approx(0.99));
  CHECK(p.values[0](0, 1) == doctest::Approx(1.01));
}

TEST_CASE("pretraining") {
  auto set = small_set(Task::Tree, 6, 5);
  Models models = small_models(5);
  TrainConfig cfg;
  cfg.m = 2;
  cfg.batch_size = 3;
  cfg.pretrain_steps = 0;
  Models same = models;
  pretrain(same, set, cfg);
  CHECK(same == models);
  cfg.pretrain_steps = 10;
  std::vector<PretrainStep> trace;
  pretrain(same, set, cfg, &trace);
  CHECK(trace.size() == 10);
  CHECK(same.finite());
  CHECK_FALSE(same == models);
}

TEST_CASE("training: zero epochs, determinism, trace format") {
  auto train_set = small_set(Task::Tree, 6, 6);
  auto val_set = small_set(Task::Tree, 4, 60);
  Models models = small_models(6);
  TrainConfig cfg;
  cfg.m = 2;
  cfg.batch_size = 3;
  cfg.epochs = 0;
  TrainResult r0 = train(models, train_set, val_set, cfg, small_render());
  CHECK(r0.best == models);
  CHECK(r0.trace.size() == 1);

  cfg.epochs = 2;
  cfg.lr_cls = 1e-3;
  TrainResult a = train(models, train_set, val_set, cfg, small_render());
  TrainResult b = train(models, train_set, val_set, cfg, small_render());
  CHECK(trace_csv(a.trace) == trace_csv(b.trace));
  CHECK(a.best == b.best);
  CHECK(a.trace.size() == 3);
  CHECK(trace_csv(a.trace).rfind("epoch,L_g,L_d,L_c,val_acc\n", 0) == 0);
  CHECK_THROWS_AS(train(models, {}, val_set, cfg, small_render()), TrainingError);
}

TEST_CASE("predict is deterministic given the seed") {
  Models models = small_models(8);
  Graph g = Graph::cycle(7);
  Rng a(1), b(1);
  const int pa = predict(g, models, small_render(), a);
  CHECK(pa == predict(g, models, small_render(), b));
  CHECK((pa == 0 || pa == 1));
}

TEST_CASE("metrics examples") {
  Metrics perfect = compute_metrics({1, 0, 1, 0}, {1, 0, 1, 0});
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.accuracy == 1.0);
  Metrics zeros = compute_metrics({0, 0, 0, 0}, {1, 0, 1, 0});
  CHECK(zeros.recall == 0.0);
  CHECK(zeros.f1 == 0.0);
  CHECK(zeros.accuracy == 0.5);
  Metrics mixed = compute_metrics({1, 1, 0, 0}, {1, 0, 1, 0});
  CHECK(mixed.precision == 0.5);
  CHECK(mixed.recall == 0.5);
  CHECK(mixed.f1 == 0.5);
}

TEST_CASE("config parsing") {
  RunConfig c = parse_run_config(
      "# comment\n[train]\nlr_cls = 1e-3\nm = 4\ntask = \"planar\"\nchannels = 4, 8, 16\n"
      "resolution = 32\ninit = uniform\n");
  CHECK(c.train.lr_cls == 1e-3);
  CHECK(c.train.m == 4);
  CHECK(c.task == Task::Planar);
  CHECK(c.cls.channels == std::array<int, 3>{4, 8, 16});
  CHECK(c.render.h == 32);
  CHECK(c.reference.init.kind == InitialKind::Uniform);
  CHECK(parse_run_config(c.canonical()).canonical() == c.canonical());
  CHECK_THROWS_AS(parse_run_config("bogus = 1"), ParseError);
  CHECK_THROWS_AS(parse_run_config("m = x"), ParseError);
  CHECK_THROWS_AS(parse_run_config("m 4"), ParseError);
  CHECK(RunConfig{}.train.lambda_c == 30.0);
  CHECK(RunConfig{}.train.lambda_gp == 5.0);
  CHECK(RunConfig{}.train.m == 10);
}

TEST_CASE("checkpoint round trip") {
  RunConfig cfg;
  cfg.gen = small_gen();
  cfg.dis = small_dis();
  cfg.cls = small_cls();
  Models models = Models::init(cfg.gen, cfg.dis, cfg.cls, 12);
  auto path = std::filesystem::temp_directory_path() / "vsal_test.ckpt";
  save_checkpoint(path, cfg, models);
  Checkpoint ck = load_checkpoint(path);
  CHECK(ck.models == models);
  CHECK(ck.config.canonical() == cfg.canonical());

  // Corrupt one byte of the config text.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(30);
    f.put('#');
  }
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
}
