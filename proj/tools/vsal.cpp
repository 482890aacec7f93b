#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "vsal/datagen.hpp"
#include "vsal/error.hpp"
#include "vsal/layout.hpp"
#include "vsal/nn/checkpoint.hpp"
#include "vsal/nn/gradcheck.hpp"
#include "vsal/oracles.hpp"
#include "vsal/render.hpp"

namespace fs = std::filesystem;
using namespace vsal;

namespace {

const std::vector<std::string> kTasks = {"ham", "planar", "claw", "tree"};
const std::vector<std::string> kInits = {"circular", "spiral", "shell", "uniform"};

// Invalid arguments detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatagenArgs {
  std::string task, out, split = "train";
  int n_min = 6, n_max = 12, count = 0;
  std::uint64_t seed = 0;
};

int cmd_datagen(const DatagenArgs& a) {
  GenParams p;
  p.n_min = a.n_min;
  p.n_max = a.n_max;
  p.seed = a.seed;
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.count <= 0 || a.count % 2 != 0) throw UsageError("--count must be a positive even number");
  const Task task = parse_task(a.task);
  const auto samples = generate_dataset(task, a.count, p);
  const auto rows = write_dataset(samples, a.out, a.split);
  int per_class[2] = {0, 0}, verified = 0;
  for (const auto& r : rows) {
    ++per_class[r.label];
    verified += r.verified;
  }
  std::printf("wrote %zu samples to %s\n", rows.size(),
              (fs::path(a.out) / task_name(task) / a.split).string().c_str());
  std::printf("label 1: %d\nlabel 0: %d\n", per_class[1], per_class[0]);
  std::printf("verified: %.1f%%\n", 100.0 * verified / static_cast<double>(rows.size()));
  std::printf("manifest fnv1a: %016llx\n",
              static_cast<unsigned long long>(nn::fnv1a(manifest_text(rows))));
  return 0;
}

int cmd_oracle(const std::string& task_text, const std::string& input) {
  const Task task = parse_task(task_text);
  const Graph g = read_graph_file(input);
  const auto t0 = std::chrono::steady_clock::now();
  const int label = oracle_label(task, g);
  const auto t1 = std::chrono::steady_clock::now();
  std::printf("%d\n%lld us\n", label,
              static_cast<long long>(
                  std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count()));
  return 0;
}

struct LayoutArgs {
  std::string input, out, png, init = "circular";
  std::uint64_t seed = 0;
  int res = 224;
  bool report_crossings = false;
};

int cmd_layout(const LayoutArgs& a) {
  const Graph g = read_graph_file(a.input);
  InitialLayoutSpec spec;
  spec.kind = parse_initial_kind(a.init);
  Rng rng(a.seed);
  Rng init_rng = rng;
  const Layout ref = reference_layout(g, spec, SpringParams{}, KKParams{}, rng);
  write_layout_file(ref, a.out);
  if (a.report_crossings) {
    const Layout init = initial_layout(g.node_count(), spec, init_rng);
    std::printf("crossings %d %d\n", count_edge_crossings(g, init), count_edge_crossings(g, ref));
  }
  if (!a.png.empty()) {
    RenderParams rp;
    rp.h = rp.w = a.res;
    export_png(render(ref, g, rp), a.png);
  }
  return 0;
}

int cmd_render(const std::string& graph, const std::string& coords, int res, const std::string& out) {
  const Graph g = read_graph_file(graph);
  const Layout l = read_layout_file(coords);
  if (l.size() != g.node_count()) {
    throw ParseError("coordinate file has " + std::to_string(l.size()) + " rows, graph has " +
                     std::to_string(g.node_count()) + " nodes");
  }
  RenderParams rp;
  rp.h = rp.w = res;
  export_png(render(l, g, rp), out);
  return 0;
}

nn::RunConfig load_config(const std::string& path, const std::vector<std::string>& sets) {
  nn::RunConfig cfg = path.empty() ? nn::RunConfig{} : nn::read_run_config(path);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got " + kv);
    try {
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    } catch (const ParseError& e) {
      throw UsageError(e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

struct TrainArgs {
  std::string config, data, out;
  std::vector<std::string> sets;
  int epochs = -1;
};

int cmd_train(const TrainArgs& a) {
  std::vector<std::string> sets = a.sets;
  if (a.epochs >= 0) sets.push_back("epochs=" + std::to_string(a.epochs));
  const nn::RunConfig cfg = load_config(a.config, sets);
  const fs::path task_dir = fs::path(a.data) / task_name(cfg.task);

  std::vector<LabeledSample> train_raw = read_dataset(a.data, cfg.task, "train");
  std::vector<LabeledSample> val_raw;
  if (fs::exists(task_dir / "val" / "manifest.tsv")) {
    val_raw = read_dataset(a.data, cfg.task, "val");
  } else {
    std::vector<std::size_t> order(train_raw.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(cfg.train.seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_val = train_raw.size() / 5;
    std::vector<LabeledSample> rest;
    for (std::size_t k = 0; k < order.size(); ++k)
      (k < n_val ? val_raw : rest).push_back(train_raw[order[k]]);
    train_raw = std::move(rest);
  }
  if (train_raw.empty() || val_raw.empty()) throw TrainingError("train and val splits must be non-empty");
  std::printf("train %zu, val %zu\n", train_raw.size(), val_raw.size());

  const auto train_set = nn::prepare_samples(train_raw, cfg.reference, cfg.train.seed);
  const auto val_set = nn::prepare_samples(val_raw, cfg.reference, cfg.train.seed + train_raw.size());
  nn::Models init = nn::Models::init(cfg.gen, cfg.dis, cfg.cls, cfg.train.seed);
  if (cfg.train.pretrain_steps > 0) {
    std::vector<nn::TrainingSample> pre_set = train_set;
    if (fs::exists(task_dir / "pretrain" / "manifest.tsv")) {
      pre_set = nn::prepare_samples(read_dataset(a.data, cfg.task, "pretrain"), cfg.reference,
                                    cfg.train.seed + 7919);
    }
    nn::pretrain(init, pre_set, cfg.train);
    std::printf("pretrained %d steps on %zu graphs\n", cfg.train.pretrain_steps, pre_set.size());
  }
  const nn::TrainResult r = nn::train(init, train_set, val_set, cfg.train, cfg.render);

  fs::create_directories(a.out);
  {
    std::ofstream f(fs::path(a.out) / "trace.csv", std::ios::binary);
    f << nn::trace_csv(r.trace);
    if (!f) throw IoError("cannot write " + (fs::path(a.out) / "trace.csv").string());
  }
  if (r.diverged) {
    std::fprintf(stderr, "training diverged (non-finite loss) after epoch %d\n",
                 r.trace.back().epoch);
    return 1;
  }
  nn::save_checkpoint(fs::path(a.out) / "model.ckpt", cfg, r.best);
  std::printf("best epoch %d, val_acc %.4f\n", r.best_epoch, r.trace[r.best_epoch].val_acc);
  std::printf("wrote %s and %s\n", (fs::path(a.out) / "model.ckpt").string().c_str(),
              (fs::path(a.out) / "trace.csv").string().c_str());
  return 0;
}

struct EvalArgs {
  std::string checkpoint, data, split = "test";
  int seeds = 1;
  std::uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& a) {
  if (a.seeds < 1) throw UsageError("--seeds must be at least 1");
  const nn::Checkpoint ck = nn::load_checkpoint(a.checkpoint);
  const auto test = read_dataset(a.data, ck.config.task, a.split);
  if (test.empty()) throw IoError("empty split " + a.split);
  std::vector<nn::Metrics> runs;
  for (int k = 0; k < a.seeds; ++k) {
    const std::uint64_t s = a.seed + static_cast<std::uint64_t>(k);
    runs.push_back(nn::evaluate(ck.models, test, ck.config.render, s));
    const auto& m = runs.back();
    std::printf("seed %llu: f1 %.4f precision %.4f recall %.4f accuracy %.4f\n",
                static_cast<unsigned long long>(s), m.f1, m.precision, m.recall, m.accuracy);
  }
  auto summary = [&](const char* name, double nn::Metrics::*field) {
    double mean = 0.0;
    for (const auto& m : runs) mean += m.*field;
    mean /= runs.size();
    double var = 0.0;
    for (const auto& m : runs) var += (m.*field - mean) * (m.*field - mean);
    const double sd = runs.size() > 1 ? std::sqrt(var / (runs.size() - 1)) : 0.0;
    std::printf("%s %.4f ± %.4f\n", name, mean, sd);
  };
  summary("f1", &nn::Metrics::f1);
  summary("precision", &nn::Metrics::precision);
  summary("recall", &nn::Metrics::recall);
  summary("accuracy", &nn::Metrics::accuracy);
  return 0;
}

int cmd_gradcheck(const nn::RenderCheckOptions& opt, int dbp_instances) {
  std::printf("gradcheck res=%d n=%d graphs=%d seed=%llu\n", opt.resolution, opt.max_nodes,
              opt.graphs, static_cast<unsigned long long>(opt.seed));
  bool ok = true;
  auto report = [&](const char* name, double worst, double threshold) {
    const bool pass = worst < threshold;
    ok = ok && pass;
    std::printf("%-14s max_rel_err %.3e  threshold %.0e  %s\n", name, worst, threshold,
                pass ? "ok" : "FAIL");
  };
  const auto render_errs = nn::check_render(opt);
  report("render", *std::max_element(render_errs.begin(), render_errs.end()), 1e-3);
  double prim = 0.0;
  for (const auto& c : nn::check_primitives(opt.seed)) prim = std::max(prim, c.error);
  report("primitives", prim, 1e-4);
  const auto dbp = nn::check_double_backprop(dbp_instances, opt.seed);
  report("double_backprop", *std::max_element(dbp.begin(), dbp.end()), 1e-2);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vsal: graph datasets, layouts, rendering and layout-based classifiers"};
  app.require_subcommand(1);

  DatagenArgs dg;
  auto* datagen = app.add_subcommand("datagen", "generate a balanced labeled dataset split");
  datagen->add_option("--task", dg.task)->required()->check(CLI::IsMember(kTasks));
  datagen->add_option("--n-min", dg.n_min);
  datagen->add_option("--n-max", dg.n_max);
  datagen->add_option("--count", dg.count)->required();
  datagen->add_option("--seed", dg.seed);
  datagen->add_option("--out", dg.out)->required();
  datagen->add_option("--split", dg.split);

  std::string oracle_task, oracle_input;
  auto* oracle = app.add_subcommand("oracle", "run an exact property oracle on a graph file");
  oracle->add_option("--task", oracle_task)->required()->check(CLI::IsMember(kTasks));
  oracle->add_option("--input", oracle_input)->required();

  LayoutArgs la;
  auto* layout = app.add_subcommand("layout", "compute a reference layout");
  layout->add_option("--input", la.input)->required();
  layout->add_option("--init", la.init)->check(CLI::IsMember(kInits));
  layout->add_option("--seed", la.seed);
  layout->add_option("--out", la.out)->required();
  layout->add_option("--png", la.png, "also render the layout to this PNG");
  layout->add_option("--res", la.res)->check(CLI::PositiveNumber);
  layout->add_flag("--report-crossings", la.report_crossings);

  std::string render_graph, render_coords, render_out;
  int render_res = 224;
  auto* render_cmd = app.add_subcommand("render", "render a layout to PNG");
  render_cmd->add_option("--graph", render_graph)->required();
  render_cmd->add_option("--coords", render_coords)->required();
  render_cmd->add_option("--res", render_res)->check(CLI::IsMember({224, 380, 528}));
  render_cmd->add_option("--out", render_out)->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train generator, discriminator and classifier");
  train->add_option("--config", ta.config);
  train->add_option("--data", ta.data)->required();
  train->add_option("--out", ta.out)->required();
  train->add_option("--epochs", ta.epochs)->check(CLI::NonNegativeNumber);
  train->add_option("--set", ta.sets, "override a config key (key=value)");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  eval->add_option("--checkpoint", ea.checkpoint)->required();
  eval->add_option("--data", ea.data)->required();
  eval->add_option("--split", ea.split);
  eval->add_option("--seeds", ea.seeds);
  eval->add_option("--seed", ea.seed);

  nn::RenderCheckOptions rc;
  int dbp_instances = 10;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  gradcheck->add_option("--res", rc.resolution)->check(CLI::Range(4, 1024));
  gradcheck->add_option("--n", rc.max_nodes)->check(CLI::Range(2, 64));
  gradcheck->add_option("--graphs", rc.graphs)->check(CLI::PositiveNumber);
  gradcheck->add_option("--instances", dbp_instances)->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", rc.seed);
  gradcheck->add_flag("--inject-edge-sign-error", rc.flip_edge_gradient)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*datagen) return cmd_datagen(dg);
    if (*oracle) return cmd_oracle(oracle_task, oracle_input);
    if (*layout) return cmd_layout(la);
    if (*render_cmd) return cmd_render(render_graph, render_coords, render_res, render_out);
    if (*train) return cmd_train(ta);
    if (*eval) return cmd_eval(ea);
    if (*gradcheck) return cmd_gradcheck(rc, dbp_instances);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
