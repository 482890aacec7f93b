#include "vsal/nn/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace vsal::nn {

Var Tape::constant(Mat value) {
  nodes_.push_back({std::move(value), {}, nullptr, false});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Mat value, const std::vector<Var>& inputs, BackwardFn backward,
                 bool first_order_only) {
  if (!recording_) return constant(std::move(value));
  Node node{std::move(value), {}, std::move(backward), first_order_only};
  node.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (v.tape() != this) throw std::logic_error("op mixes values from different tapes");
    node.inputs.push_back(v.id());
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

std::vector<Var> Tape::grad(const Var& y, const std::vector<Var>& xs, bool create_graph) {
  if (y.tape() != this) throw std::logic_error("grad target is on another tape");
  if (y.rows() != 1 || y.cols() != 1) throw std::invalid_argument("grad target must be 1x1");
  const int top = y.id();

  std::vector<char> reach(top + 1, 0);
  for (const Var& x : xs)
    if (x.id() <= top) reach[x.id()] = 1;
  for (int id = 0; id <= top; ++id) {
    if (reach[id]) continue;
    for (int in : nodes_[id].inputs) {
      if (reach[in]) {
        reach[id] = 1;
        break;
      }
    }
  }

  std::vector<Var> g(top + 1);
  const bool saved = recording_;
  recording_ = create_graph;
  reach_ = &reach;
  struct Restore {
    Tape* t;
    ~Restore() { t->reach_ = nullptr; }
  } restore{this};
  if (reach[top]) g[top] = constant(Mat::Ones(1, 1));
  for (int id = top; id >= 0; --id) {
    if (!g[id].valid() || !reach[id]) continue;
    // Copies: the backward call appends nodes.
    const std::vector<int> inputs = nodes_[id].inputs;
    if (inputs.empty()) continue;
    if (create_graph && nodes_[id].first_order_only) {
      recording_ = saved;
      throw std::logic_error("second-order gradient through a first-order-only op");
    }
    const BackwardFn backward = nodes_[id].backward;
    std::vector<Var> in_vars;
    in_vars.reserve(inputs.size());
    for (int in : inputs) in_vars.emplace_back(this, in);
    std::vector<Var> gi = backward(in_vars, Var(this, id), g[id]);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const int in = inputs[k];
      if (!reach[in] || !gi[k].valid()) continue;
      g[in] = g[in].valid() ? add(g[in], gi[k]) : gi[k];
    }
  }
  std::vector<Var> out;
  out.reserve(xs.size());
  for (const Var& x : xs) {
    if (x.id() <= top && g[x.id()].valid()) {
      out.push_back(g[x.id()]);
    } else {
      out.push_back(constant(Mat::Zero(x.rows(), x.cols())));
    }
  }
  recording_ = saved;
  return out;
}

namespace {

Tape& tape_of(const Var& a) { return *a.tape(); }

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return tape_of(a).record(a.value() + b.value(), {a, b},
                           [](const std::vector<Var>&, const Var&, const Var& g) {
                             return std::vector<Var>{g, g};
                           });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  return tape_of(a).record(a.value() - b.value(), {a, b},
                           [](const std::vector<Var>&, const Var&, const Var& g) {
                             return std::vector<Var>{g, scale(g, -1.0)};
                           });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  return tape_of(a).record(a.value().cwiseProduct(b.value()), {a, b},
                           [](const std::vector<Var>& in, const Var&, const Var& g) {
                             return std::vector<Var>{mul(g, in[1]), mul(g, in[0])};
                           });
}

Var div(const Var& a, const Var& b) {
  check_same_shape(a, b, "div");
  return tape_of(a).record(a.value().cwiseQuotient(b.value()), {a, b},
                           [](const std::vector<Var>& in, const Var& out, const Var& g) {
                             Var ga = div(g, in[1]);
                             return std::vector<Var>{ga, scale(mul(ga, out), -1.0)};
                           });
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  return tape_of(a).record(a.value() * b.value(), {a, b},
                           [](const std::vector<Var>& in, const Var&, const Var& g) {
                             Tape& t = tape_of(g);
                             std::vector<Var> out(2);
                             if (!t.recording()) {
                               if (in[0].needs_grad())
                                 out[0] = t.constant(g.value() * in[1].value().transpose());
                               if (in[1].needs_grad())
                                 out[1] = t.constant(in[0].value().transpose() * g.value());
                               return out;
                             }
                             if (in[0].needs_grad()) out[0] = matmul(g, transpose(in[1]));
                             if (in[1].needs_grad()) out[1] = matmul(transpose(in[0]), g);
                             return out;
                           });
}

Var transpose(const Var& a) {
  return tape_of(a).record(a.value().transpose(), {a},
                           [](const std::vector<Var>&, const Var&, const Var& g) {
                             return std::vector<Var>{transpose(g)};
                           });
}

Var scale(const Var& a, double s) {
  return tape_of(a).record(a.value() * s, {a},
                           [s](const std::vector<Var>&, const Var&, const Var& g) {
                             return std::vector<Var>{scale(g, s)};
                           });
}

Var add_scalar(const Var& a, double s) {
  return tape_of(a).record((a.value().array() + s).matrix(), {a},
                           [](const std::vector<Var>&, const Var&, const Var& g) {
                             return std::vector<Var>{g};
                           });
}

Var tanh(const Var& a) {
  return tape_of(a).record(a.value().array().tanh().matrix(), {a},
                           [](const std::vector<Var>&, const Var& out, const Var& g) {
                             // 1 - tanh^2
                             Var d = add_scalar(scale(square(out), -1.0), 1.0);
                             return std::vector<Var>{mul(g, d)};
                           });
}

Var relu(const Var& a) {
  return tape_of(a).record(a.value().cwiseMax(0.0), {a},
                           [](const std::vector<Var>& in, const Var&, const Var& g) {
                             Mat mask = (in[0].value().array() > 0.0).cast<double>().matrix();
                             return std::vector<Var>{mul(g, tape_of(g).constant(std::move(mask)))};
                           });
}

Var square(const Var& a) {
  return tape_of(a).record(a.value().array().square().matrix(), {a},
                           [](const std::vector<Var>& in, const Var&, const Var& g) {
                             return std::vector<Var>{scale(mul(g, in[0]), 2.0)};
                           });
}

Var sqrt(const Var& a) {
  return tape_of(a).record(a.value().array().sqrt().matrix(), {a},
                           [](const std::vector<Var>&, const Var& out, const Var& g) {
                             return std::vector<Var>{scale(div(g, out), 0.5)};
                           });
}

Var sum(const Var& a) {
  Mat v(1, 1);
  v(0, 0) = a.value().sum();
  const Eigen::Index r = a.rows(), c = a.cols();
  return tape_of(a).record(std::move(v), {a},
                           [r, c](const std::vector<Var>&, const Var&, const Var& g) {
                             return std::vector<Var>{broadcast(g, r, c)};
                           });
}

Var broadcast(const Var& a, Eigen::Index rows, Eigen::Index cols) {
  if (a.rows() != 1 || a.cols() != 1) throw std::invalid_argument("broadcast: expects 1x1");
  return tape_of(a).record(Mat::Constant(rows, cols, a.scalar()), {a},
                           [](const std::vector<Var>&, const Var&, const Var& g) {
                             return std::vector<Var>{sum(g)};
                           });
}

Var sum_rows(const Var& a) {
  const Eigen::Index n = a.rows();
  return tape_of(a).record(a.value().colwise().sum(), {a},
                           [n](const std::vector<Var>&, const Var&, const Var& g) {
                             return std::vector<Var>{tile_rows(g, n)};
                           });
}

Var tile_rows(const Var& a, Eigen::Index n) {
  if (a.rows() != 1) throw std::invalid_argument("tile_rows: expects a single row");
  return tape_of(a).record(a.value().replicate(n, 1), {a},
                           [](const std::vector<Var>&, const Var&, const Var& g) {
                             return std::vector<Var>{sum_rows(g)};
                           });
}

Var mean_rows(const Var& a) { return scale(sum_rows(a), 1.0 / static_cast<double>(a.rows())); }

Var add_row(const Var& a, const Var& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw std::invalid_argument("add_row: bias must be 1 x cols");
  }
  return add(a, tile_rows(bias, a.rows()));
}

Var concat_cols(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("concat_cols: row counts differ");
  Mat v(a.rows(), a.cols() + b.cols());
  v << a.value(), b.value();
  const Eigen::Index ca = a.cols(), cb = b.cols();
  return tape_of(a).record(std::move(v), {a, b},
                           [ca, cb](const std::vector<Var>&, const Var&, const Var& g) {
                             return std::vector<Var>{slice_cols(g, 0, ca), slice_cols(g, ca, cb)};
                           });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || start + count > a.cols()) throw std::invalid_argument("slice_cols: out of range");
  const Eigen::Index total = a.cols();
  return tape_of(a).record(a.value().middleCols(start, count), {a},
                           [total, start](const std::vector<Var>&, const Var&, const Var& g) {
                             return std::vector<Var>{embed_cols(g, total, start)};
                           });
}

Var embed_cols(const Var& a, Eigen::Index total, Eigen::Index start) {
  if (start < 0 || start + a.cols() > total) throw std::invalid_argument("embed_cols: out of range");
  Mat v = Mat::Zero(a.rows(), total);
  v.middleCols(start, a.cols()) = a.value();
  const Eigen::Index count = a.cols();
  return tape_of(a).record(std::move(v), {a},
                           [start, count](const std::vector<Var>&, const Var&, const Var& g) {
                             return std::vector<Var>{slice_cols(g, start, count)};
                           });
}

Var gather(const Var& a, const std::vector<int>& index, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(index.size()) != rows * cols) {
    throw std::invalid_argument("gather: index size does not match output shape");
  }
  Mat v(rows, cols);
  const double* src = a.value().data();
  double* dst = v.data();
  for (std::size_t k = 0; k < index.size(); ++k) dst[k] = index[k] >= 0 ? src[index[k]] : 0.0;
  const Eigen::Index ar = a.rows(), ac = a.cols();
  return tape_of(a).record(std::move(v), {a},
                           [index, ar, ac](const std::vector<Var>&, const Var&, const Var& g) {
                             return std::vector<Var>{scatter_add(g, index, ar, ac)};
                           });
}

Var scatter_add(const Var& a, const std::vector<int>& index, Eigen::Index rows,
                Eigen::Index cols) {
  if (static_cast<Eigen::Index>(index.size()) != a.value().size()) {
    throw std::invalid_argument("scatter_add: index size does not match input");
  }
  Mat v = Mat::Zero(rows, cols);
  const double* src = a.value().data();
  double* dst = v.data();
  for (std::size_t k = 0; k < index.size(); ++k)
    if (index[k] >= 0) dst[index[k]] += src[k];
  const Eigen::Index ar = a.rows(), ac = a.cols();
  return tape_of(a).record(std::move(v), {a},
                           [index, ar, ac](const std::vector<Var>&, const Var&, const Var& g) {
                             return std::vector<Var>{gather(g, index, ar, ac)};
                           });
}

Var softmax_cross_entropy(const Var& logits, const std::vector<int>& labels) {
  const Mat& z = logits.value();
  if (static_cast<Eigen::Index>(labels.size()) != z.rows()) {
    throw std::invalid_argument("softmax_cross_entropy: one label per row required");
  }
  const Eigen::Index b = z.rows();
  Mat probs(z.rows(), z.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= z.cols()) throw std::invalid_argument("softmax_cross_entropy: bad label");
    const double zmax = z.row(i).maxCoeff();
    const double lse = zmax + std::log((z.row(i).array() - zmax).exp().sum());
    loss += lse - z(i, y);
    probs.row(i) = (z.row(i).array() - lse).exp().matrix();
  }
  Mat v(1, 1);
  v(0, 0) = loss / static_cast<double>(b);
  Mat d = probs;
  for (Eigen::Index i = 0; i < b; ++i) d(i, labels[i]) -= 1.0;
  d /= static_cast<double>(b);
  return logits.tape()->record(
      std::move(v), {logits},
      [d](const std::vector<Var>&, const Var&, const Var& g) {
        Tape& t = *g.tape();
        return std::vector<Var>{t.constant(d * g.scalar())};
      },
      true);
}

}  // namespace vsal::nn
