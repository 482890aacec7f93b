#pragma once

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <vector>

namespace vsal::nn {

using Mat = Eigen::MatrixXd;

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  const Mat& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  /// False while a backward pass runs and this value leads to none of its
  /// targets; backward functions may then return an invalid Var for it.
  bool needs_grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Maps the upstream gradient of a node to gradients of its inputs. Written
/// in terms of Var ops; a backward pass can itself be recorded.
using BackwardFn =
    std::function<std::vector<Var>(const std::vector<Var>& inputs, const Var& out, const Var& g)>;

/// Append-only record of operations. Node ids increase in creation order,
/// so descending ids are a reverse topological order.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Mat value);

  /// Records an op. With recording off the result is a constant.
  Var record(Mat value, const std::vector<Var>& inputs, BackwardFn backward,
             bool first_order_only = false);

  /// d y / d x for each x (y must be 1x1). With create_graph the returned
  /// gradients are themselves recorded and can be differentiated again.
  std::vector<Var> grad(const Var& y, const std::vector<Var>& xs, bool create_graph = false);

  bool recording() const { return recording_; }
  void set_recording(bool on) { recording_ = on; }
  std::size_t size() const { return nodes_.size(); }
  const Mat& value(int id) const { return nodes_[id].value; }
  bool needs_grad(int id) const {
    return reach_ == nullptr || id >= static_cast<int>(reach_->size()) || (*reach_)[id];
  }

 private:
  struct Node {
    Mat value;
    std::vector<int> inputs;
    BackwardFn backward;
    bool first_order_only = false;
  };
  std::deque<Node> nodes_;
  bool recording_ = true;
  const std::vector<char>* reach_ = nullptr;
};

/// Turns recording off for its lifetime.
class NoGrad {
 public:
  explicit NoGrad(Tape& t) : tape_(t), saved_(t.recording()) { t.set_recording(false); }
  ~NoGrad() { tape_.set_recording(saved_); }
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;

 private:
  Tape& tape_;
  bool saved_;
};

inline const Mat& Var::value() const { return tape_->value(id_); }
inline bool Var::needs_grad() const { return tape_->needs_grad(id_); }

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // elementwise
Var div(const Var& a, const Var& b);  // elementwise
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var tanh(const Var& a);
Var relu(const Var& a);
Var square(const Var& a);
Var sqrt(const Var& a);

Var sum(const Var& a);                   // -> 1x1
Var broadcast(const Var& a, Eigen::Index rows, Eigen::Index cols);  // 1x1 -> rows x cols
Var sum_rows(const Var& a);              // n x d -> 1 x d
Var tile_rows(const Var& a, Eigen::Index n);  // 1 x d -> n x d
Var mean_rows(const Var& a);
Var add_row(const Var& a, const Var& bias);  // n x d + 1 x d

Var concat_cols(const Var& a, const Var& b);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var embed_cols(const Var& a, Eigen::Index total, Eigen::Index start);

/// out.data()[k] = a.data()[index[k]], or 0 where index[k] < 0.
Var gather(const Var& a, const std::vector<int>& index, Eigen::Index rows, Eigen::Index cols);
/// Adjoint of gather: accumulates a.data()[k] into out.data()[index[k]].
Var scatter_add(const Var& a, const std::vector<int>& index, Eigen::Index rows,
                Eigen::Index cols);

/// Mean softmax cross-entropy of B x C logits against class labels.
/// First order only.
Var softmax_cross_entropy(const Var& logits, const std::vector<int>& labels);

}  // namespace vsal::nn
