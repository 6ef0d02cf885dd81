#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace echoea::autodiff {

using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
/// Shared, immutable index array (graph structure reused across epochs).
using IndexList = std::shared_ptr<const std::vector<int>>;

inline IndexList make_index_list(std::vector<int> v) {
  return std::make_shared<const std::vector<int>>(std::move(v));
}

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; only valid while
/// its tape is alive.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode automatic differentiation over dense double matrices.
///
/// Nodes are appended in evaluation order, so a node's parents always have
/// smaller ids and backward() can sweep ids in decreasing order.
class Tape {
 public:
  /// Receives the op's output value and d(root)/d(output).
  using Backward =
      std::function<void(Tape&, const Matrix& out_value, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// A leaf whose gradient is accumulated by backward().
  Var parameter(Matrix value);

  /// Records an op output. `backward` must push gradients into the parents
  /// via accumulate(). The node requires a
  /// gradient iff any parent does; otherwise `backward` is dropped.
  Var record(Matrix value, std::initializer_list<Var> parents, Backward backward);
  Var record(Matrix value, std::span<const Var> parents, Backward backward);

  /// Seeds d(root)/d(root) = 1 and propagates. `root` must be 1x1.
  void backward(Var root);

  const Matrix& value(Var v) const { return nodes_[v.id_].value; }
  bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }
  /// Gradient of the last backward() root w.r.t. `v`; zeros if untouched.
  Matrix grad(Var v) const;

  template <typename Derived>
  void accumulate(Var v, const Eigen::MatrixBase<Derived>& g) {
    auto& n = nodes_[v.id_];
    if (!n.requires_grad) return;
    if (!n.has_grad) {
      n.grad = g;
      n.has_grad = true;
    } else {
      n.grad += g;
    }
  }

  /// Adds `g` into row `row` of v's gradient.
  template <typename Derived>
  void accumulate_row(Var v, Eigen::Index row, const Eigen::MatrixBase<Derived>& g) {
    auto& n = nodes_[v.id_];
    if (!n.requires_grad) return;
    ensure_grad(n);
    n.grad.row(row) += g;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    Backward backward;
  };

  static void ensure_grad(Node& n) {
    if (!n.has_grad) {
      n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
      n.has_grad = true;
    }
  }

  // deque: references returned by value() survive later record() calls.
  std::deque<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

// Differentiable ops. Shapes are checked with assertions by Eigen; callers
// validate user-facing shapes before building the graph.

Var matmul(Var a, Var b);
/// s * b for a constant sparse s.
Var spmm(std::shared_ptr<const SparseMatrix> s, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
/// Adds a 1 x cols row vector to every row of `a`.
Var add_row(Var a, Var row);
Var scale(Var a, double factor);
/// Elementwise product with a constant matrix (dropout masks).
Var mul_const(Var a, const Matrix& mask);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double negative_slope);

Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
/// out.row(k) = a.row(index[k]).
Var gather_rows(Var a, IndexList index);

/// Softmax of the column vector `logits` within each segment
/// [offsets[t], offsets[t+1]). Empty segments contribute nothing.
Var segment_softmax(Var logits, IndexList offsets);

/// out.row(t) = sum over k in segment t of weights(k) * values.row(sources[k]).
/// Rows of empty segments are zero.
Var segment_aggregate(Var weights, Var values, IndexList sources, IndexList offsets);

/// Sum of all entries, as a 1x1 matrix.
Var sum(Var a);

}  // namespace echoea::autodiff
