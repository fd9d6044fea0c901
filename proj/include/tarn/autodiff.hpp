// SPDX-License-Identifier: Apache-2.0
#pragma once

// Define-by-run reverse-mode differentiation over dense matrices.
//
// Every op returns a Var that owns its value and (when gradients are being
// recorded) a closure that pushes the incoming gradient back to its parents.
// The graph is rebuilt on every forward pass and released when the last Var
// referencing it goes out of scope.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tarn/matrix.hpp"

namespace tarn::ad {

struct Node {
  Matrix value;
  Matrix grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  Matrix& ensure_grad();

  Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;
  /// Releases long parent chains iteratively instead of recursively.
  ~Node();
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Matrix& value() const { return node_->value; }
  /// Mutable access for optimizers and checkpoint loading; never call while a
  /// graph built from this Var is awaiting backward().
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  Matrix& mutable_grad() { return node_->ensure_grad(); }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad();

  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool defined() const noexcept { return static_cast<bool>(node_); }

  const std::shared_ptr<Node>& node() const noexcept { return node_; }

  /// Scalar value of a 1x1 Var.
  double item() const;

 private:
  std::shared_ptr<Node> node_;
};

/// Leaf that never receives a gradient.
Var constant(Matrix value);
/// Learnable leaf; its gradient accumulates across backward() calls until zero_grad().
Var parameter(Matrix value);

/// While alive, ops on this thread do not record the graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

// Linear algebra.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& x);

// Elementwise. Binary ops require identical shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
/// x[m x d] + bias[1 x d] added to every row.
Var add_row_bias(const Var& x, const Var& bias);
Var scale(const Var& x, double factor);
Var sigmoid(const Var& x);
Var tanh(const Var& x);
/// Subgradient 0 at x == 0.
Var relu(const Var& x);
Var square(const Var& x);

/// Softmax down each column (every column sums to 1).
Var softmax_cols(const Var& x);

// Reductions.
/// Mean over rows: [m x n] -> [1 x n].
Var row_mean(const Var& x);
/// Mean over columns: [m x n] -> [m x 1].
Var col_mean(const Var& x);
/// Sum of all entries -> [1 x 1].
Var sum(const Var& x);
/// Row-wise Euclidean distance ||a_m - b_m||: [m x d],[m x d] -> [m x 1].
/// The gradient at a_m == b_m is zero.
Var l2_distance_rows(const Var& a, const Var& b);
/// Row-wise cosine similarity: [m x d],[m x d] -> [m x 1]. Defined as 0 (with
/// zero gradient) when either row is the zero vector.
Var cosine_rows(const Var& a, const Var& b);
/// Single row pair versions of the above: [1 x d],[1 x d] -> [1 x 1].
Var l2_norm_rowpair(const Var& a, const Var& b);
Var cosine_rowpair(const Var& a, const Var& b);

/// Mean binary cross-entropy of probabilities q against 0/1 targets, with the
/// log argument clamped at 1e-12.
Var binary_cross_entropy(const Var& q, const Matrix& targets);

// Structural.
Var row(const Var& x, std::size_t index);
Var reverse_rows(const Var& x);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);

/// Reverse sweep from a 1x1 loss. Gradients accumulate into every node that
/// requires them; each node is visited once in reverse topological order.
void backward(const Var& loss);

}  // namespace tarn::ad
