#pragma once

// Minimal define-by-run reverse-mode differentiation over dense matrices.
//
// Every op allocates a node holding its value, a gradient buffer (only when
// some input requires grad), and a closure that pushes its gradient into the
// inputs. Graphs are rebuilt on every forward pass; dropping the last handle
// to the loss frees the whole graph. Parameters are leaf nodes that outlive
// the graph and accumulate gradients across backward calls until zeroed.

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "tsgc/common.hpp"

namespace tsgc {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {
struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
};
}  // namespace detail

class DiffMatrix {
 public:
  DiffMatrix() = default;

  static DiffMatrix constant(Matrix value);
  static DiffMatrix parameter(Matrix value);
  static DiffMatrix scalar(double value) { return constant(Matrix::Constant(1, 1, value)); }

  Eigen::Index rows() const { return node().value.rows(); }
  Eigen::Index cols() const { return node().value.cols(); }
  const Matrix& value() const { return node().value; }
  /// Mutable access for optimizers and in-place clamps on leaf parameters.
  Matrix& mutable_value() { return node().value; }
  const Matrix& grad() const { return node().grad; }
  Matrix& mutable_grad() { return node().grad; }
  bool requires_grad() const { return node().requires_grad; }
  void zero_grad();
  /// Value of a 1x1 matrix.
  double item() const;
  bool valid() const { return static_cast<bool>(node_); }

  /// Builds a result node; `backward` receives the result node whose `grad`
  /// holds dLoss/dResult.
  static DiffMatrix make(Matrix value, std::vector<DiffMatrix> inputs, std::function<void(detail::Node&)> backward);

  const std::shared_ptr<detail::Node>& handle() const { return node_; }

 private:
  explicit DiffMatrix(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  detail::Node& node() const;

  std::shared_ptr<detail::Node> node_;
};

/// Accumulates dLoss/dLeaf into every reachable leaf with requires_grad.
/// Intermediate gradients are reset first, so repeated calls on the same
/// graph add exactly one more copy of the gradient to each leaf.
void backward(const DiffMatrix& loss);

DiffMatrix matmul(const DiffMatrix& a, const DiffMatrix& b);
DiffMatrix add(const DiffMatrix& a, const DiffMatrix& b);
DiffMatrix sub(const DiffMatrix& a, const DiffMatrix& b);
DiffMatrix hadamard(const DiffMatrix& a, const DiffMatrix& b);
DiffMatrix scale(const DiffMatrix& a, double factor);
DiffMatrix add_scalar(const DiffMatrix& a, double offset);
DiffMatrix relu(const DiffMatrix& a);
DiffMatrix sigmoid(const DiffMatrix& a);
DiffMatrix exp(const DiffMatrix& a);
/// Throws on any non-positive entry.
DiffMatrix log(const DiffMatrix& a);
DiffMatrix transpose(const DiffMatrix& a);
/// Sum of all entries, as 1x1.
DiffMatrix sum(const DiffMatrix& a);
DiffMatrix mean(const DiffMatrix& a);
/// Per-row sums (n x 1) and per-column sums (1 x c).
DiffMatrix sum_rows(const DiffMatrix& a);
DiffMatrix sum_cols(const DiffMatrix& a);
/// a (n x c) plus a 1 x c row added to every row.
DiffMatrix row_broadcast(const DiffMatrix& a, const DiffMatrix& row);
/// Row-wise log-softmax.
DiffMatrix log_softmax_rows(const DiffMatrix& a);
/// Elementwise clamp; the gradient is passed through only strictly inside (lo, hi).
DiffMatrix clamp(const DiffMatrix& a, double lo, double hi);
/// Inverted dropout: zero with probability p, scale survivors by 1/(1-p).
/// Identity (the same handle) when !training or p == 0.
DiffMatrix dropout(const DiffMatrix& a, double p, Rng& rng, bool training);
/// Multiplies by a fixed 0/1-valued (or any) mask, no randomness.
DiffMatrix apply_mask(const DiffMatrix& a, const Matrix& mask);

/// Uniform on +-sqrt(6/(rows+cols)).
DiffMatrix glorot_init(Eigen::Index rows, Eigen::Index cols, Rng& rng);

}  // namespace tsgc
