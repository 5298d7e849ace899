// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "acnet/matrix.hpp"

namespace acnet::ad {

struct Node;

/// Handle to a node in a dynamically built computation graph.
/// Copying a Var shares the node. Graphs are define-by-run: every op
/// allocates a fresh node, so per-sample graphs with variable caption
/// counts fall out naturally.
class Var {
 public:
  Var() = default;

  /// Leaf node (input or trainable parameter).
  static Var leaf(Matrix value);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const;
  const Matrix& grad() const;
  Matrix& mutable_value();
  Matrix& mutable_grad();
  void zero_grad();

  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }

  std::shared_ptr<Node> node() const { return node_; }

 private:
  explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;
  friend Var make_op(Matrix value, std::vector<Var> parents,
                     std::function<void(Node&)> backprop, const char* op_name);
};

struct Node {
  Matrix value;
  Matrix grad;  // same shape as value, zero until backward touches it
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // accumulates into parents' grads
  const char* op = "leaf";

  explicit Node(Matrix v) : value(std::move(v)), grad(value.rows(), value.cols()) {}
};

/// Internal: wraps a computed value into a graph node. Throws
/// NumericError if the result contains NaN/Inf.
Var make_op(Matrix value, std::vector<Var> parents,
            std::function<void(Node&)> backprop, const char* op_name);

// ---- core ops ------------------------------------------------------------

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& x);
Var add(const Var& a, const Var& b);
/// X (n x d) + row vector b (1 x d), broadcast over rows.
Var add_rowvec(const Var& x, const Var& b);
Var sub(const Var& a, const Var& b);
/// Hadamard product, shapes must match.
Var mul(const Var& a, const Var& b);
/// Elementwise multiply by a constant matrix (mask or labels).
Var cmul(const Var& x, const Matrix& c);
/// Scale every row i by constant col(i); col is n x 1.
Var mask_rows(const Var& x, const Matrix& col);
Var scale(const Var& x, double s);
/// a*x + b elementwise with scalar constants.
Var affine(const Var& x, double a, double b);

Var relu(const Var& x);
Var sigmoid(const Var& x);
Var vexp(const Var& x);
/// Natural log; any entry <= 0 is a NumericError.
Var vlog(const Var& x);
/// x^p elementwise; requires x >= 0.
Var vpow(const Var& x, double p);
/// Clamp into [lo, hi]; gradient passes only through unclamped entries.
Var clamp(const Var& x, double lo, double hi);

/// Row-wise softmax with per-row max subtraction.
Var softmax_rows(const Var& x);
/// Row-wise log(sum(exp(.))), returns n x 1. Stable.
Var logsumexp_rows(const Var& x);
/// Rows scaled to unit Euclidean norm; a row with norm below 1e-12 is a
/// NumericError.
Var l2_normalize_rows(const Var& x);
/// Like l2_normalize_rows but rows with mask(i,0) == 0 pass through as
/// zero rows and are exempt from the norm check.
Var l2_normalize_rows_masked(const Var& x, const Matrix& row_mask);

/// Sum of all entries, 1 x 1.
Var sum_all(const Var& x);
/// Mean of all entries, 1 x 1.
Var mean_all(const Var& x);

/// Single row as 1 x cols.
Var row(const Var& x, int i);
/// Selected rows, in order; k x cols.
Var gather_rows(const Var& x, std::vector<int> indices);
/// (i, i) entries as rows x 1; requires cols >= rows.
Var diag_part(const Var& x);

Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);

/// clips: n_clips x d. Output (n_clips^2) x d where valid cell (i,j)
/// holds the elementwise max of clips i..j and invalid cells are zero.
Var span_max_pool(const Var& clips, int n_clips);
/// im2col over the n x n cell grid with kernel k and same padding;
/// input (n^2) x c -> output (n^2) x (k^2 c). Out-of-grid taps are zero.
Var gather_patches(const Var& x, int n_clips, int kernel);

// ---- backward ------------------------------------------------------------

/// Reverse-mode sweep from a scalar (1 x 1) node. Gradients accumulate:
/// calling backward twice without zeroing doubles them, which is what
/// minibatch accumulation wants. Non-scalar seed is a ContractError.
void backward(const Var& loss);

// ---- gradient checking ----------------------------------------------------

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  int worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central-difference check of reverse-mode gradients. build_loss must
/// deterministically rebuild the scalar loss from the current parameter
/// values; it is invoked 2 * (#entries) + 1 times. Relative error uses
/// denominator max(|analytic|, |numeric|, 1e-8).
GradCheckReport finite_diff_check(const std::function<Var()>& build_loss,
                                  std::span<const std::pair<std::string, Var>> params,
                                  double eps = 1e-5);

}  // namespace acnet::ad
