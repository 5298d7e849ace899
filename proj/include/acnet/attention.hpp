// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "acnet/autodiff.hpp"

namespace acnet {

/// Per-head projection weights for scaled dot-product attention.
struct AttentionParams {
  int heads = 0;
  int dim = 0;       // d
  int head_dim = 0;  // d / heads
  std::vector<ad::Var> w_q;  // each dim x head_dim
  std::vector<ad::Var> w_k;
  std::vector<ad::Var> w_v;
  ad::Var w_o;  // dim x dim
};

/// Instrumentation hook: filled with the post-softmax weights of every
/// head when passed to multi_head_attention.
struct AttentionTrace {
  std::vector<Matrix> head_weights;  // each l_x x l_y
};

/// Standard multi-head attention. x (l_x x d) attends over y (l_y x d):
/// per head softmax(x Wq (y Wk)^T / sqrt(d_m)) y Wv, heads concatenated
/// and mixed by Wo.
ad::Var multi_head_attention(const ad::Var& x, const ad::Var& y,
                             const AttentionParams& params,
                             AttentionTrace* trace = nullptr);

}  // namespace acnet
