// SPDX-License-Identifier: Apache-2.0
#include "acnet/attention.hpp"

#include <cmath>

#include "acnet/errors.hpp"

namespace acnet {

ad::Var multi_head_attention(const ad::Var& x, const ad::Var& y,
                             const AttentionParams& params, AttentionTrace* trace) {
  if (params.heads < 1 || params.dim % params.heads != 0) {
    throw ConfigError("attention: dim must be divisible by heads");
  }
  if (x.cols() != params.dim || y.cols() != params.dim) {
    throw DimensionError("attention: operand dim mismatch");
  }
  if (trace != nullptr) trace->head_weights.clear();

  const double inv_sqrt_dm = 1.0 / std::sqrt(static_cast<double>(params.head_dim));
  std::vector<ad::Var> heads;
  heads.reserve(params.heads);
  for (int h = 0; h < params.heads; ++h) {
    ad::Var q = ad::matmul(x, params.w_q[h]);
    ad::Var k = ad::matmul(y, params.w_k[h]);
    ad::Var v = ad::matmul(y, params.w_v[h]);
    ad::Var scores = ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt_dm);
    ad::Var weights = ad::softmax_rows(scores);
    if (trace != nullptr) trace->head_weights.push_back(weights.value());
    heads.push_back(ad::matmul(weights, v));
  }
  ad::Var merged = ad::concat_cols(heads);
  return ad::matmul(merged, params.w_o);
}

}  // namespace acnet
