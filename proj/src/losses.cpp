// SPDX-License-Identifier: Apache-2.0
#include "acnet/losses.hpp"

#include "acnet/errors.hpp"

namespace acnet {

namespace {

ad::Var stack(const std::vector<ad::Var>& rows) {
  return ad::concat_rows(std::span<const ad::Var>(rows.data(), rows.size()));
}

ad::Var nce_direction(const ad::Var& anchors, const ad::Var& candidates, double tau,
                      int pair_count) {
  // anchor i's positive is candidate i; candidates may contain extra
  // negatives beyond the first pair_count rows
  ad::Var logits = ad::scale(ad::matmul(anchors, ad::transpose(candidates)), 1.0 / tau);
  ad::Var positives = ad::diag_part(logits);
  ad::Var lse = ad::logsumexp_rows(logits);
  return ad::scale(ad::sum_all(ad::sub(lse, positives)), 1.0 / pair_count);
}

void check_batch(const ContrastiveBatch& batch, double tau) {
  if (batch.gt_moments.empty()) throw ContractError("contrastive loss: empty positive set");
  if (batch.gt_moments.size() != batch.gt_sentences.size()) {
    throw ContractError("contrastive loss: moment/sentence pair mismatch");
  }
  if (tau <= 0.0) throw ConfigError("contrastive loss: temperature must be positive");
}

}  // namespace

ad::Var accl_v2s(const ContrastiveBatch& batch, double tau_v) {
  check_batch(batch, tau_v);
  std::vector<ad::Var> pool = batch.gt_sentences;
  pool.insert(pool.end(), batch.aux_sentences.begin(), batch.aux_sentences.end());
  return nce_direction(stack(batch.gt_moments), stack(pool), tau_v,
                       static_cast<int>(batch.gt_moments.size()));
}

ad::Var accl_s2v(const ContrastiveBatch& batch, double tau_s) {
  check_batch(batch, tau_s);
  return nce_direction(stack(batch.gt_sentences), stack(batch.gt_moments), tau_s,
                       static_cast<int>(batch.gt_moments.size()));
}

ad::Var accl(const ContrastiveBatch& batch, const LossWeights& weights) {
  return ad::add(ad::scale(accl_v2s(batch, weights.tau_v), weights.lambda_v),
                 ad::scale(accl_s2v(batch, weights.tau_s), weights.lambda_s));
}

ad::Var vanilla_nce(const ContrastiveBatch& batch, const LossWeights& weights) {
  check_batch(batch, weights.tau_v);
  if (batch.aux_moments.size() != batch.aux_sentences.size()) {
    throw ContractError("vanilla_nce: aux moments/sentences pair mismatch");
  }
  std::vector<ad::Var> moments = batch.gt_moments;
  moments.insert(moments.end(), batch.aux_moments.begin(), batch.aux_moments.end());
  std::vector<ad::Var> sentences = batch.gt_sentences;
  sentences.insert(sentences.end(), batch.aux_sentences.begin(), batch.aux_sentences.end());
  const int pairs = static_cast<int>(moments.size());
  ad::Var m = stack(moments);
  ad::Var s = stack(sentences);
  return ad::add(ad::scale(nce_direction(m, s, weights.tau_v, pairs), weights.lambda_v),
                 ad::scale(nce_direction(s, m, weights.tau_s, pairs), weights.lambda_s));
}

ad::Var regression_loss(const ad::Var& pred, const Matrix& labels, const Matrix& valid) {
  if (pred.cols() != 1 || !pred.value().same_shape(labels) || !pred.value().same_shape(valid)) {
    throw DimensionError("regression_loss: pred/labels/valid must all be n x 1");
  }
  double cell_count = 0.0;
  for (int i = 0; i < valid.rows(); ++i) cell_count += valid(i, 0);
  if (cell_count < 1.0) throw ContractError("regression_loss: no valid cells");

  Matrix one_minus_labels = labels;
  for (std::size_t i = 0; i < one_minus_labels.size(); ++i) {
    one_minus_labels.data()[i] = 1.0 - one_minus_labels.data()[i];
  }

  ad::Var p = ad::clamp(pred, 1e-7, 1.0 - 1e-7);
  ad::Var term = ad::add(ad::cmul(ad::vlog(p), labels),
                         ad::cmul(ad::vlog(ad::affine(p, -1.0, 1.0)), one_minus_labels));
  return ad::scale(ad::sum_all(ad::mask_rows(term, valid)), -1.0 / cell_count);
}

ad::Var total_loss(const ad::Var& contrastive, const ad::Var& regression,
                   const LossWeights& weights) {
  return ad::add(ad::scale(contrastive, weights.lambda_c),
                 ad::scale(regression, weights.lambda_r));
}

}  // namespace acnet
