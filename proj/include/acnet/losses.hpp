// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "acnet/autodiff.hpp"
#include "acnet/config.hpp"

namespace acnet {

/// Embeddings gathered for one minibatch of the contrastive objective.
/// All rows are expected L2-normalized (1 x d_n each). Ground-truth
/// moment i pairs with ground-truth sentence i. aux_owner tags each
/// auxiliary sentence with the batch index of the sample it came from.
/// aux_moments is only consumed by the vanilla (symmetric) objective
/// used in ablations; the asymmetric loss never reads it.
struct ContrastiveBatch {
  std::vector<ad::Var> gt_moments;
  std::vector<ad::Var> gt_sentences;
  std::vector<ad::Var> aux_sentences;
  std::vector<int> aux_owner;
  std::vector<ad::Var> aux_moments;
};

/// Moment-to-sentence InfoNCE. Anchors are ground-truth moments; the
/// candidate pool is every ground-truth sentence in the batch plus every
/// auxiliary sentence (hard negatives).
ad::Var accl_v2s(const ContrastiveBatch& batch, double tau_v);

/// Sentence-to-moment InfoNCE. Anchors are ground-truth sentences; the
/// candidate pool is ground-truth moments only, so auxiliary captions
/// never repel query sentences.
ad::Var accl_s2v(const ContrastiveBatch& batch, double tau_s);

/// lambda_v * v2s + lambda_s * s2v.
ad::Var accl(const ContrastiveBatch& batch, const LossWeights& weights);

/// Symmetric InfoNCE that treats auxiliary pairs exactly like ground
/// truth (positives and members of both candidate pools). Ablation
/// baseline; requires aux_moments to be populated alongside
/// aux_sentences.
ad::Var vanilla_nce(const ContrastiveBatch& batch, const LossWeights& weights);

/// Mean binary cross-entropy over valid cells. pred holds sigmoid scores
/// in [0, 1] (clamped internally to [1e-7, 1 - 1e-7]); labels and valid
/// are constant (n^2) x 1 columns.
ad::Var regression_loss(const ad::Var& pred, const Matrix& labels, const Matrix& valid);

/// lambda_c * contrastive + lambda_r * regression.
ad::Var total_loss(const ad::Var& contrastive, const ad::Var& regression,
                   const LossWeights& weights);

}  // namespace acnet
