// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <tuple>
#include <vector>

#include "acnet/autodiff.hpp"
#include "acnet/temporal_map.hpp"

namespace acnet {

struct RankedPrediction {
  MomentInterval interval;
  double score = 0.0;
};

/// Regression-branch score map: sigmoid of cosine similarity between the
/// normalized query feature and every normalized valid cell feature.
/// Invalid cells come out exactly 0.
ad::Var score_regression(const ad::Var& q_r, const ad::Var& v_r_prime, const Matrix& valid);

/// Contrastive-branch score map: plain cosine similarity in [-1, 1].
ad::Var score_contrastive(const ad::Var& q_c, const ad::Var& v_c, const Matrix& valid);

/// S = S_r * ((S_c + 1) / 2)^gamma elementwise over valid cells. The
/// rescale maps the cosine range onto [0, 1] before fusing.
Matrix fuse_scores(const Matrix& s_r, const Matrix& s_c, double gamma, const Matrix& valid);

/// All valid cells as predictions, sorted by score descending (ties:
/// lower cell index first).
std::vector<RankedPrediction> rank_cells(const Matrix& scores, int n_clips, double duration);

/// Greedy non-maximum suppression. `sorted` must already be in
/// descending score order; keeps a prediction unless it overlaps an
/// already-kept one with IoU > threshold.
std::vector<RankedPrediction> nms(const std::vector<RankedPrediction>& sorted,
                                  double threshold);

/// Fraction of samples whose top-n predictions contain one with
/// IoU >= m against the ground truth. Samples with no predictions miss.
double recall_at(const std::vector<std::vector<RankedPrediction>>& predictions,
                 const std::vector<MomentInterval>& ground_truth, int n, double m);

/// Recall figures over an (n, m) grid.
struct MetricTable {
  std::vector<std::tuple<int, double, double>> entries;  // n, m, recall

  double at(int n, double m) const;
  std::string to_text() const;
};

MetricTable compute_metrics(const std::vector<std::vector<RankedPrediction>>& predictions,
                            const std::vector<MomentInterval>& ground_truth,
                            const std::vector<int>& ns, const std::vector<double>& ms);

}  // namespace acnet
