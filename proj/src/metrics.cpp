// SPDX-License-Identifier: Apache-2.0
#include "acnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "acnet/errors.hpp"

namespace acnet {

ad::Var score_regression(const ad::Var& q_r, const ad::Var& v_r_prime, const Matrix& valid) {
  ad::Var q = ad::l2_normalize_rows(q_r);
  ad::Var v = ad::l2_normalize_rows_masked(v_r_prime, valid);
  ad::Var s = ad::sigmoid(ad::matmul(v, ad::transpose(q)));
  return ad::mask_rows(s, valid);
}

ad::Var score_contrastive(const ad::Var& q_c, const ad::Var& v_c, const Matrix& valid) {
  ad::Var q = ad::l2_normalize_rows(q_c);
  ad::Var v = ad::l2_normalize_rows_masked(v_c, valid);
  ad::Var s = ad::matmul(v, ad::transpose(q));
  return ad::mask_rows(s, valid);
}

Matrix fuse_scores(const Matrix& s_r, const Matrix& s_c, double gamma, const Matrix& valid) {
  if (gamma <= 0.0) throw ConfigError("fuse_scores: gamma must be positive");
  if (!s_r.same_shape(s_c) || !s_r.same_shape(valid)) {
    throw DimensionError("fuse_scores: shape mismatch");
  }
  Matrix out(s_r.rows(), s_r.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (valid.data()[i] == 0.0) continue;
    out.data()[i] = s_r.data()[i] * std::pow((s_c.data()[i] + 1.0) / 2.0, gamma);
  }
  return out;
}

std::vector<RankedPrediction> rank_cells(const Matrix& scores, int n_clips, double duration) {
  if (scores.rows() != n_clips * n_clips || scores.cols() != 1) {
    throw DimensionError("rank_cells: scores must be n_clips^2 x 1");
  }
  std::vector<int> cells;
  cells.reserve(valid_cell_count(n_clips));
  for (int i = 0; i < n_clips; ++i) {
    for (int j = i; j < n_clips; ++j) cells.push_back(TemporalMap2D::cell_index(i, j, n_clips));
  }
  std::stable_sort(cells.begin(), cells.end(), [&](int a, int b) {
    return scores(a, 0) > scores(b, 0);
  });
  std::vector<RankedPrediction> out;
  out.reserve(cells.size());
  for (int cell : cells) {
    const int i = cell / n_clips;
    const int j = cell % n_clips;
    out.push_back({candidate_interval(i, j, n_clips, duration), scores(cell, 0)});
  }
  return out;
}

std::vector<RankedPrediction> nms(const std::vector<RankedPrediction>& sorted,
                                  double threshold) {
  std::vector<RankedPrediction> kept;
  for (const auto& p : sorted) {
    bool suppressed = false;
    for (const auto& k : kept) {
      if (temporal_iou(p.interval, k.interval) > threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(p);
  }
  return kept;
}

double recall_at(const std::vector<std::vector<RankedPrediction>>& predictions,
                 const std::vector<MomentInterval>& ground_truth, int n, double m) {
  if (n < 1) throw ContractError("recall_at: n must be >= 1");
  if (m <= 0.0 || m > 1.0) throw ContractError("recall_at: m must lie in (0, 1]");
  if (predictions.size() != ground_truth.size()) {
    throw DimensionError("recall_at: predictions/ground truth size mismatch");
  }
  if (predictions.empty()) throw ContractError("recall_at: empty evaluation set");

  int hits = 0;
  for (std::size_t s = 0; s < predictions.size(); ++s) {
    const auto& preds = predictions[s];
    const int top = std::min<int>(n, static_cast<int>(preds.size()));
    for (int k = 0; k < top; ++k) {
      if (temporal_iou(preds[k].interval, ground_truth[s]) >= m) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double MetricTable::at(int n, double m) const {
  for (const auto& [en, em, recall] : entries) {
    if (en == n && em == m) return recall;
  }
  throw ContractError("MetricTable: no entry for requested (n, m)");
}

std::string MetricTable::to_text() const {
  std::ostringstream os;
  os << "  n    IoU    recall\n";
  for (const auto& [n, m, recall] : entries) {
    char line[64];
    std::snprintf(line, sizeof(line), "%3d   %4.2f   %7.4f\n", n, m, recall);
    os << line;
  }
  return os.str();
}

MetricTable compute_metrics(const std::vector<std::vector<RankedPrediction>>& predictions,
                            const std::vector<MomentInterval>& ground_truth,
                            const std::vector<int>& ns, const std::vector<double>& ms) {
  MetricTable table;
  for (int n : ns) {
    for (double m : ms) {
      table.entries.emplace_back(n, m, recall_at(predictions, ground_truth, n, m));
    }
  }
  return table;
}

}  // namespace acnet
