// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "acnet/matrix.hpp"
#include "acnet/temporal_map.hpp"

namespace acnet {

/// One generated moment-sentence pair from a dense captioner.
struct CaptionCandidate {
  Matrix sentence_embedding;  // 1 x d_s, may be empty for selection-only use
  MomentInterval interval;
  double sentence_conf = 0.0;  // c^s
  double proposal_conf = 0.0;  // c^p
};

/// Disjoint, sorted union of already-annotated intervals.
class AnnotatedRegion {
 public:
  AnnotatedRegion() = default;
  explicit AnnotatedRegion(std::vector<MomentInterval> intervals);

  /// Merge one more interval, keeping the canonical form.
  void add(const MomentInterval& t);
  const std::vector<MomentInterval>& intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }

 private:
  std::vector<MomentInterval> intervals_;
};

/// Result of caption suppression: candidates in selection order together
/// with the (decayed) score each one carried when it was picked.
struct AuxiliarySet {
  std::vector<CaptionCandidate> selected;
  std::vector<double> scores_at_selection;
  std::vector<int> source_indices;  // positions in the input list
};

/// Initial confidence: (c^s + c^p) * interval_length / duration. Long,
/// confidently captioned actions are treated as general and score high.
double confidence(const CaptionCandidate& e, double duration);

/// IoU between an interval and the union of a region, by interval sweep.
double region_iou(const AnnotatedRegion& region, const MomentInterval& t);

/// Greedy suppression loop over pre-computed scores: repeatedly pick the
/// argmax (ties -> lowest input index), fold its interval into the
/// annotated region, then decay every remaining score by
/// exp(-IoU(region, t_i)^2 / theta). Stops when the pool is exhausted or
/// max_captions were taken. Decays compound across rounds.
AuxiliarySet nacs_select_scored(const std::vector<CaptionCandidate>& candidates,
                                std::vector<double> scores, int max_captions,
                                double theta, AnnotatedRegion region);

/// Same loop with scores computed by confidence() over `duration`.
/// The region should start as the union of all ground-truth intervals.
AuxiliarySet nacs_select(const std::vector<CaptionCandidate>& candidates,
                         int max_captions, double theta, AnnotatedRegion region,
                         double duration);

/// Baseline for ablations: take the top max_captions by initial
/// confidence, no suppression.
AuxiliarySet top_confidence_select(const std::vector<CaptionCandidate>& candidates,
                                   int max_captions, double duration);

}  // namespace acnet
