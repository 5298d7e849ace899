// SPDX-License-Identifier: Apache-2.0
#include "acnet/nacs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acnet/errors.hpp"

namespace acnet {

AnnotatedRegion::AnnotatedRegion(std::vector<MomentInterval> intervals) {
  for (const auto& t : intervals) add(t);
}

void AnnotatedRegion::add(const MomentInterval& t) {
  MomentInterval merged = t;
  std::vector<MomentInterval> next;
  next.reserve(intervals_.size() + 1);
  for (const auto& cur : intervals_) {
    if (cur.end < merged.start || cur.start > merged.end) {
      next.push_back(cur);
    } else {
      merged.start = std::min(merged.start, cur.start);
      merged.end = std::max(merged.end, cur.end);
    }
  }
  next.push_back(merged);
  std::sort(next.begin(), next.end(),
            [](const MomentInterval& a, const MomentInterval& b) { return a.start < b.start; });
  intervals_ = std::move(next);
}

double confidence(const CaptionCandidate& e, double duration) {
  if (duration <= 0.0) throw ContractError("confidence: duration must be positive");
  return (e.sentence_conf + e.proposal_conf) * e.interval.length() / duration;
}

double region_iou(const AnnotatedRegion& region, const MomentInterval& t) {
  if (region.empty()) return 0.0;
  double inter = 0.0;
  double region_len = 0.0;
  for (const auto& r : region.intervals()) {
    region_len += r.length();
    const double lo = std::max(r.start, t.start);
    const double hi = std::min(r.end, t.end);
    if (hi > lo) inter += hi - lo;
  }
  const double uni = region_len + t.length() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

AuxiliarySet nacs_select_scored(const std::vector<CaptionCandidate>& candidates,
                                std::vector<double> scores, int max_captions,
                                double theta, AnnotatedRegion region) {
  if (theta <= 0.0) throw ConfigError("nacs: theta must be positive");
  if (max_captions < 0) throw ConfigError("nacs: max_captions must be >= 0");
  if (scores.size() != candidates.size()) {
    throw DimensionError("nacs: scores/candidates length mismatch");
  }

  std::vector<int> pool(candidates.size());
  std::iota(pool.begin(), pool.end(), 0);

  AuxiliarySet out;
  while (!pool.empty() && static_cast<int>(out.selected.size()) < max_captions) {
    // argmax over current scores, lowest original index on ties
    std::size_t best = 0;
    for (std::size_t k = 1; k < pool.size(); ++k) {
      if (scores[pool[k]] > scores[pool[best]]) best = k;
    }
    const int chosen = pool[best];
    out.selected.push_back(candidates[chosen]);
    out.scores_at_selection.push_back(scores[chosen]);
    out.source_indices.push_back(chosen);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));

    region.add(candidates[chosen].interval);
    for (int idx : pool) {
      const double iou = region_iou(region, candidates[idx].interval);
      scores[idx] *= std::exp(-(iou * iou) / theta);
    }
  }
  return out;
}

AuxiliarySet nacs_select(const std::vector<CaptionCandidate>& candidates,
                         int max_captions, double theta, AnnotatedRegion region,
                         double duration) {
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& e : candidates) scores.push_back(confidence(e, duration));
  return nacs_select_scored(candidates, std::move(scores), max_captions, theta,
                            std::move(region));
}

AuxiliarySet top_confidence_select(const std::vector<CaptionCandidate>& candidates,
                                   int max_captions, double duration) {
  std::vector<int> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& e : candidates) scores.push_back(confidence(e, duration));
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  AuxiliarySet out;
  const int take = std::min<int>(max_captions, static_cast<int>(order.size()));
  for (int k = 0; k < take; ++k) {
    out.selected.push_back(candidates[order[k]]);
    out.scores_at_selection.push_back(scores[order[k]]);
    out.source_indices.push_back(order[k]);
  }
  return out;
}

}  // namespace acnet
