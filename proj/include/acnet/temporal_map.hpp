// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "acnet/autodiff.hpp"
#include "acnet/matrix.hpp"

namespace acnet {

/// A [start, end] span in seconds within a video.
struct MomentInterval {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
};

bool operator==(const MomentInterval& a, const MomentInterval& b);

/// N_v x N_v grid over candidate moments. Cell (i, j) with i <= j spans
/// from the start of clip i to the end of clip j; cells with i > j are
/// invalid and carry exactly 0. Rows of `grid` are indexed i * n_clips + j.
struct TemporalMap2D {
  int n_clips = 0;
  int channels = 0;
  Matrix grid;  // (n_clips^2) x channels

  static int cell_index(int i, int j, int n) { return i * n + j; }
  bool valid(int i, int j) const { return 0 <= i && i <= j && j < n_clips; }
  double at(int i, int j, int c = 0) const { return grid(cell_index(i, j, n_clips), c); }
};

/// Fixed-interval sampled video clips.
struct ClipSequence {
  int n_clips = 0;
  int dim = 0;
  Matrix features;  // n_clips x dim
  double duration = 0.0;
};

/// 0/1 column mask over the flattened grid, 1 on cells with i <= j.
Matrix valid_mask(int n_clips);
int valid_cell_count(int n_clips);

/// Mean-pool frame features (t x d) into n_clips windows
/// [floor(i*t/n), floor((i+1)*t/n)). An empty window inherits the frame
/// at its (clamped) start position so tiny videos stay usable.
ClipSequence sample_clips(const Matrix& frame_features, int n_clips, double duration);

/// Time span of cell (i, j): [i*duration/n, (j+1)*duration/n].
MomentInterval candidate_interval(int i, int j, int n_clips, double duration);

/// Intersection over union; 0 when disjoint.
double temporal_iou(const MomentInterval& a, const MomentInterval& b);

/// One-channel map of IoU between every candidate cell and t.
TemporalMap2D encode_interval_map(const MomentInterval& t, int n_clips, double duration);

/// Supervision map: clamp((IoU - t_min) / (t_max - t_min), 0, 1).
TemporalMap2D iou_label_map(const MomentInterval& gt, int n_clips, double duration,
                            double t_min, double t_max);

/// Flattened index of the valid cell with maximal IoU against t; ties go
/// to the earlier start (lexicographically first (i, j)).
int argmax_iou_cell(const MomentInterval& t, int n_clips, double duration);

/// One stacked refinement convolution over the cell grid.
struct ConvLayer {
  ad::Var weight;  // (kernel^2 * c_in) x c_out
  ad::Var bias;    // 1 x c_out
};

/// Differentiable moment feature map: diagonal cells hold clip features,
/// off-diagonal cells are span max pooled, then `layers` stacked
/// convolutions (kernel x kernel, same padding, ReLU) refine the map.
/// Invalid cells are exactly 0 after every stage.
ad::Var build_feature_map(const ad::Var& clips, int n_clips, int kernel,
                          std::span<const ConvLayer> layers);

}  // namespace acnet
