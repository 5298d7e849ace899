// SPDX-License-Identifier: Apache-2.0
#include "acnet/temporal_map.hpp"

#include <algorithm>
#include <cmath>

#include "acnet/errors.hpp"

namespace acnet {

bool operator==(const MomentInterval& a, const MomentInterval& b) {
  return a.start == b.start && a.end == b.end;
}

Matrix valid_mask(int n_clips) {
  Matrix mask(n_clips * n_clips, 1);
  for (int i = 0; i < n_clips; ++i) {
    for (int j = i; j < n_clips; ++j) mask(TemporalMap2D::cell_index(i, j, n_clips), 0) = 1.0;
  }
  return mask;
}

int valid_cell_count(int n_clips) { return n_clips * (n_clips + 1) / 2; }

ClipSequence sample_clips(const Matrix& frame_features, int n_clips, double duration) {
  const int t = frame_features.rows();
  const int d = frame_features.cols();
  if (t < 1) throw ContractError("sample_clips: need at least one frame");
  if (n_clips < 1) throw ConfigError("sample_clips: n_clips must be >= 1");
  if (duration <= 0.0) throw ConfigError("sample_clips: duration must be positive");

  ClipSequence clips;
  clips.n_clips = n_clips;
  clips.dim = d;
  clips.duration = duration;
  clips.features = Matrix(n_clips, d);
  for (int i = 0; i < n_clips; ++i) {
    const int lo = static_cast<int>(static_cast<long long>(i) * t / n_clips);
    const int hi = static_cast<int>(static_cast<long long>(i + 1) * t / n_clips);
    double* out = clips.features.row_ptr(i);
    if (hi > lo) {
      for (int f = lo; f < hi; ++f) {
        const double* src = frame_features.row_ptr(f);
        for (int c = 0; c < d; ++c) out[c] += src[c];
      }
      for (int c = 0; c < d; ++c) out[c] /= (hi - lo);
    } else {
      const int f = std::min(lo, t - 1);
      std::copy(frame_features.row_ptr(f), frame_features.row_ptr(f) + d, out);
    }
  }
  return clips;
}

MomentInterval candidate_interval(int i, int j, int n_clips, double duration) {
  if (i < 0 || j >= n_clips || i > j) {
    throw ContractError("candidate_interval: invalid cell (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
  }
  const double unit = duration / n_clips;
  return {i * unit, (j + 1) * unit};
}

double temporal_iou(const MomentInterval& a, const MomentInterval& b) {
  const double inter = std::min(a.end, b.end) - std::max(a.start, b.start);
  if (inter <= 0.0) return 0.0;
  const double uni = std::max(a.end, b.end) - std::min(a.start, b.start);
  return uni > 0.0 ? inter / uni : 0.0;
}

TemporalMap2D encode_interval_map(const MomentInterval& t, int n_clips, double duration) {
  TemporalMap2D map;
  map.n_clips = n_clips;
  map.channels = 1;
  map.grid = Matrix(n_clips * n_clips, 1);
  for (int i = 0; i < n_clips; ++i) {
    for (int j = i; j < n_clips; ++j) {
      map.grid(TemporalMap2D::cell_index(i, j, n_clips), 0) =
          temporal_iou(candidate_interval(i, j, n_clips, duration), t);
    }
  }
  return map;
}

TemporalMap2D iou_label_map(const MomentInterval& gt, int n_clips, double duration,
                            double t_min, double t_max) {
  if (t_min >= t_max) throw ConfigError("iou_label_map: t_min must be below t_max");
  TemporalMap2D map = encode_interval_map(gt, n_clips, duration);
  for (int i = 0; i < n_clips; ++i) {
    for (int j = i; j < n_clips; ++j) {
      double& v = map.grid(TemporalMap2D::cell_index(i, j, n_clips), 0);
      v = std::clamp((v - t_min) / (t_max - t_min), 0.0, 1.0);
    }
  }
  return map;
}

int argmax_iou_cell(const MomentInterval& t, int n_clips, double duration) {
  int best_cell = 0;
  double best = -1.0;
  for (int i = 0; i < n_clips; ++i) {
    for (int j = i; j < n_clips; ++j) {
      const double iou = temporal_iou(candidate_interval(i, j, n_clips, duration), t);
      if (iou > best) {
        best = iou;
        best_cell = TemporalMap2D::cell_index(i, j, n_clips);
      }
    }
  }
  return best_cell;
}

ad::Var build_feature_map(const ad::Var& clips, int n_clips, int kernel,
                          std::span<const ConvLayer> layers) {
  const Matrix mask = valid_mask(n_clips);
  ad::Var map = ad::span_max_pool(clips, n_clips);
  for (const ConvLayer& layer : layers) {
    ad::Var patches = ad::gather_patches(map, n_clips, kernel);
    map = ad::matmul(patches, layer.weight);
    map = ad::add_rowvec(map, layer.bias);
    map = ad::relu(map);
    map = ad::mask_rows(map, mask);
  }
  return map;
}

}  // namespace acnet
