// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "acnet/attention.hpp"
#include "acnet/autodiff.hpp"
#include "acnet/config.hpp"
#include "acnet/nacs.hpp"
#include "acnet/temporal_map.hpp"

namespace acnet {

/// Ordered, named collection of trainable parameters. Order is the
/// registration order and is what the checkpoint format serializes.
class ParamStore {
 public:
  ad::Var add(std::string name, Matrix init);
  const std::vector<std::pair<std::string, ad::Var>>& items() const { return items_; }
  ad::Var* find(const std::string& name);
  void zero_grad();
  std::size_t entry_count() const;

 private:
  std::vector<std::pair<std::string, ad::Var>> items_;
};

/// Dual-branch features for one sample. Maps are (n_clips^2) x d_n with
/// invalid cells exactly zero; aux blocks have one row per auxiliary
/// caption and are undefined when the sample has none.
struct BranchFeatures {
  ad::Var v_r;  // regression-branch moment map
  ad::Var v_c;  // contrastive-branch moment map
  ad::Var q_r;  // 1 x d_n
  ad::Var q_c;
  ad::Var q_r_aux;  // l x d_n
  ad::Var q_c_aux;
  int aux_count = 0;
};

/// Everything the losses and scorers need from one sample's forward pass.
struct SampleForward {
  BranchFeatures features;
  ad::Var v_r_prime;  // prior-fused regression map
  Matrix valid;       // (n_clips^2) x 1 cell mask
};

/// The grounding network: clip encoder with a 2D moment map, dual-branch
/// projections, caption guided attention, and the feed-forward fusion
/// that produces the final regression features.
class GroundingModel {
 public:
  GroundingModel(const ModelConfig& config, std::uint64_t seed);

  /// frames: t x d_v -> moment feature map (n_clips^2) x d_v.
  ad::Var encode_video(const Matrix& frames, double duration);

  /// Project the visual map, the query and the auxiliary sentences into
  /// the two branches. aux_embeddings is l x d_s (l may be 0).
  BranchFeatures project_features(const ad::Var& visual_map, const Matrix& query_embedding,
                                  const Matrix& aux_embeddings) const;

  /// Semantic relations between auxiliary sentences and the query:
  /// aux rows attend over the single query row. Requires aux_count >= 1.
  ad::Var cga_relations(const ad::Var& q_aux, const ad::Var& q,
                        AttentionTrace* trace = nullptr) const;

  /// Distribute relation vectors over the moment grid weighted by each
  /// caption's IoU map (iou_maps: l x n_clips^2), then an MLP per cell.
  ad::Var cga_project(const ad::Var& relations, const Matrix& iou_maps) const;

  /// V'_r = relu((V_r + V_mu) W_f + b_f) W_ff + b_ff over valid cells.
  /// Pass prior == nullptr when the sample has no auxiliary captions.
  ad::Var cga_fuse(const ad::Var& v_r, const ad::Var* prior) const;

  /// Full forward pass for one (video, query, aux captions) sample.
  SampleForward forward(const Matrix& frames, double duration, const Matrix& query_embedding,
                        const std::vector<CaptionCandidate>& aux);

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const ModelConfig& config() const { return config_; }
  const Matrix& cell_mask() const { return cell_mask_; }

 private:
  ModelConfig config_;
  ParamStore params_;
  Matrix cell_mask_;

  std::vector<ConvLayer> conv_;
  ad::Var proj_v_r_, proj_v_r_bias_, proj_v_c_, proj_v_c_bias_;
  ad::Var proj_q_r_, proj_q_r_bias_, proj_q_c_, proj_q_c_bias_;
  AttentionParams attention_;
  std::vector<std::pair<ad::Var, ad::Var>> mlp_;  // weight, bias; last is output
  ad::Var w_f_, b_f_, w_ff_, b_ff_;
};

}  // namespace acnet
