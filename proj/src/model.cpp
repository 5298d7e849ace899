// SPDX-License-Identifier: Apache-2.0
#include "acnet/model.hpp"

#include <cmath>

#include "acnet/errors.hpp"
#include "acnet/rng.hpp"

namespace acnet {

ad::Var ParamStore::add(std::string name, Matrix init) {
  for (const auto& [existing, var] : items_) {
    if (existing == name) throw ContractError("duplicate parameter name: " + name);
  }
  ad::Var var = ad::Var::leaf(std::move(init));
  items_.emplace_back(std::move(name), var);
  return var;
}

ad::Var* ParamStore::find(const std::string& name) {
  for (auto& [existing, var] : items_) {
    if (existing == name) return &var;
  }
  return nullptr;
}

void ParamStore::zero_grad() {
  for (auto& [name, var] : items_) var.zero_grad();
}

std::size_t ParamStore::entry_count() const {
  std::size_t n = 0;
  for (const auto& [name, var] : items_) n += var.value().size();
  return n;
}

namespace {

Matrix uniform_init(int rows, int cols, int fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / fan_in);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
  }
  return m;
}

void check_model_config(const ModelConfig& c) {
  if (c.n_clips < 1) throw ConfigError("model: n_clips must be >= 1");
  if (c.feature_dim < 1 || c.sentence_dim < 1 || c.hidden_dim < 1) {
    throw ConfigError("model: dimensions must be positive");
  }
  if (c.heads < 1 || c.hidden_dim % c.heads != 0) {
    throw ConfigError("model: hidden_dim must be divisible by heads");
  }
  if (c.conv_layers < 0 || c.conv_kernel < 1) {
    throw ConfigError("model: bad conv stack shape");
  }
  if (c.mlp_depth < 0) throw ConfigError("model: mlp_depth must be >= 0");
}

}  // namespace

GroundingModel::GroundingModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config), cell_mask_(valid_mask(config.n_clips)) {
  check_model_config(config);
  Rng rng = Rng(seed).split(0xACEu);

  const int dv = config.feature_dim;
  const int ds = config.sentence_dim;
  const int dn = config.hidden_dim;

  for (int l = 0; l < config.conv_layers; ++l) {
    const int fan_in = config.conv_kernel * config.conv_kernel * dv;
    ConvLayer layer;
    layer.weight = params_.add("conv" + std::to_string(l) + ".weight",
                               uniform_init(fan_in, dv, fan_in, rng));
    layer.bias = params_.add("conv" + std::to_string(l) + ".bias",
                             uniform_init(1, dv, fan_in, rng));
    conv_.push_back(layer);
  }

  proj_v_r_ = params_.add("proj.v_r.weight", uniform_init(dv, dn, dv, rng));
  proj_v_r_bias_ = params_.add("proj.v_r.bias", uniform_init(1, dn, dv, rng));
  proj_v_c_ = params_.add("proj.v_c.weight", uniform_init(dv, dn, dv, rng));
  proj_v_c_bias_ = params_.add("proj.v_c.bias", uniform_init(1, dn, dv, rng));
  proj_q_r_ = params_.add("proj.q_r.weight", uniform_init(ds, dn, ds, rng));
  proj_q_r_bias_ = params_.add("proj.q_r.bias", uniform_init(1, dn, ds, rng));
  proj_q_c_ = params_.add("proj.q_c.weight", uniform_init(ds, dn, ds, rng));
  proj_q_c_bias_ = params_.add("proj.q_c.bias", uniform_init(1, dn, ds, rng));

  attention_.heads = config.heads;
  attention_.dim = dn;
  attention_.head_dim = dn / config.heads;
  for (int h = 0; h < config.heads; ++h) {
    const std::string p = "cga.attn.head" + std::to_string(h);
    attention_.w_q.push_back(
        params_.add(p + ".w_q", uniform_init(dn, attention_.head_dim, dn, rng)));
    attention_.w_k.push_back(
        params_.add(p + ".w_k", uniform_init(dn, attention_.head_dim, dn, rng)));
    attention_.w_v.push_back(
        params_.add(p + ".w_v", uniform_init(dn, attention_.head_dim, dn, rng)));
  }
  attention_.w_o = params_.add("cga.attn.w_o", uniform_init(dn, dn, dn, rng));

  for (int l = 0; l < config.mlp_depth + 1; ++l) {
    const std::string p = "cga.mlp" + std::to_string(l);
    mlp_.emplace_back(params_.add(p + ".weight", uniform_init(dn, dn, dn, rng)),
                      params_.add(p + ".bias", uniform_init(1, dn, dn, rng)));
  }

  w_f_ = params_.add("ffn.w_f", uniform_init(dn, dn, dn, rng));
  b_f_ = params_.add("ffn.b_f", uniform_init(1, dn, dn, rng));
  w_ff_ = params_.add("ffn.w_ff", uniform_init(dn, dn, dn, rng));
  b_ff_ = params_.add("ffn.b_ff", uniform_init(1, dn, dn, rng));
}

ad::Var GroundingModel::encode_video(const Matrix& frames, double duration) {
  if (frames.cols() != config_.feature_dim) {
    throw DimensionError("encode_video: frame feature dim != configured d_v");
  }
  ClipSequence clips = sample_clips(frames, config_.n_clips, duration);
  ad::Var clip_var = ad::Var::leaf(std::move(clips.features));
  return build_feature_map(clip_var, config_.n_clips, config_.conv_kernel, conv_);
}

BranchFeatures GroundingModel::project_features(const ad::Var& visual_map,
                                                const Matrix& query_embedding,
                                                const Matrix& aux_embeddings) const {
  if (visual_map.rows() != config_.n_clips * config_.n_clips ||
      visual_map.cols() != config_.feature_dim) {
    throw DimensionError("project_features: visual map shape mismatch");
  }
  if (query_embedding.rows() != 1 || query_embedding.cols() != config_.sentence_dim) {
    throw DimensionError("project_features: query embedding must be 1 x d_s");
  }
  if (aux_embeddings.rows() > 0 && aux_embeddings.cols() != config_.sentence_dim) {
    throw DimensionError("project_features: aux embedding dim mismatch");
  }

  BranchFeatures out;
  out.aux_count = aux_embeddings.rows();
  out.v_r = ad::mask_rows(
      ad::add_rowvec(ad::matmul(visual_map, proj_v_r_), proj_v_r_bias_), cell_mask_);
  out.v_c = ad::mask_rows(
      ad::add_rowvec(ad::matmul(visual_map, proj_v_c_), proj_v_c_bias_), cell_mask_);

  ad::Var query = ad::Var::leaf(query_embedding);
  out.q_r = ad::add_rowvec(ad::matmul(query, proj_q_r_), proj_q_r_bias_);
  out.q_c = ad::add_rowvec(ad::matmul(query, proj_q_c_), proj_q_c_bias_);

  if (out.aux_count > 0) {
    // auxiliary sentences share the query projections
    ad::Var aux = ad::Var::leaf(aux_embeddings);
    out.q_r_aux = ad::add_rowvec(ad::matmul(aux, proj_q_r_), proj_q_r_bias_);
    out.q_c_aux = ad::add_rowvec(ad::matmul(aux, proj_q_c_), proj_q_c_bias_);
  }
  return out;
}

ad::Var GroundingModel::cga_relations(const ad::Var& q_aux, const ad::Var& q,
                                      AttentionTrace* trace) const {
  if (!q_aux.defined() || q_aux.rows() < 1) {
    throw ContractError("cga_relations: needs at least one auxiliary caption");
  }
  return multi_head_attention(q_aux, q, attention_, trace);
}

ad::Var GroundingModel::cga_project(const ad::Var& relations, const Matrix& iou_maps) const {
  if (iou_maps.rows() != relations.rows()) {
    throw DimensionError("cga_project: one IoU map per caption required");
  }
  if (iou_maps.cols() != config_.n_clips * config_.n_clips) {
    throw DimensionError("cga_project: IoU map grid mismatch");
  }
  // cell k receives sum_l iou_maps(l, k) * relations(l, :)
  ad::Var spread = ad::matmul(ad::Var::leaf(transposed(iou_maps)), relations);
  ad::Var h = spread;
  for (std::size_t l = 0; l + 1 < mlp_.size(); ++l) {
    h = ad::relu(ad::add_rowvec(ad::matmul(h, mlp_[l].first), mlp_[l].second));
  }
  h = ad::add_rowvec(ad::matmul(h, mlp_.back().first), mlp_.back().second);
  return ad::mask_rows(h, cell_mask_);
}

ad::Var GroundingModel::cga_fuse(const ad::Var& v_r, const ad::Var* prior) const {
  ad::Var pre = prior != nullptr ? ad::add(v_r, *prior) : v_r;
  ad::Var h = ad::relu(ad::add_rowvec(ad::matmul(pre, w_f_), b_f_));
  ad::Var out = ad::add_rowvec(ad::matmul(h, w_ff_), b_ff_);
  return ad::mask_rows(out, cell_mask_);
}

SampleForward GroundingModel::forward(const Matrix& frames, double duration,
                                      const Matrix& query_embedding,
                                      const std::vector<CaptionCandidate>& aux) {
  Matrix aux_embeddings(static_cast<int>(aux.size()), config_.sentence_dim);
  for (std::size_t k = 0; k < aux.size(); ++k) {
    const Matrix& e = aux[k].sentence_embedding;
    if (e.rows() != 1 || e.cols() != config_.sentence_dim) {
      throw DimensionError("forward: aux sentence embedding must be 1 x d_s");
    }
    std::copy(e.row_ptr(0), e.row_ptr(0) + e.cols(),
              aux_embeddings.row_ptr(static_cast<int>(k)));
  }

  SampleForward out;
  out.valid = cell_mask_;
  ad::Var f_v = encode_video(frames, duration);
  out.features = project_features(f_v, query_embedding, aux_embeddings);

  if (config_.cga_enabled && out.features.aux_count > 0) {
    Matrix iou_maps(out.features.aux_count, config_.n_clips * config_.n_clips);
    for (int k = 0; k < out.features.aux_count; ++k) {
      TemporalMap2D m = encode_interval_map(aux[k].interval, config_.n_clips, duration);
      for (int cell = 0; cell < iou_maps.cols(); ++cell) {
        iou_maps(k, cell) = m.grid(cell, 0);
      }
    }
    ad::Var relations = cga_relations(out.features.q_r_aux, out.features.q_r);
    ad::Var prior = cga_project(relations, iou_maps);
    out.v_r_prime = cga_fuse(out.features.v_r, &prior);
  } else {
    out.v_r_prime = cga_fuse(out.features.v_r, nullptr);
  }
  return out;
}

}  // namespace acnet
