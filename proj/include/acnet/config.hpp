// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace acnet {

/// Architecture hyperparameters. Defaults are desk-scale; the full-size
/// settings (64/128 clips, 3-4 conv layers) are accepted through config
/// files but are slow without a GPU.
struct ModelConfig {
  int n_clips = 16;       // N_v
  int feature_dim = 16;   // d_v, video feature dimension
  int sentence_dim = 16;  // d_s, sentence embedding dimension
  int hidden_dim = 32;    // d_n, joint space dimension
  int heads = 4;          // attention heads m (hidden_dim % heads == 0)
  int conv_layers = 2;    // L
  int conv_kernel = 2;    // K
  int mlp_depth = 1;      // hidden layers in the caption projection MLP
  bool cga_enabled = true;
};

enum class ContrastiveMode {
  kAccl,     // asymmetric: aux sentences only as extra v->s negatives
  kVanilla,  // symmetric InfoNCE, aux pairs treated like ground truth
};

enum class SelectionMode {
  kNacs,
  kTopConfidence,
};

struct LossWeights {
  double lambda_v = 1.0;
  double lambda_s = 1.0;
  double tau_v = 0.1;
  double tau_s = 0.1;
  double lambda_c = 0.05;
  double lambda_r = 1.0;
};

struct SelectionConfig {
  int max_captions = 5;  // l_c
  double theta = 0.5;
  SelectionMode mode = SelectionMode::kNacs;
};

struct TrainConfig {
  ModelConfig model;
  SelectionConfig selection;
  LossWeights loss;
  ContrastiveMode contrastive = ContrastiveMode::kAccl;
  double learning_rate = 8e-4;
  double weight_decay = 0.01;
  int batch_size = 8;
  int epochs = 100;
  std::uint64_t seed = 1;
  double nms_threshold = 0.5;
  double fusion_gamma = 1.0;  // exponent on the rescaled contrastive score
  double label_min_iou = 0.5;
  double label_max_iou = 1.0;
};

/// Throws ConfigError on out-of-range values.
void validate(const TrainConfig& config);

/// Parse from a JSON file. Missing keys keep their defaults. The names
/// "toy" and "desk" resolve to built-in presets.
TrainConfig load_train_config(const std::string& path_or_preset);
/// Parse from JSON text (same schema as the file form).
TrainConfig parse_train_config(const std::string& json_text);
TrainConfig toy_train_config();

std::string to_json(const TrainConfig& config);

}  // namespace acnet
