// SPDX-License-Identifier: Apache-2.0
#include "acnet/config.hpp"

#include <json.hpp>

#include "acnet/errors.hpp"
#include "acnet/io.hpp"

namespace acnet {

namespace {

using nlohmann::json;

void read_model(const json& j, ModelConfig& c) {
  if (j.contains("n_clips")) c.n_clips = j.at("n_clips").get<int>();
  if (j.contains("feature_dim")) c.feature_dim = j.at("feature_dim").get<int>();
  if (j.contains("sentence_dim")) c.sentence_dim = j.at("sentence_dim").get<int>();
  if (j.contains("hidden_dim")) c.hidden_dim = j.at("hidden_dim").get<int>();
  if (j.contains("heads")) c.heads = j.at("heads").get<int>();
  if (j.contains("conv_layers")) c.conv_layers = j.at("conv_layers").get<int>();
  if (j.contains("conv_kernel")) c.conv_kernel = j.at("conv_kernel").get<int>();
  if (j.contains("mlp_depth")) c.mlp_depth = j.at("mlp_depth").get<int>();
  if (j.contains("cga_enabled")) c.cga_enabled = j.at("cga_enabled").get<bool>();
}

void read_selection(const json& j, SelectionConfig& c) {
  if (j.contains("max_captions")) c.max_captions = j.at("max_captions").get<int>();
  if (j.contains("theta")) c.theta = j.at("theta").get<double>();
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "nacs") {
      c.mode = SelectionMode::kNacs;
    } else if (mode == "top_confidence") {
      c.mode = SelectionMode::kTopConfidence;
    } else {
      throw ConfigError("selection.mode must be 'nacs' or 'top_confidence'");
    }
  }
}

void read_loss(const json& j, LossWeights& w) {
  if (j.contains("lambda_v")) w.lambda_v = j.at("lambda_v").get<double>();
  if (j.contains("lambda_s")) w.lambda_s = j.at("lambda_s").get<double>();
  if (j.contains("tau_v")) w.tau_v = j.at("tau_v").get<double>();
  if (j.contains("tau_s")) w.tau_s = j.at("tau_s").get<double>();
  if (j.contains("lambda_c")) w.lambda_c = j.at("lambda_c").get<double>();
  if (j.contains("lambda_r")) w.lambda_r = j.at("lambda_r").get<double>();
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (c.weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (c.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (c.nms_threshold <= 0.0 || c.nms_threshold >= 1.0) {
    throw ConfigError("nms_threshold must lie in (0, 1)");
  }
  if (c.fusion_gamma <= 0.0) throw ConfigError("fusion_gamma must be positive");
  if (c.label_min_iou >= c.label_max_iou) {
    throw ConfigError("label_min_iou must be below label_max_iou");
  }
  if (c.loss.tau_v <= 0.0 || c.loss.tau_s <= 0.0) {
    throw ConfigError("temperatures must be positive");
  }
  if (c.loss.lambda_v < 0.0 || c.loss.lambda_s < 0.0 || c.loss.lambda_c < 0.0 ||
      c.loss.lambda_r < 0.0) {
    throw ConfigError("loss weights must be >= 0");
  }
  if (c.selection.max_captions < 0) throw ConfigError("max_captions must be >= 0");
  if (c.selection.theta <= 0.0) throw ConfigError("theta must be positive");
}

TrainConfig toy_train_config() {
  TrainConfig c;
  c.model.n_clips = 8;
  c.model.feature_dim = 8;
  c.model.sentence_dim = 8;
  c.model.hidden_dim = 16;
  c.model.heads = 2;
  c.model.conv_layers = 1;
  c.model.conv_kernel = 2;
  c.model.mlp_depth = 1;
  c.batch_size = 2;
  c.epochs = 50;
  return c;
}

TrainConfig load_train_config(const std::string& path_or_preset) {
  if (path_or_preset == "toy") return toy_train_config();
  if (path_or_preset == "desk") return TrainConfig{};
  return parse_train_config(read_bytes(path_or_preset));
}

TrainConfig parse_train_config(const std::string& json_text) {
  const json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("train config: not valid JSON");
  TrainConfig c;
  if (j.contains("model")) read_model(j.at("model"), c.model);
  if (j.contains("selection")) read_selection(j.at("selection"), c.selection);
  if (j.contains("loss")) read_loss(j.at("loss"), c.loss);
  if (j.contains("contrastive")) {
    const std::string mode = j.at("contrastive").get<std::string>();
    if (mode == "accl") {
      c.contrastive = ContrastiveMode::kAccl;
    } else if (mode == "vanilla") {
      c.contrastive = ContrastiveMode::kVanilla;
    } else {
      throw ConfigError("contrastive must be 'accl' or 'vanilla'");
    }
  }
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("nms_threshold")) c.nms_threshold = j.at("nms_threshold").get<double>();
  if (j.contains("fusion_gamma")) c.fusion_gamma = j.at("fusion_gamma").get<double>();
  if (j.contains("label_min_iou")) c.label_min_iou = j.at("label_min_iou").get<double>();
  if (j.contains("label_max_iou")) c.label_max_iou = j.at("label_max_iou").get<double>();
  validate(c);
  return c;
}

std::string to_json(const TrainConfig& c) {
  json j;
  j["model"] = {{"n_clips", c.model.n_clips},
                {"feature_dim", c.model.feature_dim},
                {"sentence_dim", c.model.sentence_dim},
                {"hidden_dim", c.model.hidden_dim},
                {"heads", c.model.heads},
                {"conv_layers", c.model.conv_layers},
                {"conv_kernel", c.model.conv_kernel},
                {"mlp_depth", c.model.mlp_depth},
                {"cga_enabled", c.model.cga_enabled}};
  j["selection"] = {{"max_captions", c.selection.max_captions},
                    {"theta", c.selection.theta},
                    {"mode", c.selection.mode == SelectionMode::kNacs ? "nacs"
                                                                      : "top_confidence"}};
  j["loss"] = {{"lambda_v", c.loss.lambda_v}, {"lambda_s", c.loss.lambda_s},
               {"tau_v", c.loss.tau_v},       {"tau_s", c.loss.tau_s},
               {"lambda_c", c.loss.lambda_c}, {"lambda_r", c.loss.lambda_r}};
  j["contrastive"] = c.contrastive == ContrastiveMode::kAccl ? "accl" : "vanilla";
  j["learning_rate"] = c.learning_rate;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["nms_threshold"] = c.nms_threshold;
  j["fusion_gamma"] = c.fusion_gamma;
  j["label_min_iou"] = c.label_min_iou;
  j["label_max_iou"] = c.label_max_iou;
  return j.dump(2) + "\n";
}

}  // namespace acnet
