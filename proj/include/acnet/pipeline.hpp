// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acnet/config.hpp"
#include "acnet/dataset.hpp"
#include "acnet/losses.hpp"
#include "acnet/metrics.hpp"
#include "acnet/model.hpp"

namespace acnet {

struct TrainResult {
  std::vector<double> epoch_loss;  // mean total loss per epoch
  int completed_epochs = 0;
  bool diverged = false;
  std::string divergence_note;
};

/// Scalar training loss for one minibatch: mean per-sample regression
/// loss plus the batch-level contrastive loss, combined by the weights.
/// Samples are forwarded in order; contrastive embeddings gather at the
/// max-IoU ground-truth cell.
ad::Var batch_loss(GroundingModel& model, std::span<const GroundingSample* const> batch,
                   const TrainConfig& config);

/// Deterministic training loop (init, shuffling and batch order all
/// derive from config.seed). When out_dir is set, checkpoint.acnc and
/// loss_curve.json are rewritten atomically after every epoch, so a
/// divergence abort keeps the last good state on disk.
TrainResult train_model(GroundingModel& model, const Dataset& data, const TrainConfig& config,
                        const std::optional<std::filesystem::path>& out_dir);

/// Ranked, NMS-filtered predictions for one sample. top_k == 0 keeps all.
std::vector<RankedPrediction> infer_sample(GroundingModel& model, const GroundingSample& sample,
                                           const TrainConfig& config, int top_k = 0);

MetricTable evaluate_model(GroundingModel& model, const Dataset& data,
                           const TrainConfig& config, const std::vector<int>& ns,
                           const std::vector<double>& ms);

// ---- gradient checking ------------------------------------------------------

struct GradcheckSummary {
  ad::GradCheckReport report;
  std::size_t parameter_entries = 0;
  double seconds = 0.0;
};

/// Builds a deterministic synthetic minibatch for `config`, then runs
/// the central-difference oracle over every trainable parameter of the
/// full training loss.
GradcheckSummary run_gradcheck(const TrainConfig& config, double eps = 1e-5);

// ---- ablation -----------------------------------------------------------------

struct AblateVariantSpec {
  std::string name;
  bool cga = true;
  ContrastiveMode contrastive = ContrastiveMode::kAccl;
  SelectionMode selection = SelectionMode::kNacs;
};

struct AblateGrid {
  std::vector<AblateVariantSpec> variants;
  std::vector<std::uint64_t> seeds;
  TrainConfig base;
  std::vector<int> ns{1};
  std::vector<double> ms{0.5};
};

AblateGrid load_ablate_grid(const std::filesystem::path& path);

struct AblateCell {
  int n = 0;
  double m = 0.0;
  std::vector<double> per_seed;
  double mean = 0.0;
};

struct AblateRow {
  AblateVariantSpec spec;
  std::vector<AblateCell> cells;
};

struct AblateReport {
  std::vector<AblateRow> rows;
  std::string to_text() const;
  std::string to_json() const;
};

/// Train and evaluate every (variant, seed) pair. Data comes from two
/// manifests so the evaluation split stays held out.
AblateReport run_ablation(const std::filesystem::path& train_manifest,
                          const std::filesystem::path& eval_manifest, const AblateGrid& grid);

}  // namespace acnet
