// SPDX-License-Identifier: Apache-2.0
#include "acnet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "acnet/errors.hpp"
#include "acnet/io.hpp"
#include "acnet/optimizer.hpp"
#include "acnet/rng.hpp"

namespace acnet {

namespace {

using nlohmann::json;

constexpr std::uint64_t kShuffleStream = 0x5FFEu;

}  // namespace

ad::Var batch_loss(GroundingModel& model, std::span<const GroundingSample* const> batch,
                   const TrainConfig& config) {
  if (batch.empty()) throw ContractError("batch_loss: empty batch");
  const int n_clips = model.config().n_clips;

  ContrastiveBatch cbatch;
  ad::Var regression_sum;
  for (std::size_t bi = 0; bi < batch.size(); ++bi) {
    const GroundingSample& s = *batch[bi];
    SampleForward fwd = model.forward(*s.frames, s.duration, s.query, s.aux);

    Matrix labels = iou_label_map(s.gt, n_clips, s.duration, config.label_min_iou,
                                  config.label_max_iou)
                        .grid;
    ad::Var pred = score_regression(fwd.features.q_r, fwd.v_r_prime, fwd.valid);
    ad::Var sample_loss = regression_loss(pred, labels, fwd.valid);
    regression_sum = regression_sum.defined() ? ad::add(regression_sum, sample_loss)
                                              : sample_loss;

    const int gt_cell = argmax_iou_cell(s.gt, n_clips, s.duration);
    cbatch.gt_moments.push_back(
        ad::l2_normalize_rows(ad::row(fwd.features.v_c, gt_cell)));
    cbatch.gt_sentences.push_back(ad::l2_normalize_rows(fwd.features.q_c));
    for (int k = 0; k < fwd.features.aux_count; ++k) {
      cbatch.aux_sentences.push_back(
          ad::l2_normalize_rows(ad::row(fwd.features.q_c_aux, k)));
      cbatch.aux_owner.push_back(static_cast<int>(bi));
      if (config.contrastive == ContrastiveMode::kVanilla) {
        const int aux_cell = argmax_iou_cell(s.aux[k].interval, n_clips, s.duration);
        cbatch.aux_moments.push_back(
            ad::l2_normalize_rows(ad::row(fwd.features.v_c, aux_cell)));
      }
    }
  }

  ad::Var regression = ad::scale(regression_sum, 1.0 / static_cast<double>(batch.size()));
  ad::Var contrastive = config.contrastive == ContrastiveMode::kVanilla
                            ? vanilla_nce(cbatch, config.loss)
                            : accl(cbatch, config.loss);
  return total_loss(contrastive, regression, config.loss);
}

namespace {

std::string loss_curve_json(const std::vector<double>& losses) {
  json j;
  j["epoch_loss"] = losses;
  return j.dump(2) + "\n";
}

}  // namespace

TrainResult train_model(GroundingModel& model, const Dataset& data, const TrainConfig& config,
                        const std::optional<std::filesystem::path>& out_dir) {
  validate(config);
  if (data.samples.empty()) throw ContractError("train: dataset is empty");

  AdamW optimizer(model.params(), {.learning_rate = config.learning_rate,
                                   .weight_decay = config.weight_decay});
  Rng shuffle_rng = Rng(config.seed).split(kShuffleStream);

  TrainResult result;
  std::vector<int> order(data.samples.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t counted = 0;

    for (std::size_t at = 0; at < order.size(); at += config.batch_size) {
      std::vector<const GroundingSample*> batch;
      for (std::size_t k = at; k < std::min(order.size(), at + config.batch_size); ++k) {
        batch.push_back(&data.samples[order[k]]);
      }
      optimizer.zero_grad();
      double value = 0.0;
      try {
        ad::Var loss = batch_loss(model, batch, config);
        value = loss.value()(0, 0);
        ad::backward(loss);
      } catch (const NumericError& e) {
        result.diverged = true;
        result.divergence_note = std::string("epoch ") + std::to_string(epoch) + ": " + e.what();
        return result;  // last good checkpoint from the previous epoch stays on disk
      }
      optimizer.step();
      loss_sum += value * static_cast<double>(batch.size());
      counted += batch.size();
    }

    result.epoch_loss.push_back(loss_sum / static_cast<double>(counted));
    result.completed_epochs = epoch + 1;
    if (out_dir) {
      std::filesystem::create_directories(*out_dir);
      save_checkpoint(*out_dir / "checkpoint.acnc", model);
      atomic_write_bytes(*out_dir / "loss_curve.json", loss_curve_json(result.epoch_loss));
    }
  }
  return result;
}

std::vector<RankedPrediction> infer_sample(GroundingModel& model, const GroundingSample& sample,
                                           const TrainConfig& config, int top_k) {
  SampleForward fwd = model.forward(*sample.frames, sample.duration, sample.query, sample.aux);
  const Matrix s_r = score_regression(fwd.features.q_r, fwd.v_r_prime, fwd.valid).value();
  const Matrix s_c = score_contrastive(fwd.features.q_c, fwd.features.v_c, fwd.valid).value();
  const Matrix fused = fuse_scores(s_r, s_c, config.fusion_gamma, fwd.valid);
  std::vector<RankedPrediction> ranked =
      rank_cells(fused, model.config().n_clips, sample.duration);
  std::vector<RankedPrediction> kept = nms(ranked, config.nms_threshold);
  if (top_k > 0 && static_cast<int>(kept.size()) > top_k) kept.resize(top_k);
  return kept;
}

MetricTable evaluate_model(GroundingModel& model, const Dataset& data,
                           const TrainConfig& config, const std::vector<int>& ns,
                           const std::vector<double>& ms) {
  if (data.samples.empty()) throw ContractError("evaluate: dataset is empty");
  const int top = *std::max_element(ns.begin(), ns.end());
  std::vector<std::vector<RankedPrediction>> predictions;
  std::vector<MomentInterval> ground_truth;
  predictions.reserve(data.samples.size());
  for (const auto& s : data.samples) {
    predictions.push_back(infer_sample(model, s, config, top));
    ground_truth.push_back(s.gt);
  }
  return compute_metrics(predictions, ground_truth, ns, ms);
}

// ---- gradcheck ---------------------------------------------------------------

GradcheckSummary run_gradcheck(const TrainConfig& config, double eps) {
  validate(config);
  const ModelConfig& mc = config.model;
  GroundingModel model(mc, config.seed);

  // deterministic in-memory batch: two latent events per sample, two
  // auxiliary captions, generic values everywhere
  Rng rng = Rng(config.seed).split(0x6DCu);
  const double duration = 32.0;
  const int frames = 2 * mc.n_clips;
  std::vector<GroundingSample> samples(config.batch_size);
  for (int i = 0; i < config.batch_size; ++i) {
    GroundingSample& s = samples[i];
    s.id = "gradcheck#" + std::to_string(i);
    s.duration = duration;
    auto frame_features = std::make_shared<Matrix>(frames, mc.feature_dim);
    for (int f = 0; f < frames; ++f) {
      for (int d = 0; d < mc.feature_dim; ++d) {
        (*frame_features)(f, d) = 0.5 * rng.normal();
      }
    }
    s.frames = frame_features;
    s.query = Matrix(1, mc.sentence_dim);
    for (int d = 0; d < mc.sentence_dim; ++d) s.query(0, d) = 0.5 * rng.normal();
    const double a = rng.uniform(0.0, duration * 0.4);
    s.gt = {a, a + rng.uniform(duration * 0.2, duration * 0.5)};
    for (int k = 0; k < 2; ++k) {
      CaptionCandidate cand;
      const double b = rng.uniform(0.0, duration * 0.6);
      cand.interval = {b, b + rng.uniform(duration * 0.1, duration * 0.35)};
      cand.sentence_conf = rng.uniform(0.7, 1.0);
      cand.proposal_conf = rng.uniform(0.7, 1.0);
      cand.sentence_embedding = Matrix(1, mc.sentence_dim);
      for (int d = 0; d < mc.sentence_dim; ++d) {
        cand.sentence_embedding(0, d) = 0.5 * rng.normal();
      }
      s.aux.push_back(std::move(cand));
    }
  }

  std::vector<const GroundingSample*> batch;
  for (const auto& s : samples) batch.push_back(&s);

  const auto t0 = std::chrono::steady_clock::now();
  GradcheckSummary summary;
  summary.parameter_entries = model.params().entry_count();
  summary.report = ad::finite_diff_check(
      [&]() {
        return batch_loss(model, std::span<const GroundingSample* const>(batch), config);
      },
      model.params().items(), eps);
  summary.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return summary;
}

// ---- ablation -------------------------------------------------------------------

AblateGrid load_ablate_grid(const std::filesystem::path& path) {
  const json j = json::parse(read_bytes(path), nullptr, false);
  if (j.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");

  AblateGrid grid;
  if (j.contains("train")) grid.base = parse_train_config(j.at("train").dump());
  if (j.contains("seeds")) grid.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (grid.seeds.empty()) grid.seeds = {grid.base.seed};
  if (j.contains("ns")) grid.ns = j.at("ns").get<std::vector<int>>();
  if (j.contains("ms")) grid.ms = j.at("ms").get<std::vector<double>>();

  if (!j.contains("variants") || !j.at("variants").is_array() || j.at("variants").empty()) {
    throw ConfigError(path.string() + ": grid needs a non-empty variants array");
  }
  for (const auto& v : j.at("variants")) {
    AblateVariantSpec spec;
    spec.name = v.at("name").get<std::string>();
    if (v.contains("cga")) spec.cga = v.at("cga").get<bool>();
    if (v.contains("contrastive")) {
      spec.contrastive = v.at("contrastive").get<std::string>() == "vanilla"
                             ? ContrastiveMode::kVanilla
                             : ContrastiveMode::kAccl;
    }
    if (v.contains("selection")) {
      spec.selection = v.at("selection").get<std::string>() == "top_confidence"
                           ? SelectionMode::kTopConfidence
                           : SelectionMode::kNacs;
    }
    grid.variants.push_back(std::move(spec));
  }
  return grid;
}

std::string AblateReport::to_text() const {
  std::ostringstream os;
  os << "variant           ";
  if (!rows.empty()) {
    for (const auto& cell : rows.front().cells) {
      char head[32];
      std::snprintf(head, sizeof(head), "R@%d,IoU%.2f  ", cell.n, cell.m);
      os << head;
    }
  }
  os << "\n";
  for (const auto& row : rows) {
    char name[32];
    std::snprintf(name, sizeof(name), "%-18s", row.spec.name.c_str());
    os << name;
    for (const auto& cell : row.cells) {
      char val[32];
      std::snprintf(val, sizeof(val), "%10.4f  ", cell.mean);
      os << val;
    }
    os << "\n";
  }
  return os.str();
}

std::string AblateReport::to_json() const {
  json j = json::array();
  for (const auto& row : rows) {
    json cells = json::array();
    for (const auto& cell : row.cells) {
      cells.push_back({{"n", cell.n},
                       {"m", cell.m},
                       {"per_seed", cell.per_seed},
                       {"mean", cell.mean}});
    }
    j.push_back({{"name", row.spec.name},
                 {"cga", row.spec.cga},
                 {"contrastive",
                  row.spec.contrastive == ContrastiveMode::kVanilla ? "vanilla" : "accl"},
                 {"selection", row.spec.selection == SelectionMode::kTopConfidence
                                   ? "top_confidence"
                                   : "nacs"},
                 {"metrics", std::move(cells)}});
  }
  return j.dump(2) + "\n";
}

AblateReport run_ablation(const std::filesystem::path& train_manifest,
                          const std::filesystem::path& eval_manifest,
                          const AblateGrid& grid) {
  AblateReport report;
  for (const auto& spec : grid.variants) {
    TrainConfig config = grid.base;
    config.model.cga_enabled = spec.cga;
    config.contrastive = spec.contrastive;
    config.selection.mode = spec.selection;

    // selection affects which captions each sample carries
    Dataset train_data = assemble_dataset(train_manifest, config.selection);
    Dataset eval_data = assemble_dataset(eval_manifest, config.selection);

    AblateRow row;
    row.spec = spec;
    for (int n : grid.ns) {
      for (double m : grid.ms) {
        row.cells.push_back({n, m, {}, 0.0});
      }
    }
    for (std::uint64_t seed : grid.seeds) {
      config.seed = seed;
      GroundingModel model(config.model, seed);
      train_model(model, train_data, config, std::nullopt);
      MetricTable metrics = evaluate_model(model, eval_data, config, grid.ns, grid.ms);
      std::size_t ci = 0;
      for (int n : grid.ns) {
        for (double m : grid.ms) {
          row.cells[ci++].per_seed.push_back(metrics.at(n, m));
        }
      }
    }
    for (auto& cell : row.cells) {
      cell.mean = std::accumulate(cell.per_seed.begin(), cell.per_seed.end(), 0.0) /
                  static_cast<double>(cell.per_seed.size());
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace acnet
