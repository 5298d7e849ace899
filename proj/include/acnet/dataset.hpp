// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "acnet/config.hpp"
#include "acnet/matrix.hpp"
#include "acnet/nacs.hpp"
#include "acnet/temporal_map.hpp"

namespace acnet {

struct VideoEntry {
  std::string id;
  double duration = 0.0;
  int n_frames = 0;
  std::string feature_file;  // relative to the manifest directory
};

struct AnnotationEntry {
  std::string id;  // defaults to "<video>#<index>" when absent
  std::string video;
  MomentInterval interval;
  std::string query_file;
};

struct CaptionEntry {
  std::string video;
  std::vector<CaptionCandidate> items;
};

struct DatasetManifest {
  int version = 1;
  std::vector<VideoEntry> videos;
  std::vector<AnnotationEntry> annotations;
  std::vector<CaptionEntry> captions;
};

/// Parse and validate a manifest. Schema violations raise ParseError
/// with a JSON-pointer-style location; dangling video references or
/// out-of-duration intervals raise IntegrityError.
DatasetManifest load_manifest(const std::filesystem::path& path);
/// Atomic save.
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// One (video, query) training/eval unit. `aux` holds the captions the
/// configured selection kept for the owning video.
struct GroundingSample {
  std::string id;
  std::string video_id;
  double duration = 0.0;
  std::shared_ptr<const Matrix> frames;  // t x d_v
  Matrix query;                          // 1 x d_s
  MomentInterval gt;
  std::vector<CaptionCandidate> aux;
};

struct Dataset {
  std::vector<GroundingSample> samples;
  int feature_dim = 0;
  int sentence_dim = 0;
};

/// Load feature files and run caption selection per video. The
/// suppression region starts from all ground-truth intervals of the
/// video, as many annotations as it has.
Dataset assemble_dataset(const std::filesystem::path& manifest_path,
                         const SelectionConfig& selection);

/// Synthetic sparse-annotation generator configuration.
struct SynthConfig {
  int n_videos = 16;
  int events_per_video = 4;
  double annotated_fraction = 0.5;  // remaining events become captions
  int embedding_dim = 16;
  double boundary_jitter = 2.0;  // seconds, on caption intervals
  double noise_scale = 0.05;
  std::uint64_t seed = 1;
  double video_duration = 64.0;
  int frames_per_video = 128;
  double min_event_frac = 0.6;  // of the per-event slot
  double max_event_frac = 0.95;
};

SynthConfig load_synth_config(const std::filesystem::path& path);
std::string to_json(const SynthConfig& config);

/// Generate a dataset under out_dir: feature files plus manifest.json.
/// Videos hold `events_per_video` latent events on disjoint spans; the
/// annotated fraction become ground-truth annotations, the rest become
/// caption candidates with jittered boundaries and confidences that
/// shrink with the jitter. Deterministic in the seed, byte for byte.
DatasetManifest synth_generate(const SynthConfig& config,
                               const std::filesystem::path& out_dir);

}  // namespace acnet
