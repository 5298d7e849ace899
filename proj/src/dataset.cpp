// SPDX-License-Identifier: Apache-2.0
#include "acnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "acnet/errors.hpp"
#include "acnet/io.hpp"
#include "acnet/rng.hpp"

namespace acnet {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, const std::string& where) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(where, "not valid JSON");
  return j;
}

const json& expect(const json& obj, const std::string& key, const std::string& loc) {
  if (!obj.is_object()) throw ParseError(loc, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(loc + "/" + key, "missing field");
  return *it;
}

double expect_number(const json& obj, const std::string& key, const std::string& loc) {
  const json& v = expect(obj, key, loc);
  if (!v.is_number()) throw ParseError(loc + "/" + key, "expected a number");
  return v.get<double>();
}

std::string expect_string(const json& obj, const std::string& key, const std::string& loc) {
  const json& v = expect(obj, key, loc);
  if (!v.is_string()) throw ParseError(loc + "/" + key, "expected a string");
  return v.get<std::string>();
}

MomentInterval parse_interval(const json& v, const std::string& loc) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ParseError(loc, "expected [start, end]");
  }
  MomentInterval t{v[0].get<double>(), v[1].get<double>()};
  if (t.start < 0.0 || t.start >= t.end) {
    throw ParseError(loc, "interval must satisfy 0 <= start < end");
  }
  return t;
}

json interval_json(const MomentInterval& t) { return json::array({t.start, t.end}); }

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const json root = parse_json(read_bytes(path), path.string());
  DatasetManifest m;
  if (!root.is_object()) throw ParseError("", "manifest must be an object");
  const json& version = expect(root, "version", "");
  if (!version.is_number_integer() || version.get<int>() != 1) {
    throw ParseError("/version", "unsupported schema version");
  }

  std::map<std::string, double> durations;
  const json& videos = expect(root, "videos", "");
  if (!videos.is_array()) throw ParseError("/videos", "expected an array");
  for (std::size_t i = 0; i < videos.size(); ++i) {
    const std::string loc = "/videos/" + std::to_string(i);
    VideoEntry v;
    v.id = expect_string(videos[i], "id", loc);
    v.duration = expect_number(videos[i], "duration", loc);
    v.n_frames = static_cast<int>(expect_number(videos[i], "n_frames", loc));
    v.feature_file = expect_string(videos[i], "features", loc);
    if (v.duration <= 0.0) throw ParseError(loc + "/duration", "must be positive");
    if (v.n_frames < 1) throw ParseError(loc + "/n_frames", "must be >= 1");
    if (durations.count(v.id) != 0) {
      throw IntegrityError("duplicate video id: " + v.id);
    }
    durations[v.id] = v.duration;
    m.videos.push_back(std::move(v));
  }

  std::map<std::string, int> per_video_counter;
  const json& annotations = expect(root, "annotations", "");
  if (!annotations.is_array()) throw ParseError("/annotations", "expected an array");
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const std::string loc = "/annotations/" + std::to_string(i);
    AnnotationEntry a;
    a.video = expect_string(annotations[i], "video", loc);
    a.interval = parse_interval(expect(annotations[i], "interval", loc), loc + "/interval");
    a.query_file = expect_string(annotations[i], "query", loc);
    if (annotations[i].contains("id")) {
      a.id = expect_string(annotations[i], "id", loc);
    } else {
      a.id = a.video + "#" + std::to_string(per_video_counter[a.video]);
    }
    per_video_counter[a.video] += 1;
    auto it = durations.find(a.video);
    if (it == durations.end()) {
      throw IntegrityError("annotation " + std::to_string(i) + " references unknown video " +
                           a.video);
    }
    if (a.interval.end > it->second + 1e-9) {
      throw IntegrityError("annotation " + std::to_string(i) + " interval exceeds duration of " +
                           a.video);
    }
    m.annotations.push_back(std::move(a));
  }

  if (root.contains("captions")) {
    const json& captions = root["captions"];
    if (!captions.is_array()) throw ParseError("/captions", "expected an array");
    for (std::size_t i = 0; i < captions.size(); ++i) {
      const std::string loc = "/captions/" + std::to_string(i);
      CaptionEntry c;
      c.video = expect_string(captions[i], "video", loc);
      auto it = durations.find(c.video);
      if (it == durations.end()) {
        throw IntegrityError("caption block " + std::to_string(i) +
                             " references unknown video " + c.video);
      }
      const json& items = expect(captions[i], "items", loc);
      if (!items.is_array()) throw ParseError(loc + "/items", "expected an array");
      for (std::size_t k = 0; k < items.size(); ++k) {
        const std::string iloc = loc + "/items/" + std::to_string(k);
        CaptionCandidate cand;
        cand.interval = parse_interval(expect(items[k], "interval", iloc), iloc + "/interval");
        cand.sentence_conf = expect_number(items[k], "sentence_conf", iloc);
        cand.proposal_conf = expect_number(items[k], "proposal_conf", iloc);
        if (!std::isfinite(cand.sentence_conf) || !std::isfinite(cand.proposal_conf)) {
          throw ParseError(iloc, "confidences must be finite");
        }
        if (cand.interval.end > it->second + 1e-9) {
          throw IntegrityError("caption item exceeds duration of " + c.video);
        }
        if (items[k].contains("embedding")) {
          const json& emb = items[k]["embedding"];
          if (!emb.is_array() || emb.empty()) {
            throw ParseError(iloc + "/embedding", "expected a non-empty array");
          }
          Matrix e(1, static_cast<int>(emb.size()));
          for (std::size_t d = 0; d < emb.size(); ++d) {
            if (!emb[d].is_number()) throw ParseError(iloc + "/embedding", "expected numbers");
            e(0, static_cast<int>(d)) = emb[d].get<double>();
          }
          cand.sentence_embedding = std::move(e);
        }
        c.items.push_back(std::move(cand));
      }
      m.captions.push_back(std::move(c));
    }
  }
  return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  json root;
  root["version"] = manifest.version;
  root["videos"] = json::array();
  for (const auto& v : manifest.videos) {
    root["videos"].push_back({{"id", v.id},
                              {"duration", v.duration},
                              {"n_frames", v.n_frames},
                              {"features", v.feature_file}});
  }
  root["annotations"] = json::array();
  for (const auto& a : manifest.annotations) {
    root["annotations"].push_back({{"id", a.id},
                                   {"video", a.video},
                                   {"interval", interval_json(a.interval)},
                                   {"query", a.query_file}});
  }
  root["captions"] = json::array();
  for (const auto& c : manifest.captions) {
    json items = json::array();
    for (const auto& cand : c.items) {
      json item = {{"interval", interval_json(cand.interval)},
                   {"sentence_conf", cand.sentence_conf},
                   {"proposal_conf", cand.proposal_conf}};
      if (!cand.sentence_embedding.empty()) {
        json emb = json::array();
        for (int d = 0; d < cand.sentence_embedding.cols(); ++d) {
          emb.push_back(cand.sentence_embedding(0, d));
        }
        item["embedding"] = emb;
      }
      items.push_back(std::move(item));
    }
    root["captions"].push_back({{"video", c.video}, {"items", std::move(items)}});
  }
  atomic_write_bytes(path, root.dump(2) + "\n");
}

Dataset assemble_dataset(const std::filesystem::path& manifest_path,
                         const SelectionConfig& selection) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const std::filesystem::path dir = manifest_path.parent_path();

  struct VideoData {
    const VideoEntry* entry = nullptr;
    std::shared_ptr<const Matrix> frames;
    std::vector<MomentInterval> gt_intervals;
    std::vector<CaptionCandidate> aux;
  };
  std::map<std::string, VideoData> videos;
  for (const auto& v : manifest.videos) {
    VideoData data;
    data.entry = &v;
    auto frames = std::make_shared<Matrix>(read_matrix_file(dir / v.feature_file));
    if (frames->rows() != v.n_frames) {
      throw IntegrityError("feature file row count disagrees with n_frames for " + v.id);
    }
    data.frames = std::move(frames);
    videos.emplace(v.id, std::move(data));
  }
  for (const auto& a : manifest.annotations) {
    videos.at(a.video).gt_intervals.push_back(a.interval);
  }

  // caption selection per video, suppression region seeded with all
  // ground-truth intervals
  for (const auto& c : manifest.captions) {
    VideoData& data = videos.at(c.video);
    for (const auto& cand : c.items) {
      if (cand.sentence_embedding.empty()) {
        throw IntegrityError("caption for " + c.video + " lacks an embedding");
      }
    }
    AuxiliarySet chosen;
    if (selection.mode == SelectionMode::kNacs) {
      chosen = nacs_select(c.items, selection.max_captions, selection.theta,
                           AnnotatedRegion(data.gt_intervals), data.entry->duration);
    } else {
      chosen = top_confidence_select(c.items, selection.max_captions, data.entry->duration);
    }
    data.aux = std::move(chosen.selected);
  }

  Dataset out;
  for (const auto& a : manifest.annotations) {
    const VideoData& data = videos.at(a.video);
    GroundingSample s;
    s.id = a.id;
    s.video_id = a.video;
    s.duration = data.entry->duration;
    s.frames = data.frames;
    s.query = read_matrix_file(dir / a.query_file);
    if (s.query.rows() != 1) throw IntegrityError("query embedding must be 1 x d: " + a.id);
    s.gt = a.interval;
    s.aux = data.aux;
    out.samples.push_back(std::move(s));
  }
  if (!out.samples.empty()) {
    out.feature_dim = out.samples.front().frames->cols();
    out.sentence_dim = out.samples.front().query.cols();
    for (const auto& s : out.samples) {
      if (s.frames->cols() != out.feature_dim || s.query.cols() != out.sentence_dim) {
        throw IntegrityError("inconsistent embedding dimensions across samples");
      }
      for (const auto& cand : s.aux) {
        if (cand.sentence_embedding.cols() != out.sentence_dim) {
          throw IntegrityError("caption embedding dim mismatch in video " + s.video_id);
        }
      }
    }
  }
  return out;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
  const json j = parse_json(read_bytes(path), path.string());
  SynthConfig c;
  auto get_num = [&](const char* key, double fallback) {
    return j.contains(key) ? j.at(key).get<double>() : fallback;
  };
  c.n_videos = static_cast<int>(get_num("n_videos", c.n_videos));
  c.events_per_video = static_cast<int>(get_num("events_per_video", c.events_per_video));
  c.annotated_fraction = get_num("annotated_fraction", c.annotated_fraction);
  c.embedding_dim = static_cast<int>(get_num("embedding_dim", c.embedding_dim));
  c.boundary_jitter = get_num("boundary_jitter", c.boundary_jitter);
  c.noise_scale = get_num("noise_scale", c.noise_scale);
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  c.video_duration = get_num("video_duration", c.video_duration);
  c.frames_per_video = static_cast<int>(get_num("frames_per_video", c.frames_per_video));
  c.min_event_frac = get_num("min_event_frac", c.min_event_frac);
  c.max_event_frac = get_num("max_event_frac", c.max_event_frac);
  return c;
}

std::string to_json(const SynthConfig& c) {
  json j;
  j["n_videos"] = c.n_videos;
  j["events_per_video"] = c.events_per_video;
  j["annotated_fraction"] = c.annotated_fraction;
  j["embedding_dim"] = c.embedding_dim;
  j["boundary_jitter"] = c.boundary_jitter;
  j["noise_scale"] = c.noise_scale;
  j["seed"] = c.seed;
  j["video_duration"] = c.video_duration;
  j["frames_per_video"] = c.frames_per_video;
  j["min_event_frac"] = c.min_event_frac;
  j["max_event_frac"] = c.max_event_frac;
  return j.dump(2) + "\n";
}

namespace {

void check_synth_config(const SynthConfig& c) {
  if (c.n_videos < 1) throw ConfigError("synth: n_videos must be >= 1");
  if (c.events_per_video < 1) throw ConfigError("synth: events_per_video must be >= 1");
  if (c.annotated_fraction <= 0.0 || c.annotated_fraction > 1.0) {
    throw ConfigError("synth: annotated_fraction must lie in (0, 1]");
  }
  if (c.embedding_dim < 1) throw ConfigError("synth: embedding_dim must be >= 1");
  if (c.boundary_jitter < 0.0) throw ConfigError("synth: boundary_jitter must be >= 0");
  if (c.noise_scale < 0.0) throw ConfigError("synth: noise_scale must be >= 0");
  if (c.video_duration <= 0.0) throw ConfigError("synth: video_duration must be positive");
  if (c.frames_per_video < 1) throw ConfigError("synth: frames_per_video must be >= 1");
  if (c.min_event_frac <= 0.0 || c.max_event_frac > 1.0 ||
      c.min_event_frac > c.max_event_frac) {
    throw ConfigError("synth: event fractions must satisfy 0 < min <= max <= 1");
  }
  // each event needs a usable slot
  const double slot = c.video_duration / c.events_per_video;
  if (slot * c.min_event_frac < 0.5) {
    throw ConfigError("synth: too many events for the video duration");
  }
}

std::string zero_pad(int v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*d", width, v);
  return buf;
}

}  // namespace

DatasetManifest synth_generate(const SynthConfig& config,
                               const std::filesystem::path& out_dir) {
  check_synth_config(config);
  std::filesystem::create_directories(out_dir / "features");
  std::filesystem::create_directories(out_dir / "queries");

  Rng rng = Rng(config.seed).split(0xDA7Au);
  DatasetManifest manifest;

  const int d = config.embedding_dim;
  const double duration = config.video_duration;
  const int events = config.events_per_video;
  const double slot = duration / events;
  const int annotated =
      std::max(1, std::min(events, static_cast<int>(std::lround(
                                        config.annotated_fraction * events))));

  int query_counter = 0;
  for (int v = 0; v < config.n_videos; ++v) {
    const std::string video_id = "v" + zero_pad(v, 4);

    // latent events on disjoint spans, one per slot
    std::vector<MomentInterval> spans(events);
    std::vector<Matrix> vectors(events);
    for (int e = 0; e < events; ++e) {
      const double len = slot * rng.uniform(config.min_event_frac, config.max_event_frac);
      const double start = slot * e + rng.uniform(0.0, slot - len);
      spans[e] = {start, start + len};
      Matrix vec(1, d);
      for (int k = 0; k < d; ++k) vec(0, k) = rng.normal();
      vectors[e] = std::move(vec);
    }

    // frame features: event vector on its span, background noise elsewhere
    Matrix frames(config.frames_per_video, d);
    for (int f = 0; f < config.frames_per_video; ++f) {
      const double t = (f + 0.5) * duration / config.frames_per_video;
      int owner = -1;
      for (int e = 0; e < events; ++e) {
        if (t >= spans[e].start && t < spans[e].end) {
          owner = e;
          break;
        }
      }
      double* out = frames.row_ptr(f);
      for (int k = 0; k < d; ++k) {
        out[k] = (owner >= 0 ? vectors[owner](0, k) : 0.0) +
                 config.noise_scale * rng.normal();
      }
    }
    const std::string feature_file = "features/" + video_id + ".acnm";
    write_matrix_file(out_dir / feature_file, frames);
    manifest.videos.push_back({video_id, duration, config.frames_per_video, feature_file});

    std::vector<int> order(events);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    CaptionEntry captions;
    captions.video = video_id;
    for (int pos = 0; pos < events; ++pos) {
      const int e = order[pos];
      if (pos < annotated) {
        Matrix query(1, d);
        for (int k = 0; k < d; ++k) {
          query(0, k) = vectors[e](0, k) + config.noise_scale * rng.normal();
        }
        const std::string query_file = "queries/q" + zero_pad(query_counter++, 5) + ".acnm";
        write_matrix_file(out_dir / query_file, query);
        AnnotationEntry a;
        a.id = video_id + "#" + std::to_string(pos);
        a.video = video_id;
        a.interval = spans[e];
        a.query_file = query_file;
        manifest.annotations.push_back(std::move(a));
      } else {
        CaptionCandidate cand;
        const double ds = rng.normal(0.0, config.boundary_jitter);
        const double de = rng.normal(0.0, config.boundary_jitter);
        double start = std::clamp(spans[e].start + ds, 0.0, duration - 0.25);
        double end = std::clamp(spans[e].end + de, start + 0.25, duration);
        cand.interval = {start, end};
        const double displacement =
            std::abs(start - spans[e].start) + std::abs(end - spans[e].end);
        cand.proposal_conf = std::exp(-displacement * displacement / duration);
        cand.sentence_conf = rng.uniform(0.85, 1.0);
        Matrix emb(1, d);
        for (int k = 0; k < d; ++k) {
          emb(0, k) = vectors[e](0, k) + config.noise_scale * rng.normal();
        }
        cand.sentence_embedding = std::move(emb);
        captions.items.push_back(std::move(cand));
      }
    }
    if (!captions.items.empty()) manifest.captions.push_back(std::move(captions));
  }

  save_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace acnet
