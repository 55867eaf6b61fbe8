// Copyright 2026 The DySeqDPP Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Video records and the on-disk dataset format.
//
// A dataset is a directory holding `manifest.json`:
//
//   {"format": "dyseqdpp-dataset", "schema_version": 1,
//    "videos": [{"id": "...", "file": "videos/<id>.json"}, ...]}
//
// and one JSON document per video:
//
//   {"schema_version": 1, "id": "...", "num_shots": n, "feature_dim": d,
//    "shot_duration_seconds": 5.0,
//    "features": {"dtype": "float32-le", "layout": "shot-major",
//                 "shape": [n, d], "data": "<base64>"},
//    "user_summaries": [[shot, ...], ...],
//    "oracle_summary": [shot, ...],                  (optional)
//    "concepts": {"dim": C, "bits": ["0101...", ...]}, (optional, one per shot)
//    "scene_boundaries": [[start, end], ...]}         (optional, half-open)
//
// Features are stored as little-endian IEEE-754 binary32, shot by shot, so
// feature values must be representable as float to round-trip exactly.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dyseqdpp/codec.hpp"
#include "dyseqdpp/errors.hpp"
#include "dyseqdpp/metrics.hpp"
#include "dyseqdpp/seq_model.hpp"

namespace dyseqdpp {

inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr double kDefaultShotDurationSeconds = 5.0;

struct VideoRecord {
  std::string id;
  Eigen::MatrixXd features;  // feature_dim x num_shots
  std::vector<std::vector<std::size_t>> user_summaries;
  std::optional<std::vector<std::size_t>> oracle_summary;
  std::optional<std::vector<ConceptVector>> concepts;
  std::optional<std::vector<Segment>> scene_boundaries;
  double shot_duration_seconds = kDefaultShotDurationSeconds;

  std::size_t num_shots() const { return static_cast<std::size_t>(features.cols()); }
  int feature_dim() const { return static_cast<int>(features.rows()); }

  // Oracle summary; falls back to the first user summary.
  const std::vector<std::size_t>& oracle() const {
    if (oracle_summary) return *oracle_summary;
    if (user_summaries.empty()) throw MissingAnnotation("video " + id + " has no oracle or user summary");
    return user_summaries.front();
  }

  void validate() const {
    const std::size_t n = num_shots();
    if (!features.allFinite()) throw InvalidInput("video " + id + ": non-finite feature values");
    if (!(shot_duration_seconds > 0.0)) throw InvalidInput("video " + id + ": shot duration must be positive");
    auto check_summary = [&](const std::vector<std::size_t>& s, const char* what) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] >= n) throw InvalidInput("video " + id + ": " + what + " index " + std::to_string(s[i]) + " out of range");
        if (i > 0 && s[i] <= s[i - 1]) throw InvalidInput("video " + id + ": " + what + " must be strictly increasing");
      }
    };
    for (const auto& s : user_summaries) check_summary(s, "user summary");
    if (oracle_summary) check_summary(*oracle_summary, "oracle summary");
    if (concepts) {
      if (concepts->size() != n) throw InvalidInput("video " + id + ": concept list length differs from shot count");
      for (const auto& c : *concepts) {
        if (c.size() != concepts->front().size()) throw InvalidInput("video " + id + ": inconsistent concept dimension");
        for (auto b : c)
          if (b > 1) throw InvalidInput("video " + id + ": concept entries must be 0 or 1");
      }
    }
    if (scene_boundaries) validate_scenes(*scene_boundaries, n);
  }

  friend bool operator==(const VideoRecord& a, const VideoRecord& b) {
    return a.id == b.id && a.features.rows() == b.features.rows() && a.features.cols() == b.features.cols() &&
           a.features == b.features && a.user_summaries == b.user_summaries && a.oracle_summary == b.oracle_summary &&
           a.concepts == b.concepts && a.scene_boundaries == b.scene_boundaries &&
           a.shot_duration_seconds == b.shot_duration_seconds;
  }
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + p.string());
  out << text;
}

inline ojson parse_document(const std::string& text, const std::string& where) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(where + ": malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

inline const ojson& require(const ojson& j, const char* field, const std::string& where) {
  if (!j.is_object() || !j.contains(field)) throw ParseError(where + ": missing required field '" + field + "'");
  return j.at(field);
}

template <typename T>
T field_as(const ojson& j, const char* field, const std::string& where) {
  const ojson& v = require(j, field, where);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": field '" + field + "' has the wrong type: " + e.what());
  }
}

inline void check_schema(const ojson& j, const std::string& where) {
  const int v = field_as<int>(j, "schema_version", where);
  if (v != kDatasetSchemaVersion)
    throw VersionError(where + ": schema_version " + std::to_string(v) + " is not supported (expected " +
                       std::to_string(kDatasetSchemaVersion) + ")");
}

inline std::string bits_to_string(const ConceptVector& c) {
  std::string s(c.size(), '0');
  for (std::size_t i = 0; i < c.size(); ++i) s[i] = c[i] ? '1' : '0';
  return s;
}

}  // namespace detail

inline std::string video_to_json(const VideoRecord& v) {
  detail::ojson j;
  j["schema_version"] = kDatasetSchemaVersion;
  j["id"] = v.id;
  j["num_shots"] = v.num_shots();
  j["feature_dim"] = v.feature_dim();
  j["shot_duration_seconds"] = v.shot_duration_seconds;
  std::vector<float> packed;
  packed.reserve(static_cast<std::size_t>(v.features.size()));
  for (Eigen::Index c = 0; c < v.features.cols(); ++c)
    for (Eigen::Index r = 0; r < v.features.rows(); ++r) packed.push_back(static_cast<float>(v.features(r, c)));
  detail::ojson f;
  f["dtype"] = "float32-le";
  f["layout"] = "shot-major";
  f["shape"] = {v.num_shots(), v.feature_dim()};
  f["data"] = codec::encode_f32(packed.data(), packed.size());
  j["features"] = f;
  j["user_summaries"] = v.user_summaries;
  if (v.oracle_summary) j["oracle_summary"] = *v.oracle_summary;
  if (v.concepts) {
    detail::ojson c;
    c["dim"] = v.concepts->empty() ? 0 : v.concepts->front().size();
    std::vector<std::string> bits;
    for (const auto& cv : *v.concepts) bits.push_back(detail::bits_to_string(cv));
    c["bits"] = bits;
    j["concepts"] = c;
  }
  if (v.scene_boundaries) {
    detail::ojson scenes = detail::ojson::array();
    for (const auto& s : *v.scene_boundaries) scenes.push_back({s.start, s.end()});
    j["scene_boundaries"] = scenes;
  }
  return j.dump(1) + "\n";
}

inline VideoRecord video_from_json(const std::string& text, const std::string& where) {
  using detail::field_as;
  const detail::ojson j = detail::parse_document(text, where);
  detail::check_schema(j, where);
  VideoRecord v;
  v.id = field_as<std::string>(j, "id", where);
  const auto n = field_as<std::size_t>(j, "num_shots", where);
  const auto d = field_as<std::size_t>(j, "feature_dim", where);
  v.shot_duration_seconds = j.contains("shot_duration_seconds")
                                ? field_as<double>(j, "shot_duration_seconds", where)
                                : kDefaultShotDurationSeconds;
  const auto& f = detail::require(j, "features", where);
  const std::string fwhere = where + ": features";
  if (field_as<std::string>(f, "dtype", fwhere) != "float32-le") throw ParseError(fwhere + ": dtype must be float32-le");
  const auto shape = field_as<std::vector<std::size_t>>(f, "shape", fwhere);
  if (shape.size() != 2 || shape[0] != n || shape[1] != d) throw ParseError(fwhere + ": shape disagrees with num_shots/feature_dim");
  std::vector<float> packed;
  try {
    packed = codec::decode_f32(field_as<std::string>(f, "data", fwhere));
  } catch (const ParseError& e) {
    throw ParseError(fwhere + ": data: " + e.what());
  }
  if (packed.size() != n * d) throw ParseError(fwhere + ": data holds " + std::to_string(packed.size()) + " values, expected " + std::to_string(n * d));
  v.features.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t r = 0; r < d; ++r) v.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = packed[c * d + r];
  v.user_summaries = field_as<std::vector<std::vector<std::size_t>>>(j, "user_summaries", where);
  if (j.contains("oracle_summary")) v.oracle_summary = field_as<std::vector<std::size_t>>(j, "oracle_summary", where);
  if (j.contains("concepts")) {
    const auto& c = j.at("concepts");
    const std::string cwhere = where + ": concepts";
    const auto dim = field_as<std::size_t>(c, "dim", cwhere);
    std::vector<ConceptVector> cs;
    for (const auto& s : field_as<std::vector<std::string>>(c, "bits", cwhere)) {
      if (s.size() != dim) throw ParseError(cwhere + ": bit string length differs from dim");
      ConceptVector cv(dim);
      for (std::size_t i = 0; i < dim; ++i) {
        if (s[i] != '0' && s[i] != '1') throw ParseError(cwhere + ": bit strings may only contain 0 and 1");
        cv[i] = s[i] == '1';
      }
      cs.push_back(std::move(cv));
    }
    v.concepts = std::move(cs);
  }
  if (j.contains("scene_boundaries")) {
    std::vector<Segment> scenes;
    for (const auto& pr : field_as<std::vector<std::vector<std::size_t>>>(j, "scene_boundaries", where)) {
      if (pr.size() != 2 || pr[1] <= pr[0]) throw ParseError(where + ": scene_boundaries entries must be [start, end) with end > start");
      scenes.push_back({pr[0], pr[1] - pr[0]});
    }
    v.scene_boundaries = std::move(scenes);
  }
  try {
    v.validate();
  } catch (const InvalidInput& e) {
    throw ParseError(where + ": " + e.what());
  }
  return v;
}

inline std::filesystem::path manifest_path(const std::filesystem::path& p) {
  return std::filesystem::is_directory(p) ? p / "manifest.json" : p;
}

// Writes `records` under directory `dir` (created if needed). A non-null
// `provenance` is stored verbatim in the manifest.
inline void save_dataset(const std::vector<VideoRecord>& records, const std::filesystem::path& dir,
                         const nlohmann::ordered_json& provenance = nullptr) {
  std::filesystem::create_directories(dir / "videos");
  detail::ojson m;
  m["format"] = "dyseqdpp-dataset";
  m["schema_version"] = kDatasetSchemaVersion;
  m["videos"] = detail::ojson::array();
  for (const auto& v : records) {
    v.validate();
    const std::string rel = "videos/" + v.id + ".json";
    detail::write_text(dir / rel, video_to_json(v));
    m["videos"].push_back({{"id", v.id}, {"file", rel}});
  }
  if (!provenance.is_null()) m["provenance"] = provenance;
  detail::write_text(dir / "manifest.json", m.dump(2) + "\n");
}

// Loads a dataset from its directory or its manifest file. An empty manifest
// file yields an empty dataset.
inline std::vector<VideoRecord> load_dataset(const std::filesystem::path& path) {
  const std::filesystem::path manifest = manifest_path(path);
  if (!std::filesystem::exists(manifest)) throw InvalidInput("dataset not found: " + manifest.string());
  const std::string text = detail::read_text(manifest);
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {};
  const std::string where = manifest.string();
  const detail::ojson m = detail::parse_document(text, where);
  detail::check_schema(m, where);
  const auto& videos = detail::require(m, "videos", where);
  if (!videos.is_array()) throw ParseError(where + ": field 'videos' must be an array");
  std::vector<VideoRecord> out;
  const std::filesystem::path base = manifest.parent_path();
  for (std::size_t i = 0; i < videos.size(); ++i) {
    const std::string vwhere = where + ": videos[" + std::to_string(i) + "]";
    const auto file = detail::field_as<std::string>(videos[i], "file", vwhere);
    const auto id = detail::field_as<std::string>(videos[i], "id", vwhere);
    VideoRecord v = video_from_json(detail::read_text(base / file), (base / file).string());
    if (v.id != id) throw ParseError(vwhere + ": id '" + id + "' does not match video document id '" + v.id + "'");
    out.push_back(std::move(v));
  }
  return out;
}

// Reads one video document.
inline VideoRecord load_video(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw InvalidInput("video document not found: " + path.string());
  return video_from_json(detail::read_text(path), path.string());
}

// Coordinatewise max over consecutive blocks of `shot_len` frames (columns);
// a trailing partial block is pooled as is.
inline Eigen::MatrixXd pool_frames_to_shots(const Eigen::MatrixXd& frames, std::size_t shot_len) {
  if (frames.cols() == 0) throw InvalidInput("no frames to pool");
  if (shot_len == 0) throw InvalidInput("shot length must be at least one frame");
  const auto f = static_cast<std::size_t>(frames.cols());
  const std::size_t shots = (f + shot_len - 1) / shot_len;
  Eigen::MatrixXd out(frames.rows(), static_cast<Eigen::Index>(shots));
  for (std::size_t s = 0; s < shots; ++s) {
    const std::size_t start = s * shot_len;
    const std::size_t len = std::min(shot_len, f - start);
    out.col(static_cast<Eigen::Index>(s)) =
        frames.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)).rowwise().maxCoeff();
  }
  return out;
}

}  // namespace dyseqdpp
