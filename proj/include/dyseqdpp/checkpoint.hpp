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

// Parameter checkpoints: one JSON document holding named matrices (with
// explicit row/column counts and base64 little-endian float64 payloads in
// column-major order), the length menu and a format version. Round trips are
// bit-exact.

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "dyseqdpp/codec.hpp"
#include "dyseqdpp/errors.hpp"
#include "dyseqdpp/kernel_net.hpp"

namespace dyseqdpp {

inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr const char* kCheckpointFormatName = "dyseqdpp-checkpoint";

namespace detail {

inline nlohmann::ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["dtype"] = "float64-le";
  j["order"] = "column-major";
  j["data"] = codec::encode_f64(m.data(), static_cast<std::size_t>(m.size()));
  return j;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::ordered_json& j, const std::string& name) {
  try {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    if (j.at("dtype").get<std::string>() != "float64-le") throw ParseError("matrix " + name + ": unsupported dtype");
    const std::vector<double> v = codec::decode_f64(j.at("data").get<std::string>());
    if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(v.size()) != rows * cols)
      throw ParseError("matrix " + name + ": payload size does not match dimensions");
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("matrix " + name + ": " + e.what());
  }
}

}  // namespace detail

inline std::string checkpoint_to_string(const PolicyParams& params,
                                        const nlohmann::ordered_json& provenance = nullptr) {
  nlohmann::ordered_json j;
  j["format"] = kCheckpointFormatName;
  j["format_version"] = kCheckpointFormatVersion;
  j["length_menu"] = params.menu.lengths();
  nlohmann::ordered_json mats;
  mats["V"] = detail::matrix_to_json(params.V);
  mats["U"] = detail::matrix_to_json(params.U);
  mats["W"] = detail::matrix_to_json(params.W);
  mats["length_weights"] = detail::matrix_to_json(params.length_weights);
  mats["length_bias"] = detail::matrix_to_json(params.length_bias);
  j["matrices"] = mats;
  if (!provenance.is_null()) j["provenance"] = provenance;
  return j.dump(2) + "\n";
}

inline PolicyParams checkpoint_from_string(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kCheckpointFormatName) throw ParseError("not a checkpoint document");
  if (!j.contains("format_version")) throw ParseError("checkpoint: missing field format_version");
  if (j["format_version"] != kCheckpointFormatVersion)
    throw VersionError("unsupported checkpoint format_version " + j["format_version"].dump());
  PolicyParams p;
  try {
    p.menu = LengthMenu(j.at("length_menu").get<std::vector<int>>());
    const auto& mats = j.at("matrices");
    p.V = detail::matrix_from_json(mats.at("V"), "V");
    p.U = detail::matrix_from_json(mats.at("U"), "U");
    p.W = detail::matrix_from_json(mats.at("W"), "W");
    p.length_weights = detail::matrix_from_json(mats.at("length_weights"), "length_weights");
    const Eigen::MatrixXd bias = detail::matrix_from_json(mats.at("length_bias"), "length_bias");
    if (bias.cols() != 1) throw ParseError("length_bias must be a column vector");
    p.length_bias = bias.col(0);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  p.validate();
  return p;
}

inline void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path,
                            const nlohmann::ordered_json& provenance = nullptr) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write checkpoint " + path.string());
  out << checkpoint_to_string(params, provenance);
}

inline PolicyParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace dyseqdpp
