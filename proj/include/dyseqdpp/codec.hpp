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

// Base64 and little-endian packing for numeric arrays embedded in JSON.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "dyseqdpp/errors.hpp"

namespace dyseqdpp::codec {

inline std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (text.size() % 4 != 0) throw ParseError("base64 payload length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> q{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + static_cast<std::size_t>(k)];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        q[static_cast<std::size_t>(k)] = 0;
        ++pad;
      } else {
        q[static_cast<std::size_t>(k)] = value(c);
        if (q[static_cast<std::size_t>(k)] < 0 || pad > 0) throw ParseError("invalid base64 character");
      }
    }
    const std::uint32_t v = (q[0] << 18) | (q[1] << 12) | (q[2] << 6) | q[3];
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

template <typename T, typename Bits>
std::vector<std::uint8_t> pack_le(const T* values, std::size_t n) {
  static_assert(sizeof(T) == sizeof(Bits));
  std::vector<std::uint8_t> out(n * sizeof(T));
  for (std::size_t i = 0; i < n; ++i) {
    Bits b;
    std::memcpy(&b, values + i, sizeof(T));
    for (std::size_t k = 0; k < sizeof(T); ++k) out[i * sizeof(T) + k] = static_cast<std::uint8_t>(b >> (8 * k));
  }
  return out;
}

template <typename T, typename Bits>
std::vector<T> unpack_le(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % sizeof(T) != 0) throw ParseError("packed array has a truncated element");
  std::vector<T> out(bytes.size() / sizeof(T));
  for (std::size_t i = 0; i < out.size(); ++i) {
    Bits b = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) b |= static_cast<Bits>(bytes[i * sizeof(T) + k]) << (8 * k);
    std::memcpy(&out[i], &b, sizeof(T));
  }
  return out;
}

inline std::string encode_f64(const double* values, std::size_t n) {
  return base64_encode(pack_le<double, std::uint64_t>(values, n));
}
inline std::vector<double> decode_f64(std::string_view text) {
  return unpack_le<double, std::uint64_t>(base64_decode(text));
}
inline std::string encode_f32(const float* values, std::size_t n) {
  return base64_encode(pack_le<float, std::uint32_t>(values, n));
}
inline std::vector<float> decode_f32(std::string_view text) {
  return unpack_le<float, std::uint32_t>(base64_decode(text));
}

}  // namespace dyseqdpp::codec
