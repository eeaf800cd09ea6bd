// Copyright 2026 The asdkit Authors
//
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

#pragma once

// FVEC feature-vector interchange format.
//
//   offset 0   5 bytes   "FVEC1"
//   offset 5   u32 LE    vector_count
//   offset 9   u32 LE    dim
//   offset 13  f32 LE    vector_count * dim values, vector after vector
//
// A sidecar JSON manifest (<file>.json) records the source recording, the
// extractor tag and the window/hop in seconds.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>

#include "asd/error.hpp"
#include "asd/featurize.hpp"
#include "asd/io.hpp"

namespace asd {

inline constexpr char kFvecMagic[5] = {'F', 'V', 'E', 'C', '1'};
inline constexpr std::size_t kFvecHeaderSize = 13;

struct FvecManifest {
  std::string source;
  std::string extractor_tag;
  double window_s = 1.0;
  double hop_s = 0.5;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

/// Serializes columns of `vectors` (dim x count) as FVEC bytes.
inline std::string encode_fvec(const Eigen::MatrixXd& vectors) {
  require(vectors.rows() <= UINT32_MAX && vectors.cols() <= UINT32_MAX, "encode_fvec: too large");
  std::string out(kFvecMagic, sizeof(kFvecMagic));
  detail::put_u32(out, static_cast<std::uint32_t>(vectors.cols()));
  detail::put_u32(out, static_cast<std::uint32_t>(vectors.rows()));
  out.reserve(out.size() + 4 * vectors.size());
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      const float f = static_cast<float>(vectors(r, c));
      require(std::isfinite(f), "encode_fvec: non-finite value");
      detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
  }
  return out;
}

inline Eigen::MatrixXd decode_fvec(std::string_view bytes) {
  if (bytes.size() < kFvecHeaderSize || std::memcmp(bytes.data(), kFvecMagic, 5) != 0)
    throw DataError("FVEC: bad magic");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t count = detail::get_u32(p + 5);
  const std::uint32_t dim = detail::get_u32(p + 9);
  const std::uint64_t expected = kFvecHeaderSize + 4ULL * count * dim;
  if (bytes.size() != expected)
    throw DataError("FVEC: payload size " + std::to_string(bytes.size()) + " != expected " +
                    std::to_string(expected));
  Eigen::MatrixXd m(dim, count);
  const unsigned char* q = p + kFvecHeaderSize;
  for (std::uint32_t c = 0; c < count; ++c) {
    for (std::uint32_t r = 0; r < dim; ++r, q += 4) {
      const float f = std::bit_cast<float>(detail::get_u32(q));
      if (!std::isfinite(f)) throw DataError("FVEC: non-finite value");
      m(r, c) = f;
    }
  }
  return m;
}

inline std::filesystem::path fvec_manifest_path(const std::filesystem::path& fvec) {
  auto p = fvec;
  p += ".json";
  return p;
}

inline void write_fvec(const std::filesystem::path& path, const FeatureSequence& seq,
                       const FvecManifest& manifest) {
  write_file_atomic(path, encode_fvec(seq.vectors));
  nlohmann::json j = {{"source", manifest.source},
                      {"extractor_tag", manifest.extractor_tag},
                      {"window_s", manifest.window_s},
                      {"hop_s", manifest.hop_s},
                      {"vector_count", seq.size()},
                      {"dim", seq.dim()}};
  write_file_atomic(fvec_manifest_path(path), j.dump(2) + "\n");
}

/// Loads an FVEC file; picks up extractor_tag and source from the sidecar
/// manifest when present.
inline FeatureSequence read_fvec(const std::filesystem::path& path) {
  FeatureSequence seq;
  seq.vectors = decode_fvec(read_file(path));
  if (seq.size() < 1) throw DataError("FVEC: no vectors in " + path.string());
  seq.source_id = path.string();
  const auto side = fvec_manifest_path(path);
  if (std::filesystem::exists(side)) {
    try {
      const auto j = nlohmann::json::parse(read_file(side));
      seq.extractor_tag = j.value("extractor_tag", "");
      seq.source_id = j.value("source", seq.source_id);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("FVEC manifest " + side.string() + ": " + e.what());
    }
  }
  return seq;
}

}  // namespace asd
