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

// PCM16 mono RIFF/WAVE reader and writer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

#include "asd/dsp.hpp"
#include "asd/error.hpp"
#include "asd/io.hpp"

namespace asd {

namespace detail {

inline std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void append_le(std::string& out, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace detail

/// Decodes PCM16 mono WAV bytes; samples scaled by 1/32768.
/// `expected_rate` <= 0 accepts any sample rate.
inline Waveform decode_wav(std::string_view bytes, double expected_rate = 0.0,
                           const std::string& name = "<memory>") {
  auto fail = [&](const std::string& why) { return DataError("WAV " + name + ": " + why); };
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw fail("not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string_view id(bytes.data() + pos, 4);
    const std::uint32_t size = detail::le32(p + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw fail("chunk '" + std::string(id) + "' truncated");
    if (id == "fmt ") {
      if (size < 16) throw fail("fmt chunk too small");
      std::uint16_t format = detail::le16(p + body);
      channels = detail::le16(p + body + 2);
      rate = detail::le32(p + body + 4);
      bits = detail::le16(p + body + 14);
      if (format == 0xFFFE && size >= 26) format = detail::le16(p + body + 24);  // extensible
      if (format != 1) throw fail("unsupported codec " + std::to_string(format) + " (PCM only)");
      if (bits != 16) throw fail("unsupported bit depth " + std::to_string(bits) + " (16 only)");
      if (channels != 1) throw fail(std::to_string(channels) + " channels (mono only)");
      if (rate == 0) throw fail("zero sample rate");
      if (expected_rate > 0.0 && rate != expected_rate)
        throw fail("sample rate " + std::to_string(rate) + " != expected " +
                   std::to_string(static_cast<long>(expected_rate)));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw fail("data chunk before fmt chunk");
      if (size % 2 != 0) throw fail("odd data chunk size");
      Waveform w;
      w.sample_rate = rate;
      w.samples.resize(size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(detail::le16(p + body + 2 * i));
        w.samples[i] = v / 32768.0;
      }
      return w;
    }
    pos = body + size + (size & 1);
  }
  throw fail(have_fmt ? "missing data chunk" : "missing fmt chunk");
}

inline Waveform read_wav(const std::filesystem::path& path, double expected_rate = 0.0) {
  return decode_wav(read_file(path), expected_rate, path.string());
}

/// PCM16 mono encoding; samples are clipped to [-1, 32767/32768].
inline std::string encode_wav(const Waveform& w) {
  require(w.sample_rate > 0.0 && w.sample_rate == std::floor(w.sample_rate),
          "encode_wav: sample rate must be a positive integer");
  const auto data_bytes = static_cast<std::uint32_t>(2 * w.samples.size());
  const auto rate = static_cast<std::uint32_t>(w.sample_rate);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  detail::append_le(out, 36 + data_bytes, 4);
  out += "WAVEfmt ";
  detail::append_le(out, 16, 4);
  detail::append_le(out, 1, 2);         // PCM
  detail::append_le(out, 1, 2);         // mono
  detail::append_le(out, rate, 4);
  detail::append_le(out, rate * 2, 4);  // byte rate
  detail::append_le(out, 2, 2);         // block align
  detail::append_le(out, 16, 2);
  out += "data";
  detail::append_le(out, data_bytes, 4);
  for (double s : w.samples) {
    require(std::isfinite(s), "encode_wav: non-finite sample");
    const double q = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    detail::append_le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)), 2);
  }
  return out;
}

inline void write_wav(const std::filesystem::path& path, const Waveform& w) {
  write_file_atomic(path, encode_wav(w));
}

}  // namespace asd
