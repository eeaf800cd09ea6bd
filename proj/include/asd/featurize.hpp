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

// Sliding-window featurization of Mel-spectrograms and feature standardization.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "asd/dsp.hpp"
#include "asd/error.hpp"

namespace asd {

struct PatchConfig {
  int window_frames = 5;
  int hop_frames = 3;
  // true: window flattened column-major into n_mels * window_frames values.
  // false: window averaged over time into n_mels values.
  bool flatten = true;
};

/// D x T' matrix; one column per window.
struct FeatureSequence {
  Eigen::MatrixXd vectors;
  std::string source_id;
  std::string extractor_tag;

  Eigen::Index dim() const { return vectors.rows(); }
  Eigen::Index size() const { return vectors.cols(); }
};

struct FeatureStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

inline constexpr double kStdFloor = 1e-8;

/// Window count once the tail is padded so the last window reaches column T-1.
inline Eigen::Index num_windows(Eigen::Index frames, Eigen::Index window, Eigen::Index hop) {
  require(window >= 1 && hop >= 1, "window and hop must be >= 1");
  require(frames >= window, "window larger than the spectrogram");
  return (frames - window + hop - 1) / hop + 1;
}

/// Column `c` of `m`, clamped to the last column (edge-replication padding).
inline auto padded_column(const Eigen::MatrixXd& m, Eigen::Index c) {
  return m.col(std::min(c, m.cols() - 1));
}

inline FeatureSequence sliding_patches(const MelSpectrogram& m, const PatchConfig& cfg) {
  require(cfg.window_frames >= 1 && cfg.hop_frames >= 1,
          "sliding_patches: window_frames and hop_frames must be >= 1");
  require(m.num_frames() >= 1, "sliding_patches: empty spectrogram");
  require(cfg.window_frames <= m.num_frames(),
          "sliding_patches: window larger than padded spectrogram");
  const Eigen::Index n = cfg.window_frames, h = cfg.hop_frames;
  const Eigen::Index rows = m.n_mels();
  const Eigen::Index count = num_windows(m.num_frames(), n, h);

  FeatureSequence out;
  out.extractor_tag = cfg.flatten ? "mel_patch" : "mel_patch_mean";
  out.vectors.resize(cfg.flatten ? rows * n : rows, count);
  for (Eigen::Index w = 0; w < count; ++w) {
    const Eigen::Index start = w * h;
    if (cfg.flatten) {
      for (Eigen::Index j = 0; j < n; ++j)
        out.vectors.col(w).segment(j * rows, rows) = padded_column(m.values, start + j);
    } else {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(rows);
      for (Eigen::Index j = 0; j < n; ++j) acc += padded_column(m.values, start + j);
      out.vectors.col(w) = acc / static_cast<double>(n);
    }
  }
  return out;
}

/// Inverse of column-major flattening: back to an n_mels x window_frames patch.
inline Eigen::MatrixXd unflatten_window(const Eigen::VectorXd& v, Eigen::Index n_mels) {
  require(n_mels > 0 && v.size() % n_mels == 0, "unflatten_window: size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), n_mels, v.size() / n_mels);
}

/// Slices a spectrogram into windows given in seconds. Every window that fits
/// entirely inside the recording is emitted, followed by exactly one tail window
/// (edge-replicated) one hop later; a window spanning the whole recording gives
/// one slice. For 10 s at 1 s / 0.5 s this yields 20 slices.
inline std::vector<MelSpectrogram> second_windows(const MelSpectrogram& m, double window_s,
                                                  double hop_s) {
  require(window_s > 0.0, "second_windows: window must be positive");
  require(hop_s > 0.0 && hop_s <= window_s, "second_windows: need 0 < hop <= window");
  require(m.num_frames() >= 1, "second_windows: empty spectrogram");
  const double fps = m.params.sample_rate / m.params.hop;
  const double duration = m.params.num_samples > 0
                              ? static_cast<double>(m.params.num_samples) / m.params.sample_rate
                              : static_cast<double>(m.num_frames() - 1) / fps;
  constexpr double eps = 1e-9;
  require(window_s <= duration + eps, "second_windows: window longer than recording");

  const auto frames_in_window =
      std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::lround(window_s * fps)));
  Eigen::Index count = 1;
  if (duration - window_s > eps)
    count = static_cast<Eigen::Index>(std::floor((duration - window_s) / hop_s + eps)) + 2;

  std::vector<MelSpectrogram> out;
  out.reserve(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto start = static_cast<Eigen::Index>(std::lround(i * hop_s * fps));
    MelSpectrogram slice;
    slice.params = m.params;
    slice.params.num_samples = static_cast<std::size_t>(std::lround(window_s * m.params.sample_rate));
    slice.values.resize(m.n_mels(), frames_in_window);
    for (Eigen::Index j = 0; j < frames_in_window; ++j)
      slice.values.col(j) = padded_column(m.values, start + j);
    out.push_back(std::move(slice));
  }
  return out;
}

/// Per-dimension mean and population std over every vector of every sequence.
inline FeatureStats fit_stats(std::span<const FeatureSequence> train) {
  require(!train.empty(), "fit_stats: empty input");
  const Eigen::Index dim = train.front().dim();
  Eigen::Index total = 0;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (const auto& s : train) {
    require(s.dim() == dim, "fit_stats: inconsistent feature dimensions");
    sum += s.vectors.rowwise().sum();
    total += s.size();
  }
  require(total >= 2, "fit_stats: need at least 2 vectors");
  FeatureStats st;
  st.mean = sum / static_cast<double>(total);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim);
  for (const auto& s : train)
    sq += (s.vectors.colwise() - st.mean).array().square().rowwise().sum().matrix();
  st.std = (sq / static_cast<double>(total)).array().sqrt().max(kStdFloor).matrix();
  return st;
}

inline FeatureSequence standardize(const FeatureSequence& x, const FeatureStats& s) {
  require(x.dim() == s.mean.size() && x.dim() == s.std.size(),
          "standardize: dimension mismatch");
  FeatureSequence out = x;
  out.vectors = ((x.vectors.colwise() - s.mean).array().colwise() / s.std.array()).matrix();
  return out;
}

/// Time-average of each slice: one n_mels vector per window. Built-in stand-in
/// for an external embedding extractor.
inline FeatureSequence window_means(const MelSpectrogram& m, double window_s, double hop_s) {
  const auto slices = second_windows(m, window_s, hop_s);
  FeatureSequence out;
  out.extractor_tag = "mel_window_mean";
  out.vectors.resize(m.n_mels(), static_cast<Eigen::Index>(slices.size()));
  for (std::size_t i = 0; i < slices.size(); ++i)
    out.vectors.col(static_cast<Eigen::Index>(i)) = slices[i].values.rowwise().mean();
  return out;
}

}  // namespace asd
