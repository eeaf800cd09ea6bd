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

// Time-frequency front end: DFT, STFT, Mel filterbank, log-Mel spectrogram.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "asd/error.hpp"

namespace asd {

struct Waveform {
  std::vector<double> samples;
  double sample_rate = 16000.0;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }

  void validate() const {
    require(sample_rate > 0.0, "waveform sample_rate must be positive");
    for (double s : samples)
      require(std::isfinite(s), "waveform contains non-finite samples");
  }
};

/// Power spectrogram, F x T with F = n_fft / 2 + 1.
struct Spectrogram {
  Eigen::MatrixXd power;
  int n_fft = 0;
  int hop = 0;
  double sample_rate = 0.0;

  Eigen::Index num_bins() const { return power.rows(); }
  Eigen::Index num_frames() const { return power.cols(); }
};

struct MelFilterbank {
  Eigen::MatrixXd weights;          // n_mels x (n_fft / 2 + 1)
  std::vector<double> mel_centers;  // n_mels + 2 edge/center points in Hz

  /// Triangle response of filter m at frequency f (Hz), before sampling.
  double response(Eigen::Index m, double f) const {
    const double left = mel_centers[m], center = mel_centers[m + 1],
                 right = mel_centers[m + 2];
    const double up = (f - left) / (center - left);
    const double down = (right - f) / (right - center);
    return std::max(0.0, std::min(up, down));
  }
};

struct MelParams {
  double sample_rate = 16000.0;
  int n_fft = 1024;
  int hop = 512;
  int n_mels = 64;
  double fmin = 0.0;
  double fmax = 8000.0;
  bool normalized = false;
  // Length of the source waveform; lets window slicing work in seconds.
  std::size_t num_samples = 0;

  void validate() const {
    require(sample_rate > 0.0, "sample_rate must be positive");
    require(n_fft >= 2, "n_fft must be >= 2");
    require(hop >= 1, "hop must be >= 1");
    require(n_mels >= 1, "n_mels must be >= 1");
    require(fmin >= 0.0 && fmin < fmax, "need 0 <= fmin < fmax");
    require(fmax <= sample_rate / 2.0, "fmax exceeds the Nyquist frequency");
  }
};

struct MelSpectrogram {
  Eigen::MatrixXd values;  // n_mels x frames; dB or [0,1] when normalized
  MelParams params;

  Eigen::Index n_mels() const { return values.rows(); }
  Eigen::Index num_frames() const { return values.cols(); }
};

inline constexpr double kPowerFloor = 1e-10;

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Direct O(T^2) evaluation of the DFT. Used as a reference for fft().
inline std::vector<std::complex<double>> dft_reference(std::span<const double> signal) {
  require(!signal.empty(), "dft_reference: empty signal");
  const std::size_t n = signal.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      require(std::isfinite(signal[t]), "dft_reference: non-finite sample");
      // Reduce k*t mod n first so the phase stays accurate for long inputs.
      const double phi = 2.0 * std::numbers::pi *
                         static_cast<double>((k * t) % n) / static_cast<double>(n);
      re += signal[t] * std::cos(phi);
      im -= signal[t] * std::sin(phi);
    }
    out[k] = {re, im};
  }
  return out;
}

namespace detail {

inline bool is_pow2(std::size_t n) { return n && !(n & (n - 1)); }

// In-place iterative radix-2 FFT; n must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      // Twiddles computed directly rather than by recurrence to avoid drift.
      const double phi = -2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(len);
      const std::complex<double> w(std::cos(phi), std::sin(phi));
      for (std::size_t i = k; i < n; i += len) {
        const auto u = a[i];
        const auto v = a[i + half] * w;
        a[i] = u + v;
        a[i + half] = u - v;
      }
    }
  }
}

inline std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  return w;
}

}  // namespace detail

/// DFT of a real sequence; radix-2 for power-of-two lengths, direct otherwise.
inline std::vector<std::complex<double>> fft(std::span<const double> signal) {
  require(!signal.empty(), "fft: empty signal");
  if (!detail::is_pow2(signal.size())) return dft_reference(signal);
  std::vector<std::complex<double>> a(signal.begin(), signal.end());
  detail::fft_radix2(a);
  return a;
}

/// Number of centered frames for a signal of `len` samples.
inline Eigen::Index stft_num_frames(std::size_t len, int hop) {
  return 1 + static_cast<Eigen::Index>(len / static_cast<std::size_t>(hop));
}

/// Hann-windowed STFT with reflect center padding of n_fft/2 on each side.
/// Cell (k, t) holds |c_k|^2 / n_fft for bins 0..n_fft/2.
inline Spectrogram stft(const Waveform& w, int n_fft, int hop) {
  w.validate();
  require(n_fft >= 2, "stft: n_fft must be >= 2");
  require(hop >= 1, "stft: hop must be >= 1");
  const std::size_t len = w.samples.size();
  const std::size_t pad = static_cast<std::size_t>(n_fft / 2);
  require(len > 0, "stft: empty waveform");
  require(len + 2 * pad >= static_cast<std::size_t>(n_fft),
          "stft: n_fft longer than padded signal");
  require(len > pad, "stft: signal too short for reflect padding");

  std::vector<double> padded(len + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    padded[pad - 1 - i] = w.samples[i + 1];
    padded[pad + len + i] = w.samples[len - 2 - i];
  }
  std::copy(w.samples.begin(), w.samples.end(), padded.begin() + pad);

  const auto window = detail::hann_window(n_fft);
  const Eigen::Index frames = stft_num_frames(len, hop);
  const Eigen::Index bins = n_fft / 2 + 1;

  Spectrogram s;
  s.power.resize(bins, frames);
  s.n_fft = n_fft;
  s.hop = hop;
  s.sample_rate = w.sample_rate;

  std::vector<double> frame(n_fft);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * hop;
    for (int i = 0; i < n_fft; ++i) frame[i] = padded[start + i] * window[i];
    const auto spec = fft(frame);
    for (Eigen::Index k = 0; k < bins; ++k)
      s.power(k, t) = std::norm(spec[k]) / n_fft;
  }
  return s;
}

/// Triangular filters with centers equally spaced on the Mel scale; peak 1.
inline MelFilterbank mel_filterbank(double sample_rate, int n_fft, int n_mels,
                                    double fmin, double fmax) {
  require(sample_rate > 0.0, "mel_filterbank: sample_rate must be positive");
  require(n_fft >= 2, "mel_filterbank: n_fft must be >= 2");
  require(n_mels >= 1, "mel_filterbank: n_mels must be >= 1");
  require(fmin >= 0.0 && fmin < fmax, "mel_filterbank: need 0 <= fmin < fmax");
  require(fmax <= sample_rate / 2.0, "mel_filterbank: fmax exceeds Nyquist");

  MelFilterbank fb;
  const double mlo = hz_to_mel(fmin), mhi = hz_to_mel(fmax);
  fb.mel_centers.resize(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    fb.mel_centers[i] = mel_to_hz(mlo + (mhi - mlo) * i / (n_mels + 1));
  fb.mel_centers.front() = fmin;
  fb.mel_centers.back() = fmax;

  const Eigen::Index bins = n_fft / 2 + 1;
  fb.weights = Eigen::MatrixXd::Zero(n_mels, bins);
  for (Eigen::Index m = 0; m < n_mels; ++m) {
    for (Eigen::Index k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      fb.weights(m, k) = fb.response(m, f);
    }
  }
  return fb;
}

inline MelFilterbank mel_filterbank(const MelParams& p) {
  return mel_filterbank(p.sample_rate, p.n_fft, p.n_mels, p.fmin, p.fmax);
}

/// Applies a precomputed filterbank; values in dB with a 1e-10 power floor.
inline MelSpectrogram mel_spectrogram(const Waveform& w, const MelParams& params,
                                      const MelFilterbank& fb) {
  params.validate();
  require(w.sample_rate == params.sample_rate,
          "mel_spectrogram: waveform sample rate does not match params");
  require(fb.weights.rows() == params.n_mels &&
              fb.weights.cols() == params.n_fft / 2 + 1,
          "mel_spectrogram: filterbank shape does not match params");
  const Spectrogram s = stft(w, params.n_fft, params.hop);
  MelSpectrogram m;
  m.params = params;
  m.params.normalized = false;
  m.params.num_samples = w.samples.size();
  m.values = (fb.weights * s.power)
                 .unaryExpr([](double p) { return 10.0 * std::log10(std::max(p, kPowerFloor)); });
  return m;
}

inline MelSpectrogram mel_spectrogram(const Waveform& w, const MelParams& params) {
  params.validate();
  return mel_spectrogram(w, params, mel_filterbank(params));
}

/// Per-recording min-max scaling to [0, 1]. A constant input maps to zeros.
/// Re-applying it to normalized output is the identity.
inline MelSpectrogram normalize_01(const MelSpectrogram& m) {
  MelSpectrogram out = m;
  out.params.normalized = true;
  if (m.values.size() == 0) return out;
  const double lo = m.values.minCoeff(), hi = m.values.maxCoeff();
  if (!(hi > lo)) {
    out.values.setZero();
    return out;
  }
  out.values = (m.values.array() - lo) / (hi - lo);
  return out;
}

}  // namespace asd
