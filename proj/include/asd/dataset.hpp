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

// MIMII-style dataset layout, SNR mixing and the synthetic benchmark generator.
//
// Layout: <root>/<snr>dB/<machine_type>/id_<k>/{normal|abnormal}/<name>.wav
// (MIMII's own "<snr>_dB_<machine>" top-level names are accepted too.)

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "asd/dsp.hpp"
#include "asd/error.hpp"
#include "asd/io.hpp"
#include "asd/log.hpp"
#include "asd/random.hpp"
#include "asd/wav.hpp"

namespace asd {

enum class Label { normal = 0, anomalous = 1 };

inline const std::set<std::string>& known_machine_types() {
  static const std::set<std::string> types = {"fan", "pump", "slider", "valve", "synthetic"};
  return types;
}

struct RecordingMeta {
  std::string path;  // relative to the dataset root
  std::string machine_type;
  int machine_id = 0;
  std::optional<int> snr_db;
  Label label = Label::normal;

  bool operator==(const RecordingMeta&) const = default;
};

/// Identifies one (machine type, machine id, SNR) combination.
struct ComboKey {
  std::string machine_type;
  int machine_id = 0;
  std::optional<int> snr_db;

  auto operator<=>(const ComboKey&) const = default;

  std::string snr_string() const { return snr_db ? std::to_string(*snr_db) : "none"; }
  std::string str() const {
    return fmt::format("{}|{}|{}", machine_type, machine_id, snr_string());
  }
};

inline ComboKey combo_of(const RecordingMeta& m) { return {m.machine_type, m.machine_id, m.snr_db}; }

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<RecordingMeta> recordings;
  double sample_rate = 16000.0;
  double duration_s = 10.0;

  std::filesystem::path absolute(const RecordingMeta& m) const { return root / m.path; }

  std::map<ComboKey, std::vector<RecordingMeta>> by_combination() const {
    std::map<ComboKey, std::vector<RecordingMeta>> out;
    for (const auto& r : recordings) out[combo_of(r)].push_back(r);
    return out;
  }
};

inline void to_json(nlohmann::json& j, const RecordingMeta& m) {
  j = {{"path", m.path},
       {"machine_type", m.machine_type},
       {"machine_id", m.machine_id},
       {"snr_db", m.snr_db ? nlohmann::json(*m.snr_db) : nlohmann::json(nullptr)},
       {"label", m.label == Label::normal ? "normal" : "anomalous"}};
}

inline void from_json(const nlohmann::json& j, RecordingMeta& m) {
  m.path = j.at("path").get<std::string>();
  m.machine_type = j.at("machine_type").get<std::string>();
  m.machine_id = j.at("machine_id").get<int>();
  m.snr_db = j.at("snr_db").is_null() ? std::nullopt : std::optional<int>(j.at("snr_db").get<int>());
  const auto label = j.at("label").get<std::string>();
  if (label != "normal" && label != "anomalous") throw DataError("manifest: bad label " + label);
  m.label = label == "normal" ? Label::normal : Label::anomalous;
}

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
  return {{"sample_rate", m.sample_rate}, {"duration_s", m.duration_s}, {"recordings", m.recordings}};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& root) {
  DatasetManifest m;
  m.root = root;
  m.sample_rate = j.value("sample_rate", 16000.0);
  m.duration_s = j.value("duration_s", 10.0);
  m.recordings = j.at("recordings").get<std::vector<RecordingMeta>>();
  return m;
}

namespace detail {

inline std::optional<int> parse_snr_dir(const std::string& name) {
  static const std::regex re(R"(^(-?\d+)_?dB(_.*)?$)");
  std::smatch m;
  if (!std::regex_match(name, m, re)) return std::nullopt;
  return std::stoi(m[1].str());
}

inline std::optional<int> parse_id_dir(const std::string& name) {
  static const std::regex re(R"(^id_(\d+)$)");
  std::smatch m;
  if (!std::regex_match(name, m, re)) return std::nullopt;
  return std::stoi(m[1].str());
}

inline std::vector<std::filesystem::path> sorted_entries(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Walks the fixed layout. Labels come from the directory name only.
inline DatasetManifest scan_dataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw DataError("dataset root " + root.string() + " is not a directory");
  DatasetManifest manifest;
  manifest.root = root;
  auto warn = [](const fs::path& p) { logger()->warn("ignoring unexpected entry {}", p.string()); };

  for (const auto& snr_dir : detail::sorted_entries(root)) {
    if (!fs::is_directory(snr_dir)) {
      if (snr_dir.filename() != "manifest.json") warn(snr_dir);
      continue;
    }
    const auto snr = detail::parse_snr_dir(snr_dir.filename().string());
    if (!snr) {
      warn(snr_dir);
      continue;
    }
    for (const auto& type_dir : detail::sorted_entries(snr_dir)) {
      const auto type = type_dir.filename().string();
      if (!fs::is_directory(type_dir) || !known_machine_types().contains(type)) {
        warn(type_dir);
        continue;
      }
      for (const auto& id_dir : detail::sorted_entries(type_dir)) {
        const auto id = detail::parse_id_dir(id_dir.filename().string());
        if (!fs::is_directory(id_dir) || !id) {
          warn(id_dir);
          continue;
        }
        for (const auto& label_dir : detail::sorted_entries(id_dir)) {
          const auto name = label_dir.filename().string();
          if (!fs::is_directory(label_dir) || (name != "normal" && name != "abnormal")) {
            warn(label_dir);
            continue;
          }
          for (const auto& f : detail::sorted_entries(label_dir)) {
            if (f.extension() != ".wav") {
              warn(f);
              continue;
            }
            manifest.recordings.push_back({fs::relative(f, root).generic_string(), type, *id, *snr,
                                           name == "normal" ? Label::normal : Label::anomalous});
          }
        }
      }
    }
  }
  if (manifest.recordings.empty()) throw DataError("no recordings found under " + root.string());
  return manifest;
}

/// Decodes recordings and enforces a shared sample rate and length. The
/// length is pinned by the first decoded file.
class RecordingReader {
 public:
  explicit RecordingReader(DatasetManifest manifest) : manifest_(std::move(manifest)) {}

  const DatasetManifest& manifest() const { return manifest_; }

  Waveform read(const RecordingMeta& m) {
    Waveform w = read_wav(manifest_.absolute(m), manifest_.sample_rate);
    std::lock_guard lock(mu_);
    if (!length_) length_ = w.samples.size();
    if (w.samples.size() != *length_)
      throw DataError(fmt::format("recording {} has {} samples, expected {}", m.path,
                                  w.samples.size(), *length_));
    return w;
  }

 private:
  DatasetManifest manifest_;
  std::mutex mu_;
  std::optional<std::size_t> length_;
};

inline double rms(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

/// signal + g * noise with g chosen so that the RMS ratio equals snr_db.
inline Waveform mix_at_snr(const Waveform& signal, const Waveform& noise, double snr_db) {
  require(signal.samples.size() == noise.samples.size(), "mix_at_snr: length mismatch");
  require(signal.sample_rate == noise.sample_rate, "mix_at_snr: sample rate mismatch");
  require(std::isfinite(snr_db), "mix_at_snr: non-finite SNR");
  const double rs = rms(signal.samples), rn = rms(noise.samples);
  require(rs > 0.0, "mix_at_snr: signal has zero RMS");
  require(rn > 0.0, "mix_at_snr: noise has zero RMS");
  const double g = rs / (rn * std::pow(10.0, snr_db / 20.0));
  Waveform out = signal;
  for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += g * noise.samples[i];
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic benchmark

enum class AnomalyKind { pitch_shift, transient_clicks, harmonic_dropout, amplitude_modulation };

inline std::string to_string(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::pitch_shift: return "pitch_shift";
    case AnomalyKind::transient_clicks: return "transient_clicks";
    case AnomalyKind::harmonic_dropout: return "harmonic_dropout";
    case AnomalyKind::amplitude_modulation: return "amplitude_modulation";
  }
  return "?";
}

inline AnomalyKind anomaly_kind_from_string(const std::string& s) {
  for (auto k : {AnomalyKind::pitch_shift, AnomalyKind::transient_clicks,
                 AnomalyKind::harmonic_dropout, AnomalyKind::amplitude_modulation})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown anomaly kind '" + s + "'");
}

struct SynthConfig {
  int n_normal = 60;
  int n_anomalous = 20;
  double base_f0 = 125.0;
  int n_harmonics = 12;
  double noise_level = 0.05;  // white noise RMS relative to the harmonic RMS
  std::vector<AnomalyKind> anomaly_kinds = {AnomalyKind::pitch_shift, AnomalyKind::transient_clicks,
                                            AnomalyKind::harmonic_dropout,
                                            AnomalyKind::amplitude_modulation};
  std::uint64_t seed = 0;
  double sample_rate = 16000.0;
  double duration_s = 10.0;
  std::vector<int> machine_ids = {0};
  std::vector<int> snr_db = {-6, 0, 6};

  void validate() const {
    require(n_normal >= 1 && n_anomalous >= 1, "SynthConfig: counts must be >= 1");
    require(n_harmonics >= 1, "SynthConfig: n_harmonics must be >= 1");
    require(base_f0 > 0.0 && base_f0 < sample_rate / 2.0 / n_harmonics,
            "SynthConfig: base_f0 must be below Nyquist / n_harmonics");
    require(noise_level >= 0.0, "SynthConfig: noise_level must be >= 0");
    require(!anomaly_kinds.empty(), "SynthConfig: no anomaly kinds");
    require(duration_s > 0.0 && sample_rate > 0.0, "SynthConfig: bad duration or rate");
    require(!machine_ids.empty() && !snr_db.empty(), "SynthConfig: need machine ids and SNR tiers");
  }

  /// Fundamental for a machine id; ids differ by 5 % steps.
  double f0_for(int machine_id) const { return base_f0 * (1.0 + 0.05 * machine_id); }
};

inline void to_json(nlohmann::json& j, const SynthConfig& c) {
  std::vector<std::string> kinds;
  for (auto k : c.anomaly_kinds) kinds.push_back(to_string(k));
  j = {{"n_normal", c.n_normal},       {"n_anomalous", c.n_anomalous},
       {"base_f0", c.base_f0},         {"n_harmonics", c.n_harmonics},
       {"noise_level", c.noise_level}, {"anomaly_kinds", kinds},
       {"seed", c.seed},               {"sample_rate", c.sample_rate},
       {"duration_s", c.duration_s},   {"machine_ids", c.machine_ids},
       {"snr_db", c.snr_db}};
}

inline void from_json(const nlohmann::json& j, SynthConfig& c) {
  SynthConfig d;
  c.n_normal = j.value("n_normal", d.n_normal);
  c.n_anomalous = j.value("n_anomalous", d.n_anomalous);
  c.base_f0 = j.value("base_f0", d.base_f0);
  c.n_harmonics = j.value("n_harmonics", d.n_harmonics);
  c.noise_level = j.value("noise_level", d.noise_level);
  c.anomaly_kinds.clear();
  if (j.contains("anomaly_kinds")) {
    for (const auto& s : j.at("anomaly_kinds")) c.anomaly_kinds.push_back(anomaly_kind_from_string(s));
  } else {
    c.anomaly_kinds = d.anomaly_kinds;
  }
  c.seed = j.value("seed", d.seed);
  c.sample_rate = j.value("sample_rate", d.sample_rate);
  c.duration_s = j.value("duration_s", d.duration_s);
  c.machine_ids = j.value("machine_ids", d.machine_ids);
  c.snr_db = j.value("snr_db", d.snr_db);
}

struct SynthRecording {
  Waveform wave;
  std::optional<AnomalyKind> anomaly;
};

/// Harmonic machine tone: sum of k * f0 partials with ~1/k amplitudes and
/// random phases, plus white noise. Anomalous recordings get one seeded fault.
inline SynthRecording synth_recording(const SynthConfig& cfg, bool anomalous, std::uint64_t seed,
                                      int machine_id = 0) {
  cfg.validate();
  Rng rng(seed);
  const double sr = cfg.sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * sr));
  double f0 = cfg.f0_for(machine_id);
  const int h = cfg.n_harmonics;

  std::vector<double> amp(h), phase(h);
  for (int k = 0; k < h; ++k) {
    amp[k] = (1.0 / (k + 1)) * uniform(rng, 0.9, 1.1);
    phase[k] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  }

  SynthRecording out;
  std::size_t span_begin = 0, span_end = 0;
  auto random_span = [&](double min_s, double max_s) {
    const double len = uniform(rng, min_s, std::min(max_s, cfg.duration_s));
    const double start = uniform(rng, 0.0, cfg.duration_s - len);
    span_begin = static_cast<std::size_t>(start * sr);
    span_end = std::min(n, static_cast<std::size_t>((start + len) * sr));
  };
  if (anomalous) {
    out.anomaly = cfg.anomaly_kinds[uniform_index(rng, cfg.anomaly_kinds.size())];
    switch (*out.anomaly) {
      case AnomalyKind::pitch_shift: f0 *= uniform(rng, 1.05, 1.2); break;
      case AnomalyKind::harmonic_dropout: random_span(2.0, 2.0); break;
      case AnomalyKind::amplitude_modulation: random_span(4.0, 8.0); break;
      case AnomalyKind::transient_clicks: break;
    }
  }
  const bool dropout = out.anomaly == AnomalyKind::harmonic_dropout;
  const bool modulate = out.anomaly == AnomalyKind::amplitude_modulation;

  Waveform& w = out.wave;
  w.sample_rate = sr;
  w.samples.assign(n, 0.0);
  for (int k = 0; k < h; ++k) {
    if ((k + 1) * f0 >= sr / 2.0) break;
    const double omega = 2.0 * std::numbers::pi * (k + 1) * f0 / sr;
    const bool upper_half = k >= h / 2;
    for (std::size_t i = 0; i < n; ++i) {
      if (dropout && upper_half && i >= span_begin && i < span_end) continue;
      w.samples[i] += amp[k] * std::sin(omega * static_cast<double>(i) + phase[k]);
    }
  }
  if (modulate) {
    for (std::size_t i = span_begin; i < span_end; ++i)
      w.samples[i] *= 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * 4.0 * i / sr);
  }
  const double tone_rms = rms(w.samples);
  if (out.anomaly == AnomalyKind::transient_clicks) {
    // 3-8 decaying broadband bursts of ~20 ms.
    const int clicks = 3 + static_cast<int>(uniform_index(rng, 6));
    const auto burst = static_cast<std::size_t>(0.02 * sr);
    for (int c = 0; c < clicks; ++c) {
      const auto at = static_cast<std::size_t>(uniform(rng, 0.0, static_cast<double>(n - burst)));
      const double a = tone_rms * uniform(rng, 6.0, 12.0);
      for (std::size_t i = 0; i < burst; ++i)
        w.samples[at + i] += a * std::exp(-5.0 * i / static_cast<double>(burst)) * normal(rng);
    }
  }
  if (cfg.noise_level > 0.0) {
    const double sigma = cfg.noise_level * tone_rms;
    for (auto& v : w.samples) v += sigma * normal(rng);
  }
  return out;
}

/// Factory-like background: white noise through a high shelf (band below
/// 2 kHz attenuated by about 14 dB), unit RMS.
inline Waveform factory_noise(std::size_t n, double sample_rate, std::uint64_t seed) {
  Rng rng(seed);
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(n);
  const double a = std::exp(-2.0 * std::numbers::pi * 2000.0 / sample_rate);
  double y = 0.0;
  for (auto& v : w.samples) {
    const double x = normal(rng);
    y = a * y + (1.0 - a) * x;
    v = x - 0.8 * y;
  }
  const double r = rms(w.samples);
  for (auto& v : w.samples) v /= r;
  return w;
}

namespace detail {

inline std::string uuid_from(Rng& rng) {
  const std::uint64_t a = rng(), b = rng();
  return fmt::format("{:08x}-{:04x}-4{:03x}-{:04x}-{:012x}", a >> 32, (a >> 16) & 0xffff,
                     a & 0xfff, 0x8000 | (b >> 48 & 0x3fff), b & 0xffffffffffffULL);
}

// Peak <= 0.99 and RMS <= 0.1 so PCM16 never clips.
inline void fit_to_pcm(Waveform& w) {
  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  const double r = rms(w.samples);
  if (peak <= 0.0) return;
  const double g = std::min(0.1 / r, 0.99 / peak);
  for (auto& v : w.samples) v *= g;
}

}  // namespace detail

/// Writes the synthetic benchmark as PCM16 WAVs in the scan_dataset layout
/// plus a manifest.json cache, and returns the manifest.
inline DatasetManifest generate_benchmark(const SynthConfig& cfg, const std::filesystem::path& root) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(root);
  DatasetManifest manifest;
  manifest.root = root;
  manifest.sample_rate = cfg.sample_rate;
  manifest.duration_s = cfg.duration_s;
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.sample_rate));

  for (int id : cfg.machine_ids) {
    Rng names(derive_seed(cfg.seed, fmt::format("names|{}", id)));
    for (int i = 0; i < cfg.n_normal + cfg.n_anomalous; ++i) {
      const bool anomalous = i >= cfg.n_normal;
      const std::string key = fmt::format("{}|{}", id, i);
      const auto clean = synth_recording(cfg, anomalous, derive_seed(cfg.seed, key + "|clean"), id);
      const Waveform noise = factory_noise(n, cfg.sample_rate, derive_seed(cfg.seed, key + "|noise"));
      const std::string name = detail::uuid_from(names) + ".wav";
      for (int snr : cfg.snr_db) {
        Waveform mixed = mix_at_snr(clean.wave, noise, snr);
        detail::fit_to_pcm(mixed);
        const fs::path rel = fs::path(fmt::format("{}dB", snr)) / "synthetic" /
                             fmt::format("id_{:02d}", id) / (anomalous ? "abnormal" : "normal") / name;
        write_wav(root / rel, mixed);
        manifest.recordings.push_back({rel.generic_string(), "synthetic", id, snr,
                                       anomalous ? Label::anomalous : Label::normal});
      }
    }
  }
  std::sort(manifest.recordings.begin(), manifest.recordings.end(),
            [](const auto& a, const auto& b) { return a.path < b.path; });
  write_file_atomic(root / "manifest.json", manifest_to_json(manifest).dump(1) + "\n");
  return manifest;
}

}  // namespace asd
