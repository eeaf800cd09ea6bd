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

// Command implementations behind the asd executable. Each command takes a
// resolved RunConfig, writes its outputs atomically under output_dir and
// returns a short human-readable summary for stdout.

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "asd/config.hpp"
#include "asd/dataset.hpp"
#include "asd/evaluation.hpp"
#include "asd/fvec.hpp"
#include "asd/io.hpp"
#include "asd/log.hpp"
#include "asd/pipeline.hpp"
#include "asd/wav.hpp"

namespace asd {

/// Command-line overrides applied on top of the JSON config before validation.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> model;
  std::optional<std::string> pooling;
  std::optional<std::string> dataset_root;
  std::optional<std::string> output_dir;
};

inline RunConfig resolve_config(const std::optional<std::filesystem::path>& path, const Overrides& o) {
  nlohmann::json j = nlohmann::json::object();
  if (path) {
    try {
      j = nlohmann::json::parse(read_file(*path));
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config " + path->string() + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config " + path->string() + " must hold a JSON object");
  }
  if (o.seed) {
    j["seeds"] = {*o.seed};
    if (!j.contains("synth")) j["synth"] = nlohmann::json::object();
    if (j["synth"].is_object()) j["synth"]["seed"] = *o.seed;
  }
  if (o.jobs) j["jobs"] = *o.jobs;
  if (o.model) j["model"] = *o.model;
  if (o.pooling) j["pooling"] = *o.pooling;
  if (o.dataset_root) j["dataset_root"] = *o.dataset_root;
  if (o.output_dir) j["output_dir"] = *o.output_dir;
  return run_config_from_json(j);
}

inline void write_effective_config(const RunConfig& c) {
  write_file_atomic(c.output_dir / "effective_config.json", to_json(c).dump(2) + "\n");
}

namespace detail {

inline DatasetManifest load_dataset(const RunConfig& c) {
  if (c.dataset_root.empty()) throw ConfigError("dataset_root is not set");
  if (!std::filesystem::is_directory(c.dataset_root))
    throw ConfigError("dataset_root " + c.dataset_root.string() + " does not exist");
  auto m = scan_dataset(c.dataset_root);
  m.sample_rate = c.pipeline.mel.sample_rate;
  return m;
}

inline std::string model_file_name(const ComboKey& k, std::uint64_t seed) {
  return fmt::format("{}dB_{}_id_{:02d}_seed{}.json", k.snr_db ? *k.snr_db : 0, k.machine_type,
                     k.machine_id, seed);
}

/// Expands files and directories into a sorted list of .wav / .fvec files.
inline std::vector<std::filesystem::path> collect_inputs(const std::vector<std::filesystem::path>& inputs) {
  namespace fs = std::filesystem;
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::recursive_directory_iterator(in))
        if (e.is_regular_file() && (e.path().extension() == ".wav" || e.path().extension() == ".fvec"))
          found.push_back(e.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(in)) {
      out.push_back(in);
    } else {
      throw DataError("input " + in.string() + " does not exist");
    }
  }
  if (out.empty()) throw DataError("no input recordings given");
  return out;
}

inline FeatureSequence featurize_path(const PipelineConfig& cfg, const std::filesystem::path& p,
                                      const MelFilterbank& fb) {
  if (p.extension() == ".fvec") {
    if (uses_patches(cfg.model)) throw ConfigError("model " + to_string(cfg.model) + " scores WAV input, got " + p.string());
    return read_fvec(p);
  }
  if (cfg.model == ModelTag::external_gmm && cfg.feature_source == FeatureSource::fvec)
    throw ConfigError("external_gmm with FVEC features scores .fvec files, got " + p.string());
  auto seq = featurize_waveform(cfg, read_wav(p, cfg.mel.sample_rate), fb);
  seq.source_id = p.string();
  return seq;
}

inline MelFilterbank filterbank_for(const MelParams& m) {
  return mel_filterbank(m.sample_rate, m.n_fft, m.n_mels, m.fmin, m.fmax);
}

}  // namespace detail

/// Generates the synthetic benchmark under dataset_root.
inline std::string cmd_synth(const RunConfig& c) {
  if (c.dataset_root.empty()) throw ConfigError("dataset_root is not set");
  const auto m = generate_benchmark(c.synth, c.dataset_root);
  write_effective_config(c);
  return fmt::format("wrote {} recordings to {}", m.recordings.size(), c.dataset_root.string());
}

enum class MelFormat { csv, fvec };

/// Mel matrix of one WAV file: CSV with n_mels rows and one column per frame,
/// or FVEC with one vector per frame.
inline std::string cmd_melspec(const std::filesystem::path& wav, const std::filesystem::path& out,
                               const MelParams& params, MelFormat format) {
  const Waveform w = read_wav(wav, params.sample_rate);
  const MelSpectrogram m = mel_spectrogram(w, params);
  if (format == MelFormat::fvec) {
    FeatureSequence seq{m.values, wav.string(), "mel_frames"};
    const double fps = params.sample_rate / params.hop;
    write_fvec(out, seq, FvecManifest{wav.string(), "mel_frames", 1.0 / fps, 1.0 / fps});
  } else {
    std::string csv;
    for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
      for (Eigen::Index t = 0; t < m.values.cols(); ++t) {
        if (t) csv += ',';
        csv += fmt::format("{}", m.values(r, t));
      }
      csv += '\n';
    }
    write_file_atomic(out, csv);
  }
  return fmt::format("{}: {}x{} Mel matrix -> {}", wav.string(), m.values.rows(), m.values.cols(), out.string());
}

/// Trains one model per (snr, machine type, id) on the normal training
/// partition of the first configured seed. With explicit inputs, trains a
/// single model on them instead; recordings under an abnormal/ directory are
/// refused.
inline std::vector<std::filesystem::path> cmd_train(const RunConfig& c,
                                                    const std::vector<std::filesystem::path>& inputs = {}) {
  const auto& cfg = c.pipeline;
  const std::uint64_t seed = c.seeds.front();
  const auto dir = c.output_dir / "models";
  std::vector<std::filesystem::path> written;

  if (!inputs.empty()) {
    const auto files = detail::collect_inputs(inputs);
    for (const auto& f : files)
      for (const auto& part : f)
        if (part == "abnormal")
          throw DataError("refusing to train on anomalous recording " + f.string());
    const auto fb = detail::filterbank_for(cfg.mel);
    std::vector<FeatureSequence> train;
    for (const auto& f : files) train.push_back(detail::featurize_path(cfg, f, fb));
    const auto fp = fit_pipeline(cfg, train, derive_seed(seed, "inputs"));
    const auto path = dir / fmt::format("model_seed{}.json", seed);
    write_file_atomic(path, to_json(fp).dump(1) + "\n");
    written.push_back(path);
  } else {
    const auto manifest = detail::load_dataset(c);
    RecordingReader reader(manifest);
    const auto combos = manifest.by_combination();
    std::vector<const std::pair<const ComboKey, std::vector<RecordingMeta>>*> items;
    for (const auto& kv : combos) items.push_back(&kv);
    written.resize(items.size());
    parallel_for(items.size(), c.jobs, [&](std::size_t i) {
      const auto& [combo, recs] = *items[i];
      const EvalSplit split = make_split(recs, split_seed(seed, combo));
      for (const auto& r : split.train)
        if (r.label != Label::normal) throw DataError("refusing to train on anomalous recording " + r.path);
      const auto features = featurize_all(cfg, reader, split.train);
      const auto fp = fit_pipeline(cfg, gather(features, split.train), model_seed(seed, combo, cfg.model));
      written[i] = dir / detail::model_file_name(combo, seed);
      write_file_atomic(written[i], to_json(fp).dump(1) + "\n");
    });
  }
  write_effective_config(c);
  return written;
}

struct ScoreRow {
  std::string recording_id;
  double score = 0.0;
};

inline std::string scores_to_csv(const std::vector<ScoreRow>& rows) {
  std::string out = "recording_id,score\n";
  for (const auto& r : rows) out += fmt::format("{},{}\n", r.recording_id, r.score);
  return out;
}

/// Scores recordings with a persisted model and writes output_dir/scores.csv.
/// The model file decides the model tag; front-end parameters come from the
/// config. A pooling override replaces the pooling stored in the model.
inline std::vector<ScoreRow> cmd_score(const RunConfig& c, const std::filesystem::path& model_path,
                                       const std::vector<std::filesystem::path>& inputs,
                                       std::optional<Pooling> pooling = std::nullopt) {
  FittedPipeline fp;
  try {
    fp = fitted_pipeline_from_json(nlohmann::json::parse(read_file(model_path)));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model " + model_path.string() + ": " + e.what());
  }
  PipelineConfig cfg = c.pipeline;
  cfg.model = fp.model;
  if (pooling) fp.pooling = *pooling;
  const auto fb = detail::filterbank_for(cfg.mel);
  std::vector<ScoreRow> rows;
  for (const auto& f : detail::collect_inputs(inputs)) {
    const double s = fp.score(detail::featurize_path(cfg, f, fb));
    if (!std::isfinite(s)) throw NumericError("non-finite score for " + f.string());
    rows.push_back({f.string(), s});
  }
  write_file_atomic(c.output_dir / "scores.csv", scores_to_csv(rows));
  write_effective_config(c);
  return rows;
}

/// Full protocol over every combination and seed: report.csv + report.json.
inline EvalReport cmd_evaluate(const RunConfig& c) {
  const auto manifest = detail::load_dataset(c);
  EvalReport report = run_experiment(c.pipeline, manifest, c.seeds, c.jobs);
  write_file_atomic(c.output_dir / "report.csv", report.to_csv());
  write_file_atomic(c.output_dir / "report.json", report.to_json().dump(2) + "\n");
  write_effective_config(c);
  if (!report.complete()) logger()->warn("report has failed cells; see the error field in report.json");
  return report;
}

/// Mixture-size and covariance sweep: sweep.csv.
inline SweepTable cmd_sweep(const RunConfig& c) {
  auto manifest = detail::load_dataset(c);
  if (c.sweep.snr_db) {
    std::erase_if(manifest.recordings, [&](const RecordingMeta& r) { return r.snr_db != c.sweep.snr_db; });
    if (manifest.recordings.empty())
      throw DataError(fmt::format("no recordings at {} dB for the sweep", *c.sweep.snr_db));
  }
  const SweepTable table =
      sweep_gmm(c.pipeline, manifest, c.sweep.k_values, c.sweep.cov_types, c.seeds, c.jobs);
  write_file_atomic(c.output_dir / "sweep.csv", table.to_csv());
  write_effective_config(c);
  for (const auto& e : table.errors) logger()->warn("sweep: {}", e);
  return table;
}

inline std::string summarize(const EvalReport& r) {
  std::string out;
  for (const auto& a : r.aggregates())
    out += fmt::format("{:<28} {:<13} auc {:.4f} +- {:.4f} ({} ok, {} failed)\n", a.combo.str(), a.model,
                       a.mean_auc, a.std_auc, a.n_ok, a.n_failed);
  return out;
}

}  // namespace asd
