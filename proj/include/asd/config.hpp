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

// JSON run configuration. Every field has a default; the effective config
// (defaults applied) is written next to command outputs.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "asd/dataset.hpp"
#include "asd/density.hpp"
#include "asd/error.hpp"
#include "asd/evaluation.hpp"
#include "asd/io.hpp"
#include "asd/pipeline.hpp"

namespace asd {

struct SweepConfig {
  std::vector<int> k_values = default_sweep_k();
  std::vector<CovType> cov_types = {CovType::diagonal, CovType::full};
  std::optional<int> snr_db;  // restrict the sweep to one SNR tier
};

struct RunConfig {
  std::filesystem::path dataset_root;
  std::filesystem::path output_dir = "asd_out";
  PipelineConfig pipeline;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  int jobs = 1;
  SynthConfig synth;
  SweepConfig sweep;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.contains(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

}  // namespace detail

inline nlohmann::json to_json(const RunConfig& c) {
  const auto& p = c.pipeline;
  std::vector<std::string> covs;
  for (auto t : c.sweep.cov_types) covs.push_back(to_string(t));
  nlohmann::json gmm = p.gmm;
  gmm.erase("seed");
  gmm["k"] = p.gmm_k ? nlohmann::json(*p.gmm_k) : nlohmann::json(default_gmm_k(p.model));
  nlohmann::json train = p.train;
  train.erase("seed");
  return {
      {"dataset_root", c.dataset_root.string()},
      {"output_dir", c.output_dir.string()},
      {"model", to_string(p.model)},
      {"dsp",
       {{"sample_rate", p.mel.sample_rate}, {"n_fft", p.mel.n_fft}, {"hop", p.mel.hop},
        {"n_mels", p.mel.n_mels}, {"fmin", p.mel.fmin}, {"fmax", p.mel.fmax}}},
      {"patch",
       {{"window_frames", p.patch.window_frames}, {"hop_frames", p.patch.hop_frames},
        {"flatten", p.patch.flatten}}},
      {"windows", {{"window_s", p.window_s}, {"hop_s", p.hop_s}}},
      {"features",
       {{"source", p.feature_source == FeatureSource::fvec ? "fvec" : "mel_window_mean"},
        {"dir", p.features_dir.string()},
        {"use_pca", p.pca_enabled()},
        {"pca_retain", p.pca_retain}}},
      {"gmm", gmm},
      {"train", train},
      {"seeds", c.seeds},
      {"jobs", c.jobs},
      {"pooling", to_string(p.pooling)},
      {"synth", c.synth},
      {"sweep",
       {{"k_values", c.sweep.k_values}, {"cov_types", covs},
        {"snr_db", c.sweep.snr_db ? nlohmann::json(*c.sweep.snr_db) : nlohmann::json(nullptr)}}}};
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::get_or;
  try {
    check_keys(j, {"dataset_root", "output_dir", "model", "dsp", "patch", "windows", "features", "gmm",
                   "train", "seeds", "jobs", "pooling", "synth", "sweep"},
               "config");
    RunConfig c;
    auto& p = c.pipeline;
    c.dataset_root = get_or<std::string>(j, "dataset_root", "");
    c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir.string());
    p.model = model_tag_from_string(get_or<std::string>(j, "model", to_string(p.model)));
    if (j.contains("dsp")) {
      const auto& d = j.at("dsp");
      check_keys(d, {"sample_rate", "n_fft", "hop", "n_mels", "fmin", "fmax"}, "dsp");
      p.mel.sample_rate = get_or(d, "sample_rate", p.mel.sample_rate);
      p.mel.n_fft = get_or(d, "n_fft", p.mel.n_fft);
      p.mel.hop = get_or(d, "hop", p.mel.hop);
      p.mel.n_mels = get_or(d, "n_mels", p.mel.n_mels);
      p.mel.fmin = get_or(d, "fmin", p.mel.fmin);
      p.mel.fmax = get_or(d, "fmax", p.mel.sample_rate / 2.0);
    }
    if (j.contains("patch")) {
      const auto& d = j.at("patch");
      check_keys(d, {"window_frames", "hop_frames", "flatten"}, "patch");
      p.patch.window_frames = get_or(d, "window_frames", p.patch.window_frames);
      p.patch.hop_frames = get_or(d, "hop_frames", p.patch.hop_frames);
      p.patch.flatten = get_or(d, "flatten", p.patch.flatten);
    }
    if (j.contains("windows")) {
      const auto& d = j.at("windows");
      check_keys(d, {"window_s", "hop_s"}, "windows");
      p.window_s = get_or(d, "window_s", p.window_s);
      p.hop_s = get_or(d, "hop_s", p.hop_s);
    }
    if (j.contains("features")) {
      const auto& d = j.at("features");
      check_keys(d, {"source", "dir", "use_pca", "pca_retain"}, "features");
      const auto src = get_or<std::string>(d, "source", "mel_window_mean");
      if (src == "fvec") p.feature_source = FeatureSource::fvec;
      else if (src == "mel_window_mean") p.feature_source = FeatureSource::mel_window_mean;
      else throw ConfigError("unknown feature source '" + src + "'");
      p.features_dir = get_or<std::string>(d, "dir", "");
      if (d.contains("use_pca") && !d.at("use_pca").is_null()) p.use_pca = d.at("use_pca").get<bool>();
      p.pca_retain = get_or(d, "pca_retain", p.pca_retain);
    }
    if (j.contains("gmm")) {
      const auto& d = j.at("gmm");
      check_keys(d, {"k", "cov_type", "max_iters", "tol", "reg", "init_subsample"}, "gmm");
      p.gmm = d.get<GmmConfig>();
      if (d.contains("k") && !d.at("k").is_null()) p.gmm_k = d.at("k").get<int>();
    }
    if (j.contains("train")) {
      const auto& d = j.at("train");
      check_keys(d, {"batch_size", "epochs", "learning_rate", "l2"}, "train");
      p.train = d.get<TrainConfig>();
    }
    c.seeds = get_or(j, "seeds", c.seeds);
    c.jobs = get_or(j, "jobs", c.jobs);
    p.pooling = pooling_from_string(get_or<std::string>(j, "pooling", "mean"));
    if (j.contains("synth")) {
      check_keys(j.at("synth"),
                 {"n_normal", "n_anomalous", "base_f0", "n_harmonics", "noise_level", "anomaly_kinds", "seed",
                  "sample_rate", "duration_s", "machine_ids", "snr_db"},
                 "synth");
      c.synth = j.at("synth").get<SynthConfig>();
    }
    if (j.contains("sweep")) {
      const auto& d = j.at("sweep");
      check_keys(d, {"k_values", "cov_types", "snr_db"}, "sweep");
      c.sweep.k_values = get_or(d, "k_values", c.sweep.k_values);
      if (d.contains("cov_types")) {
        c.sweep.cov_types.clear();
        for (const auto& s : d.at("cov_types")) c.sweep.cov_types.push_back(cov_type_from_string(s));
      }
      if (d.contains("snr_db") && !d.at("snr_db").is_null()) c.sweep.snr_db = d.at("snr_db").get<int>();
    }

    p.mel.validate();
    p.train.validate();
    p.gmm.validate();
    if (p.gmm_k && *p.gmm_k < 1) throw ConfigError("gmm.k must be >= 1");
    if (p.patch.window_frames < 1 || p.patch.hop_frames < 1)
      throw ConfigError("patch.window_frames and patch.hop_frames must be >= 1");
    if (!(p.window_s > 0.0) || !(p.hop_s > 0.0) || p.hop_s > p.window_s)
      throw ConfigError("windows: need 0 < hop_s <= window_s");
    if (!(p.pca_retain > 0.0 && p.pca_retain <= 1.0)) throw ConfigError("features.pca_retain must lie in (0, 1]");
    if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
    if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
    c.synth.validate();
    if (p.model == ModelTag::external_gmm && p.feature_source == FeatureSource::fvec &&
        p.features_dir.empty())
      throw ConfigError("features.dir is required for external_gmm with FVEC features");
    if (uses_network(p.model) && p.patch.flatten &&
        p.mel.n_mels * p.patch.window_frames <= 16)
      throw ConfigError("patch dimension too small for the autoencoder topology");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace asd
