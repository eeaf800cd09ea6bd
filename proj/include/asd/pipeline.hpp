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

// Model pipelines: recording -> feature sequence -> fitted normality model ->
// recording score. One pipeline per model tag.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <utility>
#include <span>
#include <string>
#include <vector>

#include "asd/dataset.hpp"
#include "asd/density.hpp"
#include "asd/dsp.hpp"
#include "asd/error.hpp"
#include "asd/featurize.hpp"
#include "asd/fvec.hpp"
#include "asd/neural.hpp"

namespace asd {

enum class ModelTag { ae, one_lamp, lamp, q_lamp, rnd, patch_gmm, external_gmm };

inline std::string to_string(ModelTag t) {
  switch (t) {
    case ModelTag::ae: return "ae";
    case ModelTag::one_lamp: return "one_lamp";
    case ModelTag::lamp: return "lamp";
    case ModelTag::q_lamp: return "q_lamp";
    case ModelTag::rnd: return "rnd";
    case ModelTag::patch_gmm: return "patch_gmm";
    case ModelTag::external_gmm: return "external_gmm";
  }
  return "?";
}

inline ModelTag model_tag_from_string(const std::string& s) {
  for (auto t : {ModelTag::ae, ModelTag::one_lamp, ModelTag::lamp, ModelTag::q_lamp, ModelTag::rnd,
                 ModelTag::patch_gmm, ModelTag::external_gmm})
    if (to_string(t) == s) return t;
  throw ConfigError("unknown model '" + s + "'");
}

inline bool uses_patches(ModelTag t) { return t != ModelTag::external_gmm; }
inline bool uses_network(ModelTag t) {
  return t == ModelTag::ae || t == ModelTag::one_lamp || t == ModelTag::lamp ||
         t == ModelTag::q_lamp || t == ModelTag::rnd;
}
inline bool uses_gmm(ModelTag t) { return t != ModelTag::ae && t != ModelTag::rnd; }

/// Mixture size when the config leaves it unset: 42 for the LAMP family,
/// 20 for everything else.
inline int default_gmm_k(ModelTag t) {
  return (t == ModelTag::one_lamp || t == ModelTag::lamp || t == ModelTag::q_lamp) ? 42 : 20;
}

inline bool default_use_pca(ModelTag t) { return t == ModelTag::external_gmm; }

enum class FeatureSource { fvec, mel_window_mean };

struct PipelineConfig {
  ModelTag model = ModelTag::patch_gmm;
  MelParams mel;
  PatchConfig patch;
  double window_s = 1.0;
  double hop_s = 0.5;
  FeatureSource feature_source = FeatureSource::mel_window_mean;
  std::filesystem::path features_dir;  // FVEC tree mirroring the dataset layout
  std::optional<bool> use_pca;
  double pca_retain = 0.98;
  GmmConfig gmm;
  std::optional<int> gmm_k;
  TrainConfig train;
  Pooling pooling = Pooling::mean;

  bool pca_enabled() const { return use_pca.value_or(default_use_pca(model)); }

  GmmConfig effective_gmm(std::uint64_t seed) const {
    GmmConfig g = gmm;
    g.k = gmm_k.value_or(default_gmm_k(model));
    g.seed = seed;
    return g;
  }
};

/// Location of the FVEC file for a recording: same relative path, .fvec suffix.
inline std::filesystem::path fvec_path_for(const std::filesystem::path& features_dir,
                                           const std::string& relative_wav) {
  auto p = features_dir / relative_wav;
  p.replace_extension(".fvec");
  return p;
}

/// Front-end features of one waveform: normalized Mel patches for the patch
/// and network models, per-second window means for the built-in extractor.
inline FeatureSequence featurize_waveform(const PipelineConfig& cfg, const Waveform& w,
                                          const MelFilterbank& fb) {
  const MelSpectrogram mel = mel_spectrogram(w, cfg.mel, fb);
  if (uses_patches(cfg.model)) return sliding_patches(normalize_01(mel), cfg.patch);
  return window_means(mel, cfg.window_s, cfg.hop_s);
}

inline FeatureSequence featurize_recording(const PipelineConfig& cfg, RecordingReader& reader,
                                           const RecordingMeta& meta, const MelFilterbank& fb) {
  FeatureSequence seq;
  if (cfg.model == ModelTag::external_gmm && cfg.feature_source == FeatureSource::fvec) {
    seq = read_fvec(fvec_path_for(cfg.features_dir, meta.path));
  } else {
    seq = featurize_waveform(cfg, reader.read(meta), fb);
  }
  seq.source_id = meta.path;
  return seq;
}

inline Eigen::MatrixXd concat_columns(std::span<const FeatureSequence> seqs) {
  require(!seqs.empty(), "concat_columns: no sequences");
  Eigen::Index cols = 0;
  for (const auto& s : seqs) {
    require(s.dim() == seqs.front().dim(), "feature dimensions differ between recordings");
    cols += s.size();
  }
  Eigen::MatrixXd out(seqs.front().dim(), cols);
  Eigen::Index off = 0;
  for (const auto& s : seqs) {
    out.middleCols(off, s.size()) = s.vectors;
    off += s.size();
  }
  return out;
}

struct FittedPipeline {
  ModelTag model = ModelTag::patch_gmm;
  Pooling pooling = Pooling::mean;
  std::optional<AutoEncoder> ae;
  std::optional<QuantileAutoEncoder> qae;
  std::optional<RndPair> rnd;
  std::optional<FeatureStats> stats;
  std::optional<PcaModel> pca;
  std::optional<GmmModel> gmm;
  std::optional<GmmConfig> gmm_config;
  TrainConfig train_config;
  std::uint64_t seed = 0;

  /// Representation fed to the density model (after network, stats and PCA).
  Eigen::MatrixXd density_input(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd f;
    switch (model) {
      case ModelTag::one_lamp: f = lamp_features(ae->encoder, x, LampMode::one_lamp); break;
      case ModelTag::lamp: f = lamp_features(ae->encoder, x, LampMode::lamp); break;
      case ModelTag::q_lamp: f = lamp_features(qae->encoder, x, LampMode::lamp); break;
      default: f = x;
    }
    if (stats) f = ((f.colwise() - stats->mean).array().colwise() / stats->std.array()).matrix();
    if (pca) f = pca->transform(f);
    return f;
  }

  /// Per-window anomaly scores (higher = more anomalous).
  Eigen::VectorXd window_scores(const FeatureSequence& seq) const {
    require(seq.size() > 0, "score: empty feature sequence");
    switch (model) {
      case ModelTag::ae: return mse_scores(*ae, seq.vectors);
      case ModelTag::rnd: return rnd_scores(*rnd, seq.vectors);
      default: return gmm_nll(*gmm, density_input(seq.vectors));
    }
  }

  double score(const FeatureSequence& seq) const { return pool(window_scores(seq), pooling); }
  double score(const FeatureSequence& seq, Pooling p) const { return pool(window_scores(seq), p); }
};

/// Stage 1 of fitting: trains the network (if any), feature statistics and
/// PCA. Returns the pipeline without its mixture plus the density-model input
/// for the training set, so several mixtures can share one front end.
inline std::pair<FittedPipeline, Eigen::MatrixXd> fit_front_end(
    const PipelineConfig& cfg, std::span<const FeatureSequence> train_set, std::uint64_t seed) {
  require(!train_set.empty(), "fit_pipeline: empty training set");
  FittedPipeline fp;
  fp.model = cfg.model;
  fp.pooling = cfg.pooling;
  fp.seed = seed;
  fp.train_config = cfg.train;
  fp.train_config.seed = derive_seed(seed, "train");
  const Eigen::MatrixXd x = concat_columns(train_set);
  const Eigen::Index dim = x.rows();

  switch (cfg.model) {
    case ModelTag::ae:
    case ModelTag::one_lamp:
    case ModelTag::lamp:
      fp.ae = AutoEncoder::create(fp.train_config.seed, dim);
      train(*fp.ae, x, fp.train_config);
      break;
    case ModelTag::q_lamp:
      fp.qae = QuantileAutoEncoder::create(fp.train_config.seed, dim);
      train(*fp.qae, x, fp.train_config);
      break;
    case ModelTag::rnd:
      fp.rnd = RndPair::create(fp.train_config.seed, dim);
      train(*fp.rnd, x, fp.train_config);
      break;
    case ModelTag::patch_gmm:
    case ModelTag::external_gmm:
      break;
  }
  if (!uses_gmm(cfg.model)) return {std::move(fp), Eigen::MatrixXd()};

  Eigen::MatrixXd f = fp.density_input(x);
  if (cfg.model == ModelTag::external_gmm) {
    FeatureSequence all;
    all.vectors = std::move(f);
    fp.stats = fit_stats(std::span<const FeatureSequence>(&all, 1));
    f = fp.density_input(x);
  }
  if (cfg.pca_enabled()) {
    fp.pca = pca_fit(f, cfg.pca_retain);
    f = fp.pca->transform(f);
  }
  return {std::move(fp), std::move(f)};
}

/// Stage 2: fits the mixture on the density-model input.
inline void fit_density(FittedPipeline& fp, const Eigen::MatrixXd& density_train,
                        const GmmConfig& gmm) {
  fp.gmm_config = gmm;
  fp.gmm = gmm_fit_em(density_train, gmm).model;
}

/// Fits the configured pipeline on normal-only training sequences.
inline FittedPipeline fit_pipeline(const PipelineConfig& cfg, std::span<const FeatureSequence> train_set,
                                   std::uint64_t seed) {
  auto [fp, f] = fit_front_end(cfg, train_set, seed);
  if (uses_gmm(cfg.model)) fit_density(fp, f, cfg.effective_gmm(derive_seed(seed, "gmm")));
  return std::move(fp);
}

// ---------------------------------------------------------------------------
// Persistence: one JSON document per fitted pipeline.

inline nlohmann::json to_json(const FittedPipeline& fp) {
  nlohmann::json j = {{"model", to_string(fp.model)},
                      {"pooling", to_string(fp.pooling)},
                      {"seed", fp.seed}};
  if (fp.ae) j["network"] = to_json(*fp.ae, fp.train_config);
  if (fp.qae) j["network"] = to_json(*fp.qae, fp.train_config);
  if (fp.rnd) j["network"] = to_json(*fp.rnd, fp.train_config);
  if (fp.stats) {
    const auto& s = *fp.stats;
    j["stats"] = {{"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
                  {"std", std::vector<double>(s.std.data(), s.std.data() + s.std.size())}};
  }
  if (fp.gmm) {
    nlohmann::json g = to_json(*fp.gmm);
    g["pca"] = fp.pca ? to_json(*fp.pca) : nlohmann::json(nullptr);
    g["seed"] = fp.gmm_config ? fp.gmm_config->seed : 0;
    g["config"] = fp.gmm_config ? nlohmann::json(*fp.gmm_config) : nlohmann::json(nullptr);
    j["gmm"] = std::move(g);
  }
  return j;
}

inline FittedPipeline fitted_pipeline_from_json(const nlohmann::json& j) {
  try {
    FittedPipeline fp;
    fp.model = model_tag_from_string(j.at("model").get<std::string>());
    fp.pooling = pooling_from_string(j.value("pooling", "mean"));
    fp.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("network")) {
      const auto& n = j.at("network");
      fp.train_config = n.at("train_config").get<TrainConfig>();
      const auto kind = n.at("kind").get<std::string>();
      if (kind == "autoencoder") fp.ae = autoencoder_from_json(n);
      else if (kind == "quantile_autoencoder") fp.qae = quantile_autoencoder_from_json(n);
      else if (kind == "rnd") fp.rnd = rnd_from_json(n);
      else throw DataError("model: unknown network kind " + kind);
    }
    if (j.contains("stats")) {
      const auto m = j.at("stats").at("mean").get<std::vector<double>>();
      const auto s = j.at("stats").at("std").get<std::vector<double>>();
      if (m.size() != s.size()) throw DataError("model: stats size mismatch");
      FeatureStats st;
      st.mean = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
      st.std = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
      fp.stats = st;
    }
    if (j.contains("gmm")) {
      const auto& g = j.at("gmm");
      fp.gmm = gmm_from_json(g);
      if (!g.at("pca").is_null()) fp.pca = pca_from_json(g.at("pca"));
      if (!g.at("config").is_null()) fp.gmm_config = g.at("config").get<GmmConfig>();
    }
    const bool ok = (fp.model == ModelTag::ae && fp.ae) || (fp.model == ModelTag::rnd && fp.rnd) ||
                    ((fp.model == ModelTag::one_lamp || fp.model == ModelTag::lamp) && fp.ae && fp.gmm) ||
                    (fp.model == ModelTag::q_lamp && fp.qae && fp.gmm) ||
                    ((fp.model == ModelTag::patch_gmm || fp.model == ModelTag::external_gmm) && fp.gmm);
    if (!ok) throw DataError("model: components missing for model " + to_string(fp.model));
    if (fp.pca && fp.gmm && fp.pca->output_dim() != fp.gmm->dim())
      throw DataError("model: PCA output does not match GMM dimension");
    return fp;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("model: ") + e.what());
  }
}

}  // namespace asd
