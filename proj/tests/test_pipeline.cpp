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

#include <gtest/gtest.h>

#include <filesystem>

#include "asd/dataset.hpp"
#include "asd/pipeline.hpp"
#include "fixtures.hpp"

namespace {

using namespace asd;
using asd::testing::uniform_matrix;
namespace fs = std::filesystem;

std::vector<FeatureSequence> random_sequences(std::uint64_t seed, int n, Eigen::Index dim, Eigen::Index windows,
                                              double shift = 0.0) {
  Rng rng(seed);
  std::vector<FeatureSequence> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].vectors.resize(dim, windows);
    for (Eigen::Index c = 0; c < windows; ++c)
      for (Eigen::Index r = 0; r < dim; ++r) out[i].vectors(r, c) = 0.5 + 0.1 * normal(rng) + shift;
    out[i].source_id = "seq" + std::to_string(i);
  }
  return out;
}

PipelineConfig small_config(ModelTag tag) {
  PipelineConfig c;
  c.model = tag;
  c.train.epochs = 3;
  c.train.batch_size = 16;
  c.gmm_k = 2;
  return c;
}

TEST(PipelineConfig, Defaults) {
  EXPECT_EQ(default_gmm_k(ModelTag::lamp), 42);
  EXPECT_EQ(default_gmm_k(ModelTag::q_lamp), 42);
  EXPECT_EQ(default_gmm_k(ModelTag::one_lamp), 42);
  EXPECT_EQ(default_gmm_k(ModelTag::patch_gmm), 20);
  EXPECT_EQ(default_gmm_k(ModelTag::external_gmm), 20);
  PipelineConfig c;
  EXPECT_FALSE(c.pca_enabled());
  c.model = ModelTag::external_gmm;
  EXPECT_TRUE(c.pca_enabled());
  c.use_pca = false;
  EXPECT_FALSE(c.pca_enabled());
  const auto g = c.effective_gmm(77);
  EXPECT_EQ(g.k, 20);
  EXPECT_EQ(g.seed, 77u);
}

TEST(PipelineConfig, TagNamesRoundTrip) {
  for (auto t : {ModelTag::ae, ModelTag::one_lamp, ModelTag::lamp, ModelTag::q_lamp, ModelTag::rnd,
                 ModelTag::patch_gmm, ModelTag::external_gmm})
    EXPECT_EQ(model_tag_from_string(to_string(t)), t);
  EXPECT_THROW(model_tag_from_string("vae"), ConfigError);
}

TEST(PipelineConfig, FvecPathMirrorsLayout) {
  EXPECT_EQ(fvec_path_for("/feat", "0dB/fan/id_00/normal/a.wav"), fs::path("/feat/0dB/fan/id_00/normal/a.fvec"));
}

class EveryModel : public ::testing::TestWithParam<ModelTag> {};

TEST_P(EveryModel, FitScorePersist) {
  const auto tag = GetParam();
  const Eigen::Index dim = tag == ModelTag::external_gmm ? 8 : 320;
  const auto train_set = random_sequences(1, 6, dim, 19);
  auto cfg = small_config(tag);
  const auto fp = fit_pipeline(cfg, train_set, 3);
  EXPECT_EQ(fp.model, tag);

  const auto probe = random_sequences(2, 2, dim, 19);
  const auto far = random_sequences(2, 2, dim, 19, 0.4);
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const auto w = fp.window_scores(probe[i]);
    ASSERT_EQ(w.size(), 19);
    EXPECT_TRUE(w.allFinite());
    EXPECT_DOUBLE_EQ(fp.score(probe[i], Pooling::sum), w.sum());
    EXPECT_GT(fp.score(far[i]), fp.score(probe[i])) << to_string(tag);
  }

  const auto text = to_json(fp).dump();
  const auto back = fitted_pipeline_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(to_json(back).dump(), text);
  for (const auto& s : probe) EXPECT_EQ(back.window_scores(s), fp.window_scores(s));

  // same seed, same model
  EXPECT_EQ(to_json(fit_pipeline(cfg, train_set, 3)).dump(), text);
}

INSTANTIATE_TEST_SUITE_P(Tags, EveryModel,
                         ::testing::Values(ModelTag::ae, ModelTag::one_lamp, ModelTag::lamp, ModelTag::q_lamp,
                                           ModelTag::rnd, ModelTag::patch_gmm, ModelTag::external_gmm),
                         [](const auto& info) { return to_string(info.param); });

TEST(Pipeline, LampFeatureDimsReachTheMixture) {
  const auto train_set = random_sequences(4, 4, 320, 19);
  EXPECT_EQ(fit_pipeline(small_config(ModelTag::lamp), train_set, 0).gmm->dim(), 112);
  EXPECT_EQ(fit_pipeline(small_config(ModelTag::one_lamp), train_set, 0).gmm->dim(), 16);
  EXPECT_EQ(fit_pipeline(small_config(ModelTag::q_lamp), train_set, 0).gmm->dim(), 112);
  EXPECT_EQ(fit_pipeline(small_config(ModelTag::patch_gmm), train_set, 0).gmm->dim(), 320);
}

TEST(Pipeline, ExternalStandardizesThenReducesDimension) {
  // rank-2 data in 10 dims: PCA keeps few components
  Rng rng(5);
  std::vector<FeatureSequence> train_set(4);
  for (auto& s : train_set) {
    s.vectors.resize(10, 30);
    for (Eigen::Index c = 0; c < 30; ++c) {
      const double a = normal(rng), b = normal(rng);
      for (Eigen::Index r = 0; r < 10; ++r) s.vectors(r, c) = (r + 1) * a + (r % 3) * b + 1e-4 * normal(rng);
    }
  }
  auto cfg = small_config(ModelTag::external_gmm);
  const auto fp = fit_pipeline(cfg, train_set, 0);
  ASSERT_TRUE(fp.stats && fp.pca);
  EXPECT_LE(fp.pca->output_dim(), 3);
  EXPECT_EQ(fp.gmm->dim(), fp.pca->output_dim());

  cfg.use_pca = false;
  const auto plain = fit_pipeline(cfg, train_set, 0);
  EXPECT_FALSE(plain.pca);
  EXPECT_EQ(plain.gmm->dim(), 10);
}

TEST(Pipeline, EmptyTrainingSetRejected) {
  std::vector<FeatureSequence> none;
  EXPECT_THROW(fit_pipeline(small_config(ModelTag::patch_gmm), none, 0), InvalidInput);
}

TEST(Pipeline, MissingComponentsRejectedOnLoad) {
  const auto train_set = random_sequences(1, 3, 320, 19);
  auto j = to_json(fit_pipeline(small_config(ModelTag::lamp), train_set, 0));
  auto no_gmm = j;
  no_gmm.erase("gmm");
  EXPECT_THROW(fitted_pipeline_from_json(no_gmm), DataError);
  auto no_net = j;
  no_net.erase("network");
  EXPECT_THROW(fitted_pipeline_from_json(no_net), DataError);
  auto bad_tag = j;
  bad_tag["model"] = "nonsense";
  EXPECT_THROW(fitted_pipeline_from_json(bad_tag), DataError);
  EXPECT_THROW(fitted_pipeline_from_json(nlohmann::json::object()), DataError);
}

TEST(Pipeline, PcaGmmMismatchRejected) {
  std::vector<FeatureSequence> train_set(1);
  Rng rng(9);
  train_set[0].vectors = uniform_matrix(6, 80, rng);
  auto j = to_json(fit_pipeline(small_config(ModelTag::external_gmm), train_set, 0));
  Rng other(10);
  j["gmm"]["pca"] = to_json(pca_fit(uniform_matrix(40, 50, other), 1.0));
  EXPECT_THROW(fitted_pipeline_from_json(j), DataError);
}

TEST(Pipeline, FeaturizesWaveformsByModel) {
  SynthConfig sc;
  sc.duration_s = 10.0;
  const auto w = synth_recording(sc, false, 0).wave;
  PipelineConfig c;
  const auto fb = mel_filterbank(c.mel);
  const auto patches = featurize_waveform(c, w, fb);
  EXPECT_EQ(patches.dim(), 320);
  EXPECT_EQ(patches.size(), num_windows(313, 5, 3));
  EXPECT_GE(patches.vectors.minCoeff(), 0.0);
  EXPECT_LE(patches.vectors.maxCoeff(), 1.0);

  c.model = ModelTag::external_gmm;
  const auto means = featurize_waveform(c, w, fb);
  EXPECT_EQ(means.dim(), 64);
  EXPECT_EQ(means.size(), 20);
}

TEST(Pipeline, ExternalFeaturesReadFromMirrorTree) {
  const auto dir = asd::testing::scratch_path("asd_test_pipeline_fvec");
  fs::remove_all(dir);
  FeatureSequence s;
  s.vectors = Eigen::MatrixXd::Constant(5, 3, 0.25);
  write_fvec(fvec_path_for(dir, "0dB/fan/id_00/normal/x.wav"), s, FvecManifest{});
  DatasetManifest m;
  m.root = dir;
  RecordingReader reader(m);
  PipelineConfig c;
  c.model = ModelTag::external_gmm;
  c.feature_source = FeatureSource::fvec;
  c.features_dir = dir;
  const RecordingMeta meta{"0dB/fan/id_00/normal/x.wav", "fan", 0, 0, Label::normal};
  const auto got = featurize_recording(c, reader, meta, mel_filterbank(c.mel));
  EXPECT_EQ(got.vectors, s.vectors);
  EXPECT_EQ(got.source_id, meta.path);
  const RecordingMeta missing{"0dB/fan/id_00/normal/y.wav", "fan", 0, 0, Label::normal};
  EXPECT_THROW(featurize_recording(c, reader, missing, mel_filterbank(c.mel)), DataError);
  fs::remove_all(dir);
}

}  // namespace
