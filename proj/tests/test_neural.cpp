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

#include "asd/neural.hpp"
#include "fixtures.hpp"
#include "grad_check.hpp"

namespace {

using namespace asd;
using asd::testing::normal_matrix;
using asd::testing::uniform_matrix;

void zero_out(Mlp& m) {
  for (auto& l : m.layers) {
    l.weights.setZero();
    l.bias.setZero();
  }
}

TEST(Topology, EncoderDecoderChain) {
  const auto ae = AutoEncoder::create(1);
  ASSERT_EQ(ae.encoder.layers.size(), 3u);
  ASSERT_EQ(ae.decoder.layers.size(), 3u);
  const std::vector<std::pair<int, int>> enc = {{320, 64}, {64, 32}, {32, 16}};
  const std::vector<std::pair<int, int>> dec = {{16, 32}, {32, 64}, {64, 320}};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(ae.encoder.layers[i].in_dim(), enc[i].first);
    EXPECT_EQ(ae.encoder.layers[i].out_dim(), enc[i].second);
    EXPECT_EQ(ae.encoder.layers[i].activation, Activation::leaky_relu);
    EXPECT_EQ(ae.encoder.layers[i].alpha, 0.2);
    EXPECT_EQ(ae.decoder.layers[i].in_dim(), dec[i].first);
    EXPECT_EQ(ae.decoder.layers[i].out_dim(), dec[i].second);
  }
  EXPECT_EQ(ae.decoder.layers[0].activation, Activation::leaky_relu);
  EXPECT_EQ(ae.decoder.layers[1].activation, Activation::leaky_relu);
  EXPECT_EQ(ae.decoder.layers[2].activation, Activation::identity);
}

TEST(Init, GlorotBoundsAndZeroBias) {
  const auto ae = AutoEncoder::create(3);
  for (const Mlp* m : ae.trainable())
    for (const auto& l : m->layers) {
      const double bound = std::sqrt(6.0 / static_cast<double>(l.in_dim() + l.out_dim()));
      EXPECT_LE(l.weights.cwiseAbs().maxCoeff(), bound);
      EXPECT_TRUE(l.bias.isZero());
    }
  EXPECT_EQ(AutoEncoder::create(3).encoder, ae.encoder);
  EXPECT_FALSE(AutoEncoder::create(4).encoder == ae.encoder);
}

TEST(AeForward, ZeroNetworkGivesZero) {
  auto ae = AutoEncoder::create(1);
  zero_out(ae.encoder);
  zero_out(ae.decoder);
  Rng rng(2);
  const auto out = ae_forward(ae, normal_matrix(320, 1, rng).col(0));
  EXPECT_TRUE(out.reconstruction.isZero());
  ASSERT_EQ(out.activations.size(), 3u);
}

TEST(AeForward, SinglePathRouting) {
  auto ae = AutoEncoder::create(1);
  zero_out(ae.encoder);
  zero_out(ae.decoder);
  for (auto* m : {&ae.encoder, &ae.decoder})
    for (auto& l : m->layers) l.weights(0, 0) = 1.0;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(320);
  x(0) = 0.7;
  EXPECT_DOUBLE_EQ(ae_forward(ae, x).reconstruction(0), 0.7);
  x(0) = -0.5;  // negative values pass through LReLU scaled by 0.2 five times
  EXPECT_NEAR(ae_forward(ae, x).reconstruction(0), -0.5 * std::pow(0.2, 5), 1e-15);
}

TEST(AeForward, MatchesLayerByLayerOracle) {
  const auto ae = AutoEncoder::create(5);
  Rng rng(6);
  const Eigen::VectorXd x = normal_matrix(320, 1, rng).col(0);
  auto lrelu = [](Eigen::VectorXd v) {
    for (auto& e : v) e = e > 0 ? e : 0.2 * e;
    return v;
  };
  Eigen::VectorXd h = x;
  std::vector<Eigen::VectorXd> acts;
  for (const auto& l : ae.encoder.layers) {
    Eigen::VectorXd z(l.out_dim());
    for (Eigen::Index i = 0; i < l.out_dim(); ++i) {
      double s = l.bias(i);
      for (Eigen::Index j = 0; j < l.in_dim(); ++j) s += l.weights(i, j) * h(j);
      z(i) = s;
    }
    h = lrelu(z);
    acts.push_back(h);
  }
  for (std::size_t k = 0; k < ae.decoder.layers.size(); ++k) {
    const auto& l = ae.decoder.layers[k];
    Eigen::VectorXd z = l.weights * h + l.bias;
    h = k + 1 < ae.decoder.layers.size() ? lrelu(z) : z;
  }
  const auto out = ae_forward(ae, x);
  EXPECT_LT((out.reconstruction - h).cwiseAbs().maxCoeff(), 1e-9);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LT((out.activations[i] - acts[i]).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(AeForward, DimensionMismatch) {
  const auto ae = AutoEncoder::create(1);
  EXPECT_THROW(ae_forward(ae, Eigen::VectorXd::Zero(319)), InvalidInput);
  EXPECT_THROW(mse_score(ae, Eigen::VectorXd::Zero(10)), InvalidInput);
}

TEST(MseScore, Examples) {
  auto ae = AutoEncoder::create(1);
  zero_out(ae.encoder);
  zero_out(ae.decoder);
  EXPECT_DOUBLE_EQ(mse_score(ae, Eigen::VectorXd::Ones(320)), 1.0);
  EXPECT_DOUBLE_EQ(mse_score(ae, Eigen::VectorXd::Zero(320)), 0.0);
  EXPECT_DOUBLE_EQ(mse_score(ae, Eigen::VectorXd::Constant(320, 2.0)), 4.0);  // residual x2 -> score x4
}

TEST(Pinball, Examples) {
  EXPECT_EQ(pinball_loss(0.3, 1.5, 1.5), 0.0);
  EXPECT_DOUBLE_EQ(pinball_loss(0.5, 1.0, 0.0), 0.5);
  EXPECT_NEAR(pinball_loss(0.9, 0.0, 1.0), 0.1, 1e-15);
  EXPECT_NEAR(pinball_loss(0.1, 0.0, 1.0), 0.9, 1e-15);
  EXPECT_THROW(pinball_loss(0.0, 1, 1), InvalidInput);
  EXPECT_THROW(pinball_loss(1.0, 1, 1), InvalidInput);
  EXPECT_THROW(pinball_loss(-0.2, 1, 1), InvalidInput);
}

TEST(Pinball, BatchLossMatchesScalarFormula) {
  const auto m = QuantileAutoEncoder::create(2, 12);
  Rng rng(3);
  const Eigen::MatrixXd x = normal_matrix(12, 5, rng);
  const auto p = m.predict(x);
  double expected = 0.0;
  for (std::size_t h = 0; h < 3; ++h) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += pinball_loss(kQuantiles[h], x.data()[i], p[h].data()[i]);
    expected += s / static_cast<double>(x.size());
  }
  EXPECT_NEAR(m.batch_loss(x, nullptr), expected, 1e-12);
}

TEST(Gradients, AutoEncoderMatchesFiniteDifferences) {
  Rng rng(10);
  for (int trial = 0; trial < 3; ++trial) {
    const auto ae = AutoEncoder::create(100 + trial);
    const auto r = asd::testing::grad_check(ae, uniform_matrix(320, 10, rng), 1e-5, rng);
    EXPECT_LT(r.max_rel_error, 1e-3);
    EXPECT_GT(r.checked, r.skipped);
  }
}

TEST(Gradients, QuantileHeadsMatchFiniteDifferences) {
  Rng rng(11);
  const auto m = QuantileAutoEncoder::create(7);
  const auto r = asd::testing::grad_check(m, uniform_matrix(320, 10, rng), 1e-5, rng);
  EXPECT_LT(r.max_rel_error, 1e-3);
  EXPECT_GT(r.checked, r.skipped);
}

TEST(Gradients, RndPredictorMatchesFiniteDifferences) {
  Rng rng(12);
  const auto p = RndPair::create(8);
  const auto r = asd::testing::grad_check(p, uniform_matrix(320, 10, rng), 1e-5, rng);
  EXPECT_LT(r.max_rel_error, 1e-3);
  EXPECT_GT(r.checked, r.skipped);
}

TEST(Regularization, PureDecayShrinksNorms) {
  // With zero data gradient the update is plain weight decay.
  auto ae = AutoEncoder::create(1, 8);
  const double l2 = 0.1, lr = 0.01;
  double prev = ae.encoder.weight_sq_norm() + ae.decoder.weight_sq_norm();
  for (int step = 0; step < 20; ++step) {
    for (Mlp* m : ae.trainable())
      for (auto& l : m->layers) l.weights -= lr * l2 * l.weights;
    const double now = ae.encoder.weight_sq_norm() + ae.decoder.weight_sq_norm();
    EXPECT_LT(now, prev);
    prev = now;
  }
}

TEST(Regularization, TotalLossAddsHalfL2) {
  const auto ae = AutoEncoder::create(1, 8);
  Rng rng(1);
  const Eigen::MatrixXd x = normal_matrix(8, 4, rng);
  const double w = ae.encoder.weight_sq_norm() + ae.decoder.weight_sq_norm();
  EXPECT_NEAR(total_loss(ae, x, 0.3, nullptr), ae.batch_loss(x, nullptr) + 0.15 * w, 1e-12);
}

TEST(Training, MemorizesRepeatedVector) {
  const auto data = asd::testing::memorization_set(1);
  auto ae = AutoEncoder::create(1);
  TrainConfig cfg;
  cfg.seed = 1;
  const auto r = train(ae, data, cfg);
  ASSERT_EQ(r.epoch_loss.size(), 50u);
  EXPECT_LT(mse_scores(ae, data).mean(), 1e-3);
  for (std::size_t e = 6; e < r.epoch_loss.size(); ++e) EXPECT_LE(r.epoch_loss[e], r.epoch_loss[e - 1] + 1e-6);
}

TEST(Training, DeterministicGivenSeed) {
  Rng rng(4);
  const Eigen::MatrixXd data = uniform_matrix(320, 70, rng);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.seed = 9;
  auto a = AutoEncoder::create(9), b = AutoEncoder::create(9);
  const auto ra = train(a, data, cfg);
  const auto rb = train(b, data, cfg);
  EXPECT_EQ(ra.epoch_loss, rb.epoch_loss);
  EXPECT_EQ(a.encoder, b.encoder);
  EXPECT_EQ(a.decoder, b.decoder);
}

TEST(Training, DivergenceIsReported) {
  Rng rng(4);
  const Eigen::MatrixXd data = uniform_matrix(8, 16, rng) * 1e200;
  auto ae = AutoEncoder::create(1, 8);
  TrainConfig cfg;
  cfg.epochs = 2;
  try {
    train(ae, data, cfg);
    FAIL() << "expected TrainingDiverged";
  } catch (const TrainingDiverged& e) {
    EXPECT_EQ(e.epoch(), 0);
    EXPECT_EQ(e.batch(), 0);
  }
}

TEST(Training, RejectsBadInput) {
  auto ae = AutoEncoder::create(1, 8);
  TrainConfig cfg;
  EXPECT_THROW(train(ae, Eigen::MatrixXd(8, 0), cfg), InvalidInput);
  EXPECT_THROW(train(ae, Eigen::MatrixXd::Zero(9, 4), cfg), InvalidInput);
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train(ae, Eigen::MatrixXd::Zero(8, 4), cfg), InvalidInput);
}

TEST(QLamp, QuantilesOrderedAfterTraining) {
  const auto x = asd::testing::quantile_regression_set(0);
  auto m = QuantileAutoEncoder::create(0);
  TrainConfig cfg;
  train(m, x, cfg);
  EXPECT_GE(asd::testing::ordered_fraction(m, x), 0.95);
}

TEST(Lamp, FeatureDimsAndOrder) {
  const auto ae = AutoEncoder::create(2);
  Rng rng(3);
  const Eigen::VectorXd x = uniform_matrix(320, 1, rng).col(0);
  const auto f1 = lamp_features(ae, x, LampMode::one_lamp);
  const auto f = lamp_features(ae, x, LampMode::lamp);
  ASSERT_EQ(f1.size(), 16);
  ASSERT_EQ(f.size(), 112);
  const auto fw = ae_forward(ae, x);
  EXPECT_EQ(f.head(64), fw.activations[0]);
  EXPECT_EQ(f.segment(64, 32), fw.activations[1]);
  EXPECT_EQ(f.tail(16), fw.activations[2]);
  EXPECT_EQ(f1, fw.activations[2]);
}

TEST(Lamp, ZeroInputZeroBiasGivesZero) {
  const auto ae = AutoEncoder::create(2);
  EXPECT_TRUE(lamp_features(ae, Eigen::VectorXd::Zero(320), LampMode::lamp).isZero());
}

TEST(Rnd, ClonedPredictorScoresZero) {
  auto p = RndPair::create(3);
  p.predictor = p.target;
  Rng rng(1);
  EXPECT_EQ(rnd_scores(p, normal_matrix(320, 5, rng)).maxCoeff(), 0.0);
  EXPECT_EQ(rnd_score(RndPair::create(3), Eigen::VectorXd::Zero(320)), 0.0);
}

TEST(Rnd, TargetFrozenAndOutOfDistributionScoresHigher) {
  double in_sum = 0.0, out_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const Eigen::MatrixXd train_x = normal_matrix(320, 256, rng);
    auto p = RndPair::create(seed);
    const Mlp target_before = p.target;
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.seed = seed;
    train(p, train_x, cfg);
    EXPECT_EQ(p.target, target_before);
    in_sum += rnd_scores(p, train_x).mean();
    out_sum += rnd_scores(p, (train_x.array() + 10.0).matrix()).mean();
  }
  EXPECT_LT(in_sum, out_sum);
}

TEST(Persistence, RoundTripsAndValidatesShapes) {
  TrainConfig cfg;
  cfg.seed = 4;
  const auto ae = AutoEncoder::create(4);
  const auto back = autoencoder_from_json(nlohmann::json::parse(to_json(ae, cfg).dump()));
  EXPECT_EQ(back.encoder, ae.encoder);
  EXPECT_EQ(back.decoder, ae.decoder);

  const auto q = QuantileAutoEncoder::create(4);
  const auto qb = quantile_autoencoder_from_json(to_json(q, cfg));
  for (int h = 0; h < 3; ++h) EXPECT_EQ(qb.heads[h], q.heads[h]);

  const auto p = RndPair::create(4);
  const auto pb = rnd_from_json(to_json(p, cfg));
  EXPECT_EQ(pb.target, p.target);
  EXPECT_EQ(pb.predictor, p.predictor);

  auto bad = to_json(ae, cfg);
  bad["stacks"]["decoder"] = to_json(AutoEncoder::create(1, 8), cfg)["stacks"]["decoder"];
  EXPECT_THROW(autoencoder_from_json(bad), DataError);
  EXPECT_THROW(rnd_from_json(to_json(ae, cfg)), DataError);
}

TEST(TrainConfigJson, DefaultsAndRoundTrip) {
  const TrainConfig d = nlohmann::json::object().get<TrainConfig>();
  EXPECT_EQ(d.batch_size, 128);
  EXPECT_EQ(d.epochs, 50);
  EXPECT_EQ(d.learning_rate, 0.002);
  EXPECT_EQ(d.l2, 1e-5);
  TrainConfig c{16, 3, 0.01, 0.0, 7};
  const auto back = nlohmann::json(c).get<TrainConfig>();
  EXPECT_EQ(back.batch_size, 16);
  EXPECT_EQ(back.seed, 7u);
}

}  // namespace
