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
#include <set>

#include "asd/evaluation.hpp"
#include "fixtures.hpp"

namespace {

using namespace asd;
namespace fs = std::filesystem;

double brute_force_auc(const std::vector<double>& normals, const std::vector<double>& anomalies) {
  double wins = 0.0;
  for (double a : anomalies)
    for (double n : normals) wins += a > n ? 1.0 : (a == n ? 0.5 : 0.0);
  return wins / static_cast<double>(normals.size() * anomalies.size());
}

TEST(Auc, Examples) {
  EXPECT_EQ(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<double>{0.3, 0.4}), 1.0);
  EXPECT_EQ(roc_auc(std::vector<double>{5, 5, 5}, std::vector<double>{5, 5}), 0.5);
  EXPECT_EQ(roc_auc(std::vector<double>{1, 2}, std::vector<double>{2, 3}), 0.875);
  EXPECT_EQ(roc_auc(std::vector<double>{0.3, 0.4}, std::vector<double>{0.1, 0.2}), 0.0);
}

TEST(Auc, SingleClassAndNonFiniteRejected) {
  EXPECT_THROW(roc_auc(std::vector<double>{1, 2}, std::vector<double>{}), InvalidInput);
  EXPECT_THROW(roc_auc(std::vector<double>{}, std::vector<double>{1}), InvalidInput);
  EXPECT_THROW(roc_auc(std::vector<double>{1, std::nan("")}, std::vector<double>{1}), InvalidInput);
}

std::pair<std::vector<double>, std::vector<double>> random_case(Rng& rng) {
  const auto n = 2 + uniform_index(rng, 199);  // total size <= 200
  const auto a = 1 + uniform_index(rng, n - 1);
  const bool ties = uniform_index(rng, 2) == 0;
  auto draw = [&] { return ties ? static_cast<double>(uniform_index(rng, 8)) : normal(rng); };
  std::vector<double> normals, anomalies;
  for (std::uint64_t i = 0; i < n - a; ++i) normals.push_back(draw());
  for (std::uint64_t i = 0; i < a; ++i) anomalies.push_back(draw() + 0.3);
  return {normals, anomalies};
}

TEST(Auc, EqualsBruteForceOracleExactly) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto [n, a] = random_case(rng);
    ASSERT_EQ(roc_auc(n, a), brute_force_auc(n, a)) << "trial " << trial;
  }
}

TEST(Auc, InvariantUnderMonotoneTransforms) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto [n, a] = random_case(rng);
    const double base = roc_auc(n, a);
    for (auto f : {+[](double x) { return std::exp(x); }, +[](double x) { return 3.0 * x - 7.0; },
                   +[](double x) { return x * x * x; }}) {
      std::vector<double> tn, ta;
      for (double x : n) tn.push_back(f(x));
      for (double x : a) ta.push_back(f(x));
      ASSERT_EQ(roc_auc(tn, ta), base);
    }
  }
}

TEST(Auc, ComplementSymmetry) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto [n, a] = random_case(rng);
    const double base = roc_auc(n, a);
    for (auto& x : n) x = -x;
    for (auto& x : a) x = -x;
    ASSERT_NEAR(roc_auc(n, a), 1.0 - base, 1e-15);
  }
}

std::vector<RecordingMeta> fake_recordings(int normals, int anomalies) {
  std::vector<RecordingMeta> out;
  for (int i = 0; i < normals; ++i)
    out.push_back({fmt::format("6dB/fan/id_00/normal/{:03d}.wav", i), "fan", 0, 6, Label::normal});
  for (int i = 0; i < anomalies; ++i)
    out.push_back({fmt::format("6dB/fan/id_00/abnormal/{:03d}.wav", i), "fan", 0, 6, Label::anomalous});
  return out;
}

void expect_split_invariants(const EvalSplit& s, std::size_t anomalies) {
  std::set<std::string> train, test;
  std::size_t test_anom = 0;
  for (const auto& r : s.train) {
    EXPECT_EQ(r.label, Label::normal);
    train.insert(r.path);
  }
  for (const auto& r : s.test) {
    test.insert(r.path);
    test_anom += r.label == Label::anomalous;
  }
  EXPECT_EQ(test_anom, anomalies);
  EXPECT_EQ(s.test.size(), 2 * anomalies);
  for (const auto& p : train) EXPECT_FALSE(test.contains(p));
}

TEST(Split, Counts) {
  const auto recs = fake_recordings(100, 30);
  const auto s = make_split(recs, 1);
  EXPECT_EQ(s.train.size(), 70u);
  EXPECT_EQ(s.test.size(), 60u);
  expect_split_invariants(s, 30);
}

TEST(Split, SeededAndOrderIndependent) {
  auto recs = fake_recordings(60, 20);
  const auto a = make_split(recs, 5);
  std::reverse(recs.begin(), recs.end());
  const auto b = make_split(recs, 5);
  ASSERT_EQ(a.train.size(), b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_EQ(a.train[i].path, b.train[i].path);
  std::set<std::set<std::string>> distinct;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = make_split(recs, seed);
    expect_split_invariants(s, 20);
    std::set<std::string> tn;
    for (const auto& r : s.test)
      if (r.label == Label::normal) tn.insert(r.path);
    distinct.insert(tn);
  }
  EXPECT_EQ(distinct.size(), 5u);
}

TEST(Split, InsufficientData) {
  EXPECT_THROW(make_split(fake_recordings(10, 6), 0), InvalidInput);
  EXPECT_THROW(make_split(fake_recordings(10, 1), 0), InvalidInput);
}

TEST(Report, CsvAndAggregates) {
  EvalReport r;
  const ComboKey k{"fan", 0, -6};
  r.cells.push_back({k, "patch_gmm", 1, 0.8, {}});
  r.cells.push_back({k, "patch_gmm", 0, 0.6, {}});
  r.cells.push_back({k, "patch_gmm", 2, std::nullopt, "boom"});
  r.sort();
  EXPECT_EQ(r.to_csv(),
            "machine_type,machine_id,snr_db,model,seed,auc\n"
            "fan,0,-6,patch_gmm,0,0.600000\n"
            "fan,0,-6,patch_gmm,1,0.800000\n"
            "fan,0,-6,patch_gmm,2,failed\n");
  const auto agg = r.aggregates();
  ASSERT_EQ(agg.size(), 1u);
  EXPECT_NEAR(agg[0].mean_auc, 0.7, 1e-15);
  EXPECT_NEAR(agg[0].std_auc, 0.1, 1e-15);
  EXPECT_EQ(agg[0].n_ok, 2);
  EXPECT_FALSE(agg[0].complete());
  EXPECT_FALSE(r.complete());
  const auto j = r.to_json();
  EXPECT_EQ(j.at("cells")[2].at("error"), "boom");
  EXPECT_EQ(j.at("aggregates")[0].at("complete"), false);
}

TEST(Seeds, SplitSeedIgnoresModelAndCombosAreIndependent) {
  const ComboKey a{"fan", 0, 6}, b{"fan", 2, 6};
  EXPECT_NE(split_seed(0, a), split_seed(0, b));
  EXPECT_NE(split_seed(0, a), split_seed(1, a));
  EXPECT_NE(model_seed(0, a, ModelTag::ae), model_seed(0, a, ModelTag::patch_gmm));
}

TEST(ParallelFor, PropagatesExceptions) {
  std::atomic<int> ran{0};
  EXPECT_THROW(parallel_for(50, 4,
                            [&](std::size_t i) {
                              ++ran;
                              if (i == 7) throw DataError("bad");
                            }),
               DataError);
  std::vector<int> out(100, 0);
  parallel_for(100, 3, [&](std::size_t i) { out[i] = static_cast<int>(i); });
  for (int i = 0; i < 100; ++i) EXPECT_EQ(out[i], i);
}

class SmallBenchmark : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = asd::testing::scratch_path("asd_test_eval_bench");
    fs::remove_all(root_);
    SynthConfig sc;
    sc.n_normal = 12;
    sc.n_anomalous = 4;
    sc.duration_s = 2.0;
    sc.snr_db = {6};
    sc.machine_ids = {0, 1};
    manifest_ = generate_benchmark(sc, root_);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }
  static inline fs::path root_;
  static inline DatasetManifest manifest_;
};

TEST_F(SmallBenchmark, ExperimentShapeAndDeterminism) {
  PipelineConfig cfg;
  cfg.model = ModelTag::patch_gmm;
  cfg.gmm_k = 3;
  const std::vector<std::uint64_t> seeds = {0, 1, 2};
  const auto a = run_experiment(cfg, manifest_, seeds, 2);
  const auto b = run_experiment(cfg, manifest_, seeds, 1);
  EXPECT_EQ(a.cells.size(), 6u);
  EXPECT_TRUE(a.complete());
  EXPECT_EQ(a.to_csv(), b.to_csv());
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  for (const auto& row : a.aggregates()) {
    std::vector<double> v;
    for (const auto& c : a.cells)
      if (c.combo == row.combo) v.push_back(*c.auc);
    const auto [m, s] = mean_std(v);
    EXPECT_EQ(row.mean_auc, m);
    EXPECT_EQ(row.std_auc, s);
    EXPECT_GE(row.std_auc, 0.0);
  }
  for (const auto& c : a.cells) {
    EXPECT_GE(*c.auc, 0.0);
    EXPECT_LE(*c.auc, 1.0);
  }
}

TEST_F(SmallBenchmark, FailedCellIsReportedNotDropped) {
  DatasetManifest m = manifest_;
  // leave id 1 with too few normals for a balanced split
  std::erase_if(m.recordings, [](const RecordingMeta& r) {
    return r.machine_id == 1 && r.label == Label::normal && r.path.back() != '0';
  });
  PipelineConfig cfg;
  cfg.gmm_k = 2;
  const std::vector<std::uint64_t> seeds = {0, 1};
  const auto r = run_experiment(cfg, m, seeds);
  EXPECT_FALSE(r.complete());
  int failed = 0;
  for (const auto& c : r.cells) failed += !c.auc;
  EXPECT_EQ(failed, 2);
  EXPECT_NE(r.to_csv().find("failed"), std::string::npos);
}

TEST_F(SmallBenchmark, SweepGridShape) {
  PipelineConfig cfg;
  cfg.model = ModelTag::external_gmm;
  const std::vector<int> ks = {1, 2, 3};
  const std::vector<CovType> covs = {CovType::diagonal, CovType::full};
  const std::vector<std::uint64_t> seeds = {0};
  const auto t = sweep_gmm(cfg, manifest_, ks, covs, seeds);
  ASSERT_EQ(t.rows.size(), 6u);
  EXPECT_TRUE(t.errors.empty());
  EXPECT_EQ(t.to_csv().substr(0, t.to_csv().find('\n')), "k,cov_type,mean_auc,std_auc");
  for (const auto& r : t.rows) EXPECT_EQ(r.n_failed, 0);
}

TEST(SingleGaussian, DiagonalAndFullAgreeOnIsotropicData) {
  Rng rng(9);
  const Eigen::MatrixXd train = asd::testing::normal_matrix(4, 2000, rng);
  const Eigen::MatrixXd normals = asd::testing::normal_matrix(4, 200, rng);
  const Eigen::MatrixXd anomalies = (asd::testing::normal_matrix(4, 200, rng).array() * 1.5).matrix();
  std::vector<double> auc;
  for (auto ct : {CovType::diagonal, CovType::full}) {
    GmmConfig cfg;
    cfg.k = 1;
    cfg.cov_type = ct;
    const auto g = gmm_fit_em(train, cfg).model;
    const Eigen::VectorXd sn = gmm_nll(g, normals), sa = gmm_nll(g, anomalies);
    auc.push_back(roc_auc(std::vector<double>(sn.data(), sn.data() + sn.size()),
                          std::vector<double>(sa.data(), sa.data() + sa.size())));
  }
  EXPECT_NEAR(auc[0], auc[1], 0.02);
}

}  // namespace
