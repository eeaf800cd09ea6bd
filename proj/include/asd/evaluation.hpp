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

// Evaluation protocol: ROC-AUC, balanced normal-only-training splits,
// multi-seed experiment cells, report aggregation and the GMM sweep.

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "asd/dataset.hpp"
#include "asd/error.hpp"
#include "asd/log.hpp"
#include "asd/pipeline.hpp"
#include "asd/random.hpp"

namespace asd {

struct ScoredRecording {
  std::string recording_id;
  Label label = Label::normal;
  double score = 0.0;
};

/// Rank-based AUC with midranks for ties: P(anomalous > normal) + 0.5 P(tie).
inline double roc_auc(std::span<const ScoredRecording> scored) {
  std::vector<std::pair<double, Label>> v;
  v.reserve(scored.size());
  std::size_t n_anom = 0;
  for (const auto& s : scored) {
    require(std::isfinite(s.score), "roc_auc: non-finite score for " + s.recording_id);
    v.emplace_back(s.score, s.label);
    n_anom += s.label == Label::anomalous;
  }
  const std::size_t n_norm = v.size() - n_anom;
  require(n_anom > 0 && n_norm > 0, "roc_auc: need both normal and anomalous recordings");
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum = 0.0;  // sum of 1-based midranks of anomalous scores
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    std::size_t anom_in_tie = 0;
    while (j < v.size() && v[j].first == v[i].first) anom_in_tie += v[j++].second == Label::anomalous;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += midrank * static_cast<double>(anom_in_tie);
    i = j;
  }
  const double a = static_cast<double>(n_anom), n = static_cast<double>(n_norm);
  return (rank_sum - a * (a + 1.0) / 2.0) / (a * n);
}

inline double roc_auc(std::span<const double> normal_scores, std::span<const double> anomalous_scores) {
  std::vector<ScoredRecording> s;
  for (double x : normal_scores) s.push_back({"", Label::normal, x});
  for (double x : anomalous_scores) s.push_back({"", Label::anomalous, x});
  return roc_auc(s);
}

struct EvalSplit {
  std::vector<RecordingMeta> train;  // normal only
  std::vector<RecordingMeta> test;   // balanced
  std::uint64_t seed = 0;
};

/// Draws as many normals as there are anomalies into the test set; the
/// remaining normals form the training set.
inline EvalSplit make_split(std::span<const RecordingMeta> recordings, std::uint64_t seed) {
  std::vector<RecordingMeta> normals, anomalies;
  for (const auto& r : recordings) (r.label == Label::normal ? normals : anomalies).push_back(r);
  require(anomalies.size() >= 2, "make_split: need at least 2 anomalous recordings");
  require(normals.size() >= 2 * anomalies.size(),
          fmt::format("make_split: {} normal recordings, need >= {}", normals.size(),
                      2 * anomalies.size()));
  std::sort(normals.begin(), normals.end(), [](auto& a, auto& b) { return a.path < b.path; });
  std::sort(anomalies.begin(), anomalies.end(), [](auto& a, auto& b) { return a.path < b.path; });
  Rng rng(seed);
  for (std::size_t i = 0; i < anomalies.size(); ++i)
    std::swap(normals[i], normals[i + uniform_index(rng, normals.size() - i)]);

  EvalSplit s;
  s.seed = seed;
  s.test.assign(normals.begin(), normals.begin() + static_cast<std::ptrdiff_t>(anomalies.size()));
  s.test.insert(s.test.end(), anomalies.begin(), anomalies.end());
  s.train.assign(normals.begin() + static_cast<std::ptrdiff_t>(anomalies.size()), normals.end());
  return s;
}

// ---------------------------------------------------------------------------
// Reports

struct CellResult {
  ComboKey combo;
  std::string model;
  std::uint64_t seed = 0;
  std::optional<double> auc;
  std::string error;  // set when the cell failed
};

struct AggregateRow {
  ComboKey combo;
  std::string model;
  double mean_auc = 0.0;
  double std_auc = 0.0;  // population standard deviation over seeds
  int n_ok = 0;
  int n_failed = 0;
  bool complete() const { return n_failed == 0; }
};

/// Mean and population standard deviation.
inline std::pair<double, double> mean_std(std::span<const double> v) {
  if (v.empty()) return {std::nan(""), std::nan("")};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

struct EvalReport {
  std::vector<CellResult> cells;

  void sort() {
    std::sort(cells.begin(), cells.end(), [](const CellResult& a, const CellResult& b) {
      return std::tie(a.combo, a.model, a.seed) < std::tie(b.combo, b.model, b.seed);
    });
  }

  bool complete() const {
    return std::all_of(cells.begin(), cells.end(), [](const auto& c) { return c.auc.has_value(); });
  }

  std::vector<AggregateRow> aggregates() const {
    std::map<std::pair<ComboKey, std::string>, std::pair<std::vector<double>, int>> groups;
    for (const auto& c : cells) {
      auto& g = groups[{c.combo, c.model}];
      if (c.auc) g.first.push_back(*c.auc);
      else ++g.second;
    }
    std::vector<AggregateRow> out;
    for (const auto& [key, g] : groups) {
      const auto [m, s] = mean_std(g.first);
      out.push_back({key.first, key.second, m, s, static_cast<int>(g.first.size()), g.second});
    }
    return out;
  }

  std::string to_csv() const {
    std::string out = "machine_type,machine_id,snr_db,model,seed,auc\n";
    for (const auto& c : cells)
      out += fmt::format("{},{},{},{},{},{}\n", c.combo.machine_type, c.combo.machine_id,
                         c.combo.snr_string(), c.model, c.seed,
                         c.auc ? fmt::format("{:.6f}", *c.auc) : std::string("failed"));
    return out;
  }

  nlohmann::json to_json() const {
    auto snr = [](const ComboKey& k) { return k.snr_db ? nlohmann::json(*k.snr_db) : nlohmann::json(nullptr); };
    nlohmann::json cj = nlohmann::json::array(), aj = nlohmann::json::array();
    for (const auto& c : cells) {
      nlohmann::json e = {{"machine_type", c.combo.machine_type}, {"machine_id", c.combo.machine_id},
                          {"snr_db", snr(c.combo)}, {"model", c.model}, {"seed", c.seed},
                          {"auc", c.auc ? nlohmann::json(*c.auc) : nlohmann::json(nullptr)}};
      if (!c.auc) e["error"] = c.error;
      cj.push_back(std::move(e));
    }
    for (const auto& a : aggregates()) {
      aj.push_back({{"machine_type", a.combo.machine_type}, {"machine_id", a.combo.machine_id},
                    {"snr_db", snr(a.combo)}, {"model", a.model},
                    {"mean_auc", a.n_ok ? nlohmann::json(a.mean_auc) : nlohmann::json(nullptr)},
                    {"std_auc", a.n_ok ? nlohmann::json(a.std_auc) : nlohmann::json(nullptr)},
                    {"n", a.n_ok}, {"failed", a.n_failed}, {"complete", a.complete()}});
    }
    return {{"complete", complete()}, {"cells", std::move(cj)}, {"aggregates", std::move(aj)}};
  }
};

// ---------------------------------------------------------------------------
// Experiments

/// Seed for the split of one (combination, seed) cell. Independent of the model
/// so every model sees the same split.
inline std::uint64_t split_seed(std::uint64_t seed, const ComboKey& k) {
  return derive_seed(seed, k.str() + "|split");
}

inline std::uint64_t model_seed(std::uint64_t seed, const ComboKey& k, ModelTag m) {
  return derive_seed(seed, k.str() + "|" + to_string(m));
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <class F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex first_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < n;) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(first_mutex);
            if (!first) first = std::current_exception();
            next = n;  // stop handing out work
          }
        }
      });
  }
  if (first) std::rethrow_exception(first);
}

/// Feature sequences of every recording in one combination, keyed by path.
using FeatureCache = std::map<std::string, FeatureSequence>;

inline FeatureCache featurize_all(const PipelineConfig& cfg, RecordingReader& reader,
                                  std::span<const RecordingMeta> recs) {
  const MelFilterbank fb = mel_filterbank(cfg.mel);
  FeatureCache cache;
  for (const auto& r : recs) cache.emplace(r.path, featurize_recording(cfg, reader, r, fb));
  return cache;
}

/// Scores the test set of `split` with a fitted pipeline and returns the AUC.
inline double evaluate_split(const FittedPipeline& fp, const EvalSplit& split,
                             const FeatureCache& features) {
  std::vector<ScoredRecording> scored;
  for (const auto& r : split.test) scored.push_back({r.path, r.label, fp.score(features.at(r.path))});
  return roc_auc(scored);
}

inline std::vector<FeatureSequence> gather(const FeatureCache& features,
                                           std::span<const RecordingMeta> recs) {
  std::vector<FeatureSequence> out;
  for (const auto& r : recs) out.push_back(features.at(r.path));
  return out;
}

/// For every combination in the manifest and every seed: split, featurize,
/// fit on normals, score the balanced test set and compute the AUC. Failing
/// cells are kept in the report with their error.
inline EvalReport run_experiment(const PipelineConfig& cfg, const DatasetManifest& manifest,
                                 std::span<const std::uint64_t> seeds, int jobs = 1) {
  require(!seeds.empty(), "run_experiment: no seeds");
  RecordingReader reader(manifest);
  const auto combos = manifest.by_combination();
  std::vector<const std::pair<const ComboKey, std::vector<RecordingMeta>>*> items;
  for (const auto& kv : combos) items.push_back(&kv);

  std::vector<std::vector<CellResult>> results(items.size());
  const std::string tag = to_string(cfg.model);
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto& [combo, recs] = *items[i];
    auto& out = results[i];
    FeatureCache features;
    std::string front_error;
    try {
      features = featurize_all(cfg, reader, recs);
    } catch (const std::exception& e) {
      front_error = e.what();
    }
    for (auto seed : seeds) {
      CellResult cell{combo, tag, seed, std::nullopt, {}};
      if (!front_error.empty()) {
        cell.error = front_error;
      } else {
        try {
          const EvalSplit split = make_split(recs, split_seed(seed, combo));
          const auto train_set = gather(features, split.train);
          const FittedPipeline fp = fit_pipeline(cfg, train_set, model_seed(seed, combo, cfg.model));
          cell.auc = evaluate_split(fp, split, features);
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
      }
      if (!cell.auc) logger()->warn("cell {} seed {} failed: {}", combo.str(), seed, cell.error);
      else logger()->info("cell {} seed {} auc {:.4f}", combo.str(), seed, *cell.auc);
      out.push_back(std::move(cell));
    }
  });

  EvalReport report;
  for (auto& r : results) report.cells.insert(report.cells.end(), r.begin(), r.end());
  report.sort();
  return report;
}

struct SweepRow {
  int k = 0;
  CovType cov_type = CovType::diagonal;
  double mean_auc = 0.0;
  double std_auc = 0.0;
  int n_ok = 0;
  int n_failed = 0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::vector<std::string> errors;

  std::string to_csv() const {
    std::string out = "k,cov_type,mean_auc,std_auc\n";
    for (const auto& r : rows)
      out += fmt::format("{},{},{},{}\n", r.k, to_string(r.cov_type),
                         r.n_ok ? fmt::format("{:.6f}", r.mean_auc) : "nan",
                         r.n_ok ? fmt::format("{:.6f}", r.std_auc) : "nan");
    return out;
  }
};

inline std::vector<int> default_sweep_k() { return {1, 4, 8, 12, 16, 20, 24, 28}; }

/// AUC averaged over combinations and seeds for every (k, covariance type).
/// The front end (network, statistics, PCA) is fitted once per cell and shared
/// by all mixtures.
inline SweepTable sweep_gmm(const PipelineConfig& cfg, const DatasetManifest& manifest,
                            std::span<const int> k_values, std::span<const CovType> cov_types,
                            std::span<const std::uint64_t> seeds, int jobs = 1) {
  require(uses_gmm(cfg.model), "sweep_gmm: model " + to_string(cfg.model) + " has no mixture");
  require(!k_values.empty() && !cov_types.empty() && !seeds.empty(), "sweep_gmm: empty grid");
  RecordingReader reader(manifest);
  const auto combos = manifest.by_combination();
  std::vector<const std::pair<const ComboKey, std::vector<RecordingMeta>>*> items;
  for (const auto& kv : combos) items.push_back(&kv);

  const std::size_t grid = k_values.size() * cov_types.size();
  // per combination: per grid point, AUCs over seeds
  std::vector<std::vector<std::vector<double>>> aucs(items.size(), std::vector<std::vector<double>>(grid));
  std::vector<std::vector<std::string>> errors(items.size());

  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto& [combo, recs] = *items[i];
    try {
      const FeatureCache features = featurize_all(cfg, reader, recs);
      for (auto seed : seeds) {
        const EvalSplit split = make_split(recs, split_seed(seed, combo));
        const auto train_set = gather(features, split.train);
        const std::uint64_t ms = model_seed(seed, combo, cfg.model);
        const auto [front, density_train] = fit_front_end(cfg, train_set, ms);
        for (std::size_t c = 0; c < cov_types.size(); ++c) {
          for (std::size_t q = 0; q < k_values.size(); ++q) {
            const std::size_t g = c * k_values.size() + q;
            try {
              FittedPipeline fp = front;
              GmmConfig gc = cfg.effective_gmm(derive_seed(ms, "gmm"));
              gc.k = k_values[q];
              gc.cov_type = cov_types[c];
              fit_density(fp, density_train, gc);
              aucs[i][g].push_back(evaluate_split(fp, split, features));
            } catch (const std::exception& e) {
              errors[i].push_back(fmt::format("{} seed {} k={} {}: {}", combo.str(), seed,
                                              k_values[q], to_string(cov_types[c]), e.what()));
            }
          }
        }
      }
    } catch (const std::exception& e) {
      errors[i].push_back(combo.str() + ": " + e.what());
    }
  });

  SweepTable table;
  for (std::size_t c = 0; c < cov_types.size(); ++c) {
    for (std::size_t q = 0; q < k_values.size(); ++q) {
      const std::size_t g = c * k_values.size() + q;
      std::vector<double> all;
      for (const auto& per_combo : aucs) all.insert(all.end(), per_combo[g].begin(), per_combo[g].end());
      const auto [m, s] = mean_std(all);
      const int expected = static_cast<int>(items.size() * seeds.size());
      table.rows.push_back({k_values[q], cov_types[c], m, s, static_cast<int>(all.size()),
                            expected - static_cast<int>(all.size())});
    }
  }
  for (auto& e : errors) table.errors.insert(table.errors.end(), e.begin(), e.end());
  return table;
}

}  // namespace asd
