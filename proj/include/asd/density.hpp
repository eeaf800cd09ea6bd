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

// PCA reduction and Gaussian-mixture normality models fitted by EM.
// Data matrices hold one sample per column (dim x N) throughout.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "asd/error.hpp"
#include "asd/featurize.hpp"
#include "asd/log.hpp"
#include "asd/random.hpp"

namespace asd {

// ---------------------------------------------------------------------------
// PCA

struct PcaModel {
  Eigen::VectorXd mean;             // D
  Eigen::MatrixXd components;       // d x D, orthonormal rows, descending variance
  Eigen::VectorXd explained_ratio;  // d

  Eigen::Index input_dim() const { return components.cols(); }
  Eigen::Index output_dim() const { return components.rows(); }

  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const {
    require(x.rows() == input_dim(), "pca_transform: dimension mismatch");
    return components * (x.colwise() - mean);
  }

  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& y) const {
    require(y.rows() == output_dim(), "pca_reconstruct: dimension mismatch");
    return (components.transpose() * y).colwise() + mean;
  }
};

/// Keeps the fewest principal directions whose cumulative explained variance
/// reaches `retain`. Directions come from the SVD of the centered data.
inline PcaModel pca_fit(const Eigen::MatrixXd& data, double retain) {
  require(data.cols() >= 2, "pca_fit: need at least 2 samples");
  require(retain > 0.0 && retain <= 1.0, "pca_fit: retain must lie in (0, 1]");
  require(data.allFinite(), "pca_fit: non-finite data");

  PcaModel p;
  p.mean = data.rowwise().mean();
  const Eigen::MatrixXd centered = (data.colwise() - p.mean).transpose();  // N x D
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd var = svd.singularValues().array().square();
  const double total = var.sum();
  require(total > 0.0 && svd.singularValues()(0) >
                             1e-12 * std::max(1.0, centered.cwiseAbs().maxCoeff()),
          "pca_fit: data has rank 0");

  const Eigen::VectorXd ratio = var / total;
  Eigen::Index d = 0;
  double cum = 0.0;
  while (d < ratio.size()) {
    cum += ratio(d++);
    if (cum >= retain - 1e-12) break;
  }
  p.components = svd.matrixV().leftCols(d).transpose();
  for (Eigen::Index r = 0; r < d; ++r) {
    Eigen::Index arg;
    p.components.row(r).cwiseAbs().maxCoeff(&arg);
    if (p.components(r, arg) < 0.0) p.components.row(r) *= -1.0;
  }
  p.explained_ratio = ratio.head(d);
  return p;
}

inline Eigen::VectorXd pca_transform(const PcaModel& p, const Eigen::VectorXd& x) {
  return p.transform(x).col(0);
}

// ---------------------------------------------------------------------------
// GMM

enum class CovType { diagonal, full };

inline std::string to_string(CovType c) { return c == CovType::full ? "full" : "diagonal"; }

inline CovType cov_type_from_string(const std::string& s) {
  if (s == "diagonal" || s == "diag") return CovType::diagonal;
  if (s == "full") return CovType::full;
  throw ConfigError("unknown covariance type '" + s + "'");
}

struct GmmConfig {
  int k = 20;
  CovType cov_type = CovType::diagonal;
  int max_iters = 200;
  double tol = 1e-4;  // relative change of mean log-likelihood
  double reg = 1e-6;  // variance floor
  std::uint64_t seed = 0;
  std::size_t init_subsample = 10000;

  void validate() const {
    require(k >= 1, "GmmConfig: k must be >= 1");
    require(max_iters >= 1, "GmmConfig: max_iters must be >= 1");
    require(tol > 0.0, "GmmConfig: tol must be positive");
    require(reg > 0.0, "GmmConfig: reg must be positive");
  }
};

inline void to_json(nlohmann::json& j, const GmmConfig& c) {
  j = {{"k", c.k},     {"cov_type", to_string(c.cov_type)}, {"max_iters", c.max_iters},
       {"tol", c.tol}, {"reg", c.reg},                      {"seed", c.seed},
       {"init_subsample", c.init_subsample}};
}

inline void from_json(const nlohmann::json& j, GmmConfig& c) {
  GmmConfig d;
  c.k = j.value("k", d.k);
  c.cov_type = cov_type_from_string(j.value("cov_type", to_string(d.cov_type)));
  c.max_iters = j.value("max_iters", d.max_iters);
  c.tol = j.value("tol", d.tol);
  c.reg = j.value("reg", d.reg);
  c.seed = j.value("seed", d.seed);
  c.init_subsample = j.value("init_subsample", d.init_subsample);
}

class GmmModel {
 public:
  GmmModel() = default;

  /// Diagonal model; `variances` is d x K.
  static GmmModel diagonal(Eigen::VectorXd weights, Eigen::MatrixXd means,
                           Eigen::MatrixXd variances) {
    GmmModel g;
    g.cov_type_ = CovType::diagonal;
    g.weights_ = std::move(weights);
    g.means_ = std::move(means);
    g.variances_ = std::move(variances);
    g.prepare();
    return g;
  }

  static GmmModel full(Eigen::VectorXd weights, Eigen::MatrixXd means,
                       std::vector<Eigen::MatrixXd> covariances) {
    GmmModel g;
    g.cov_type_ = CovType::full;
    g.weights_ = std::move(weights);
    g.means_ = std::move(means);
    g.covariances_ = std::move(covariances);
    g.prepare();
    return g;
  }

  CovType cov_type() const { return cov_type_; }
  Eigen::Index k() const { return weights_.size(); }
  Eigen::Index dim() const { return means_.rows(); }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::MatrixXd& means() const { return means_; }
  const Eigen::MatrixXd& variances() const { return variances_; }
  const std::vector<Eigen::MatrixXd>& covariances() const { return covariances_; }

  /// Full covariance of component c, whichever representation is stored.
  Eigen::MatrixXd covariance(Eigen::Index c) const {
    if (cov_type_ == CovType::full) return covariances_[c];
    return variances_.col(c).asDiagonal();
  }

  /// K x N matrix of log(lambda_k) + log N(x_n | mu_k, Sigma_k).
  Eigen::MatrixXd weighted_log_densities(const Eigen::MatrixXd& x) const {
    require(x.rows() == dim(), "gmm: dimension mismatch");
    const double d = static_cast<double>(dim());
    const double log2pi = std::log(2.0 * std::numbers::pi);
    Eigen::MatrixXd out(k(), x.cols());
    for (Eigen::Index c = 0; c < k(); ++c) {
      Eigen::RowVectorXd quad;
      if (cov_type_ == CovType::diagonal) {
        const Eigen::ArrayXd prec = variances_.col(c).array().inverse();
        quad = ((x.colwise() - means_.col(c)).array().square().colwise() * prec)
                   .colwise()
                   .sum()
                   .matrix();
      } else {
        const Eigen::MatrixXd z =
            chol_[c].matrixL().solve(x.colwise() - means_.col(c));
        quad = z.colwise().squaredNorm();
      }
      out.row(c) = (-0.5 * (quad.array() + d * log2pi + log_det_[c]) + std::log(weights_(c)))
                       .matrix();
    }
    return out;
  }

 private:
  void prepare() {
    require(weights_.size() >= 1 && means_.cols() == weights_.size(), "gmm: shape mismatch");
    log_det_.resize(k());
    chol_.clear();
    if (cov_type_ == CovType::diagonal) {
      require(variances_.rows() == dim() && variances_.cols() == k(), "gmm: variance shape");
      require((variances_.array() > 0.0).all(), "gmm: variances must be positive");
      for (Eigen::Index c = 0; c < k(); ++c)
        log_det_(c) = variances_.col(c).array().log().sum();
    } else {
      require(static_cast<Eigen::Index>(covariances_.size()) == k(), "gmm: covariance count");
      for (Eigen::Index c = 0; c < k(); ++c) {
        require(covariances_[c].rows() == dim() && covariances_[c].cols() == dim(),
                "gmm: covariance shape");
        Eigen::LLT<Eigen::MatrixXd> llt(covariances_[c]);
        if (llt.info() != Eigen::Success)
          throw NumericError("gmm: covariance " + std::to_string(c) + " not positive definite");
        log_det_(c) = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        chol_.push_back(std::move(llt));
      }
    }
  }

  CovType cov_type_ = CovType::diagonal;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd means_;
  Eigen::MatrixXd variances_;
  std::vector<Eigen::MatrixXd> covariances_;
  Eigen::VectorXd log_det_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> chol_;
};

/// Column-wise log-sum-exp of a K x N matrix.
inline Eigen::RowVectorXd log_sum_exp_cols(const Eigen::MatrixXd& a) {
  Eigen::RowVectorXd out(a.cols());
  for (Eigen::Index n = 0; n < a.cols(); ++n) {
    const double m = a.col(n).maxCoeff();
    out(n) = std::isfinite(m) ? m + std::log((a.col(n).array() - m).exp().sum()) : m;
  }
  return out;
}

/// Negative log mixture density of each column.
inline Eigen::VectorXd gmm_nll(const GmmModel& g, const Eigen::MatrixXd& x) {
  require(x.allFinite(), "gmm_nll: non-finite input");
  return -log_sum_exp_cols(g.weighted_log_densities(x)).transpose();
}

inline double gmm_nll(const GmmModel& g, const Eigen::VectorXd& x) {
  return gmm_nll(g, Eigen::MatrixXd(x))(0);
}

enum class Pooling { mean, sum };

inline std::string to_string(Pooling p) { return p == Pooling::sum ? "sum" : "mean"; }

inline Pooling pooling_from_string(const std::string& s) {
  if (s == "mean") return Pooling::mean;
  if (s == "sum") return Pooling::sum;
  throw ConfigError("unknown pooling '" + s + "'");
}

inline double pool(const Eigen::VectorXd& scores, Pooling p) {
  require(scores.size() > 0, "pool: empty score sequence");
  return p == Pooling::sum ? scores.sum() : scores.mean();
}

/// Recording score: per-window NLLs pooled by mean or sum.
inline double score_sequence(const GmmModel& g, const FeatureSequence& x,
                             Pooling pooling = Pooling::mean) {
  require(x.size() > 0, "score_sequence: empty sequence");
  return pool(gmm_nll(g, x.vectors), pooling);
}

struct GmmFit {
  GmmModel model;
  std::vector<double> log_likelihood;  // mean per-sample LL after each E-step
  std::vector<int> reseeded_at;        // trace indices preceded by a re-seed
  bool converged = false;
};

namespace detail {

// k-means++ seeding on a subsample; returns d x k centers.
inline Eigen::MatrixXd kmeanspp(const Eigen::MatrixXd& x, int k, std::size_t max_points, Rng& rng) {
  const Eigen::Index n = x.cols();
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  const Eigen::Index m = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(max_points));
  for (Eigen::Index i = 0; i < m; ++i)
    std::swap(idx[i], idx[i + uniform_index(rng, static_cast<std::uint64_t>(n - i))]);
  idx.resize(m);
  std::sort(idx.begin(), idx.end());

  Eigen::MatrixXd centers(x.rows(), k);
  centers.col(0) = x.col(idx[uniform_index(rng, m)]);
  Eigen::VectorXd d2(m);
  for (Eigen::Index i = 0; i < m; ++i) d2(i) = (x.col(idx[i]) - centers.col(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = uniform(rng, 0.0, total);
      for (pick = 0; pick < m - 1; ++pick) {
        u -= d2(pick);
        if (u < 0.0) break;
      }
    } else {
      pick = static_cast<Eigen::Index>(uniform_index(rng, m));
    }
    centers.col(c) = x.col(idx[pick]);
    for (Eigen::Index i = 0; i < m; ++i)
      d2(i) = std::min(d2(i), (x.col(idx[i]) - centers.col(c)).squaredNorm());
  }
  return centers;
}

// Eigenvalue floor: the likelihood-maximizing covariance subject to
// lambda_min >= reg is the sample covariance with its spectrum clamped.
inline Eigen::MatrixXd clamp_spectrum(const Eigen::MatrixXd& s, double reg) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(reg);
  Eigen::MatrixXd out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

// M-step from responsibilities r (K x N). Components whose weight falls below
// 1e-12 are returned in `degenerate` and get placeholder parameters.
inline GmmModel m_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& r, const GmmConfig& cfg,
                       const Eigen::VectorXd& global_var, std::vector<Eigen::Index>& degenerate) {
  const Eigen::Index k = r.rows(), d = x.rows();
  const double n = static_cast<double>(x.cols());
  const Eigen::VectorXd nk = r.rowwise().sum();
  Eigen::VectorXd weights = nk / n;
  Eigen::MatrixXd means(d, k);
  Eigen::MatrixXd vars(d, k);
  std::vector<Eigen::MatrixXd> covs;
  degenerate.clear();
  for (Eigen::Index c = 0; c < k; ++c) {
    if (!(weights(c) >= 1e-12)) {
      degenerate.push_back(c);
      weights(c) = 1e-12;
      means.col(c) = x.rowwise().mean();
      vars.col(c) = global_var;
      if (cfg.cov_type == CovType::full) covs.push_back(global_var.asDiagonal());
      continue;
    }
    means.col(c) = x * r.row(c).transpose() / nk(c);
    const Eigen::MatrixXd centered = x.colwise() - means.col(c);
    if (cfg.cov_type == CovType::diagonal) {
      vars.col(c) = (centered.array().square().matrix() * r.row(c).transpose() / nk(c))
                        .cwiseMax(cfg.reg);
    } else {
      const Eigen::MatrixXd weighted = centered * r.row(c).cwiseSqrt().asDiagonal();
      covs.push_back(clamp_spectrum(weighted * weighted.transpose() / nk(c), cfg.reg));
    }
  }
  weights /= weights.sum();
  if (cfg.cov_type == CovType::diagonal) return GmmModel::diagonal(weights, means, vars);
  return GmmModel::full(weights, means, std::move(covs));
}

}  // namespace detail

/// Fits a K-component mixture with EM. Means are seeded by k-means++ and one
/// hard-assignment pass; the loop alternates E and M steps until the relative
/// change of the mean log-likelihood drops below cfg.tol or cfg.max_iters.
inline GmmFit gmm_fit_em(const Eigen::MatrixXd& data, const GmmConfig& cfg) {
  cfg.validate();
  require(data.cols() >= cfg.k, "gmm_fit_em: fewer samples than components");
  require(data.rows() >= 1, "gmm_fit_em: zero-dimensional data");
  require(data.allFinite(), "gmm_fit_em: non-finite data");

  const Eigen::Index n = data.cols();
  Rng rng(derive_seed(cfg.seed, "gmm_init"));
  const Eigen::MatrixXd centers = detail::kmeanspp(data, cfg.k, cfg.init_subsample, rng);

  const Eigen::VectorXd mean = data.rowwise().mean();
  const Eigen::VectorXd global_var =
      ((data.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(n))
          .max(cfg.reg)
          .matrix();

  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(cfg.k, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best;
    (centers.colwise() - data.col(i)).colwise().squaredNorm().minCoeff(&best);
    resp(best, i) = 1.0;
  }

  GmmFit fit;
  std::vector<Eigen::Index> degenerate;
  GmmModel model = detail::m_step(data, resp, cfg, global_var, degenerate);
  bool reseed_pending = false;

  for (int it = 0; it < cfg.max_iters; ++it) {
    Eigen::MatrixXd logp = model.weighted_log_densities(data);
    const Eigen::RowVectorXd lse = log_sum_exp_cols(logp);
    if (!lse.allFinite()) throw NumericError("gmm_fit_em: non-finite log-likelihood");

    // Re-seed degenerate components at the worst-explained samples.
    if (!degenerate.empty()) {
      std::vector<Eigen::Index> order(n);
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(degenerate.size()),
                        order.end(), [&](auto a, auto b) { return lse(a) < lse(b); });
      Eigen::VectorXd w = model.weights();
      Eigen::MatrixXd mu = model.means();
      for (std::size_t j = 0; j < degenerate.size(); ++j) {
        const Eigen::Index c = degenerate[j];
        logger()->info("gmm: component {} degenerate at iteration {}; re-seeding", c, it);
        mu.col(c) = data.col(order[j]);
        w(c) = 1.0 / static_cast<double>(n);
      }
      w /= w.sum();
      if (cfg.cov_type == CovType::diagonal) {
        Eigen::MatrixXd v = model.variances();
        for (auto c : degenerate) v.col(c) = global_var;
        model = GmmModel::diagonal(w, mu, v);
      } else {
        auto cv = model.covariances();
        for (auto c : degenerate) cv[c] = global_var.asDiagonal();
        model = GmmModel::full(w, mu, std::move(cv));
      }
      reseed_pending = true;
      degenerate.clear();
      --it;
      continue;
    }

    const double ll = lse.mean();
    if (reseed_pending) fit.reseeded_at.push_back(static_cast<int>(fit.log_likelihood.size()));
    reseed_pending = false;
    fit.log_likelihood.push_back(ll);
    if (fit.log_likelihood.size() >= 2) {
      const double prev = fit.log_likelihood[fit.log_likelihood.size() - 2];
      if (std::abs(ll - prev) / std::max(1.0, std::abs(prev)) < cfg.tol) {
        fit.converged = true;
        break;
      }
    }
    if (it + 1 == cfg.max_iters) break;

    resp = (logp.rowwise() - lse).array().exp().matrix();
    model = detail::m_step(data, resp, cfg, global_var, degenerate);
  }
  fit.model = std::move(model);
  return fit;
}

/// E-step responsibilities (K x N) of a fitted model.
inline Eigen::MatrixXd gmm_responsibilities(const GmmModel& g, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd logp = g.weighted_log_densities(x);
  return (logp.rowwise() - log_sum_exp_cols(logp)).array().exp().matrix();
}

// ---------------------------------------------------------------------------
// Persistence

inline nlohmann::json to_json(const PcaModel& p) {
  nlohmann::json comps = nlohmann::json::array();
  for (Eigen::Index r = 0; r < p.components.rows(); ++r) {
    const Eigen::RowVectorXd row = p.components.row(r);
    comps.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  return {{"mean", std::vector<double>(p.mean.data(), p.mean.data() + p.mean.size())},
          {"components", std::move(comps)},
          {"explained_ratio", std::vector<double>(p.explained_ratio.data(),
                                                  p.explained_ratio.data() + p.explained_ratio.size())}};
}

inline PcaModel pca_from_json(const nlohmann::json& j) {
  PcaModel p;
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto comps = j.at("components").get<std::vector<std::vector<double>>>();
  const auto ratio = j.at("explained_ratio").get<std::vector<double>>();
  const auto dim = static_cast<Eigen::Index>(mean.size());
  if (comps.size() != ratio.size()) throw DataError("pca: component/ratio count mismatch");
  p.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), dim);
  p.components.resize(static_cast<Eigen::Index>(comps.size()), dim);
  for (std::size_t r = 0; r < comps.size(); ++r) {
    if (static_cast<Eigen::Index>(comps[r].size()) != dim) throw DataError("pca: component width");
    p.components.row(static_cast<Eigen::Index>(r)) =
        Eigen::Map<const Eigen::RowVectorXd>(comps[r].data(), dim);
  }
  p.explained_ratio = Eigen::Map<const Eigen::VectorXd>(ratio.data(), static_cast<Eigen::Index>(ratio.size()));
  return p;
}

inline nlohmann::json to_json(const GmmModel& g) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json means = nlohmann::json::array(), covs = nlohmann::json::array();
  for (Eigen::Index c = 0; c < g.k(); ++c) {
    means.push_back(vec(g.means().col(c)));
    if (g.cov_type() == CovType::diagonal) {
      covs.push_back(vec(g.variances().col(c)));
    } else {
      nlohmann::json m = nlohmann::json::array();
      for (Eigen::Index r = 0; r < g.dim(); ++r) m.push_back(vec(g.covariances()[c].row(r).transpose()));
      covs.push_back(std::move(m));
    }
  }
  return {{"cov_type", to_string(g.cov_type())},
          {"k", g.k()},
          {"d", g.dim()},
          {"weights", vec(g.weights())},
          {"means", std::move(means)},
          {"covariances", std::move(covs)}};
}

inline GmmModel gmm_from_json(const nlohmann::json& j) {
  try {
    const CovType ct = cov_type_from_string(j.at("cov_type").get<std::string>());
    const auto k = j.at("k").get<Eigen::Index>(), d = j.at("d").get<Eigen::Index>();
    const auto w = j.at("weights").get<std::vector<double>>();
    const auto means = j.at("means").get<std::vector<std::vector<double>>>();
    if (static_cast<Eigen::Index>(w.size()) != k || static_cast<Eigen::Index>(means.size()) != k)
      throw DataError("gmm: weight/mean count != k");
    Eigen::MatrixXd mu(d, k);
    for (Eigen::Index c = 0; c < k; ++c) {
      if (static_cast<Eigen::Index>(means[c].size()) != d) throw DataError("gmm: mean width != d");
      mu.col(c) = Eigen::Map<const Eigen::VectorXd>(means[c].data(), d);
    }
    const Eigen::VectorXd weights = Eigen::Map<const Eigen::VectorXd>(w.data(), k);
    const auto& cj = j.at("covariances");
    if (static_cast<Eigen::Index>(cj.size()) != k) throw DataError("gmm: covariance count != k");
    if (ct == CovType::diagonal) {
      Eigen::MatrixXd v(d, k);
      for (Eigen::Index c = 0; c < k; ++c) {
        const auto col = cj[c].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(col.size()) != d) throw DataError("gmm: variance width != d");
        v.col(c) = Eigen::Map<const Eigen::VectorXd>(col.data(), d);
      }
      return GmmModel::diagonal(weights, mu, v);
    }
    std::vector<Eigen::MatrixXd> covs;
    for (Eigen::Index c = 0; c < k; ++c) {
      const auto rows = cj[c].get<std::vector<std::vector<double>>>();
      if (static_cast<Eigen::Index>(rows.size()) != d) throw DataError("gmm: covariance rows != d");
      Eigen::MatrixXd m(d, d);
      for (Eigen::Index r = 0; r < d; ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != d) throw DataError("gmm: covariance cols != d");
        m.row(r) = Eigen::Map<const Eigen::RowVectorXd>(rows[r].data(), d);
      }
      covs.push_back(std::move(m));
    }
    return GmmModel::full(weights, mu, std::move(covs));
  } catch (const InvalidInput& e) {
    throw DataError(std::string("gmm: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("gmm: ") + e.what());
  }
}

}  // namespace asd
