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

// Synthetic data sets shared by the unit tests and the acceptance binary.

#include <Eigen/Dense>

#include <unistd.h>

#include <filesystem>
#include <string>

#include "asd/neural.hpp"
#include "asd/random.hpp"

namespace asd::testing {

/// Per-process scratch path under the system temp directory, so tests can run in parallel.
inline std::filesystem::path scratch_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / (name + "_" + std::to_string(::getpid()));
}

inline Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                                      double lo = 0.0, double hi = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, lo, hi);
  return m;
}

inline Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

/// 32 copies of one patch-like vector in [0, 1].
inline Eigen::MatrixXd memorization_set(std::uint64_t seed, Eigen::Index dim = kAeInput) {
  Rng rng(seed);
  const Eigen::VectorXd v = uniform_matrix(dim, 1, rng).col(0);
  return v.replicate(1, 32);
}

/// Regression set with irreducible noise: a rank-4 signal plus N(0, 0.3^2)
/// per element. A 16-d code cannot explain the noise, so the quantile heads
/// must spread out.
inline Eigen::MatrixXd quantile_regression_set(std::uint64_t seed, Eigen::Index n = 512,
                                               Eigen::Index dim = kAeInput) {
  Rng rng(seed);
  const Eigen::MatrixXd basis = normal_matrix(dim, 4, rng) * 0.5;
  const Eigen::MatrixXd coef = normal_matrix(4, n, rng);
  return ((basis * coef).array() + 0.5).matrix() + 0.3 * normal_matrix(dim, n, rng);
}

/// Fraction of (sample, dimension) entries with q0.1 <= q0.5 <= q0.9.
inline double ordered_fraction(const QuantileAutoEncoder& m, const Eigen::MatrixXd& x) {
  const auto p = m.predict(x);
  const auto ok = (p[0].array() <= p[1].array()) && (p[1].array() <= p[2].array());
  return static_cast<double>(ok.count()) / static_cast<double>(x.size());
}

/// 1-D sample from 0.5 N(0, 1) + 0.5 N(10, 1), component chosen per draw.
inline Eigen::MatrixXd two_gaussians(std::uint64_t seed, Eigen::Index n = 2000) {
  Rng rng(seed);
  Eigen::MatrixXd x(1, n);
  for (Eigen::Index i = 0; i < n; ++i) x(0, i) = (uniform(rng, 0.0, 1.0) < 0.5 ? 0.0 : 10.0) + normal(rng);
  return x;
}

}  // namespace asd::testing
