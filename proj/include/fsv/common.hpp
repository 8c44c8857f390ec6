// fsv/common.hpp

// Copyright 2026 The fsv Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

inline constexpr double kPi = std::numbers::pi;

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (rates, ranges, sizes).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input signal or feature sequence too short for the requested operation.
class TooShortError : public Error {
 public:
  using Error::Error;
};

/// Shapes or dimensions that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A quantity is undefined for the given data (zero vector, zero variance,
/// missing class, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Malformed file or archive.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Iterative training diverged or cannot proceed.
class TrainingError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string &what) {
  if (!cond) throw ConfigError(what);
}

inline void require_dims(bool cond, const std::string &what) {
  if (!cond) throw DimensionError(what);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived> &m) {
  return m.allFinite();
}

/// Numerically stable log(sum(exp(v))).
inline double log_sum_exp(const Eigen::Ref<const Vector> &v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// Symmetric eigen-decomposition based matrix power for SPD input.
inline Matrix spd_power(const Matrix &m, double power) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success)
    throw DegenerateError("eigen-decomposition failed");
  Vector ev = es.eigenvalues();
  if (ev.minCoeff() <= 0)
    throw DegenerateError("matrix is not positive definite");
  return es.eigenvectors() * ev.array().pow(power).matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

/// Maximum-likelihood (1/N) covariance of the rows of `data`.
inline Matrix covariance(const Matrix &data, Vector *mean_out = nullptr) {
  if (data.rows() == 0) throw DegenerateError("covariance of empty set");
  Vector mean = data.colwise().mean().transpose();
  Matrix centered = data.rowwise() - mean.transpose();
  if (mean_out) *mean_out = mean;
  return centered.transpose() * centered / static_cast<double>(data.rows());
}

/// Draw a matrix of i.i.d. standard normal values.
inline Matrix randn(Index rows, Index cols, Rng &rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
  return m;
}

}  // namespace fsv
