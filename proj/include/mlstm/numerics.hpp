// Copyright 2026 The mlstm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MLSTM_NUMERICS_HPP
#define MLSTM_NUMERICS_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string_view>

#include "mlstm/error.hpp"

namespace mlstm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Counter-based generator (SplitMix64 over a Weyl sequence). The n-th draw
/// depends only on (seed, n), so streams are identical on every platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double next_unit();
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n), unbiased. n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  bool bernoulli(double p) { return next_unit() < p; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view bytes);

inline double sigmoid(double x) {
  // Branching keeps exp() from overflowing for large |x|.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector sigmoid(const Vector& v);
Vector tanh(const Vector& v);

/// Max-subtracted softmax. Throws DimensionError on empty input and
/// NumericError on non-finite input.
Vector stable_softmax(const Vector& v);

/// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h for every coordinate.
Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                                  double step);

/// rows x cols matrix with i.i.d. entries uniform on [-bound, bound], filled
/// in row-major order.
Matrix seeded_uniform_init(Eigen::Index rows, Eigen::Index cols, double bound, SeededRng& rng);

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);

}  // namespace mlstm

#endif  // MLSTM_NUMERICS_HPP
