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

#include "mlstm/numerics.hpp"

#include <cmath>
#include <string>

namespace mlstm {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t SeededRng::next_u64() {
  const std::uint64_t n = counter_++;
  return splitmix64(splitmix64(seed_) + n * 0x9E3779B97F4A7C15ULL);
}

double SeededRng::next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double SeededRng::uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

std::uint64_t SeededRng::uniform_index(std::uint64_t n) {
  if (n == 0) throw Error("uniform_index: empty range");
  // Reject the tail that would bias the modulus.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return r % n;
}

Vector sigmoid(const Vector& v) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
  return out;
}

Vector tanh(const Vector& v) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

Vector stable_softmax(const Vector& v) {
  if (v.size() == 0) throw DimensionError("stable_softmax: empty input");
  if (!all_finite(v)) throw NumericError("stable_softmax: non-finite input");
  const double shift = v.maxCoeff();
  Vector out(v.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - shift);
    total += out[i];
  }
  out /= total;
  return out;
}

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                                  double step) {
  if (!(step > 0.0)) throw Error("finite_difference_gradient: step must be > 0");
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double up = f(probe);
    probe[i] = x[i] - step;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_difference_gradient: non-finite f at coordinate " +
                         std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

Matrix seeded_uniform_init(Eigen::Index rows, Eigen::Index cols, double bound, SeededRng& rng) {
  if (rows <= 0 || cols <= 0) {
    throw DimensionError("seeded_uniform_init: dimensions must be positive");
  }
  if (!(bound > 0.0)) throw Error("seeded_uniform_init: bound must be > 0");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace mlstm
