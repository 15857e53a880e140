// Copyright 2026 The DirDP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Geometry on the unit sphere S^{K-1}: direction extraction, the angular
// metric and the orthogonal map that carries the pole e1 onto a mean
// direction.

#ifndef DIRDP_SPHERE_HPP_
#define DIRDP_SPHERE_HPP_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>

#include "dirdp/tensor.hpp"

namespace dirdp {

inline constexpr double kUnitTolerance = 1e-9;

class UnitVector {
 public:
  // Adopts v, which must already have unit norm within kUnitTolerance.
  static UnitVector from_unit(FlatVector v) {
    if (v.empty()) throw std::invalid_argument("UnitVector: empty vector");
    if (std::abs(l2_norm(v) - 1.0) > kUnitTolerance) {
      throw std::invalid_argument("UnitVector: norm differs from 1");
    }
    return UnitVector(std::move(v));
  }

  static UnitVector pole(std::size_t dim) {
    if (dim == 0) throw std::invalid_argument("UnitVector: dimension 0");
    FlatVector v(dim, 0.0);
    v[0] = 1.0;
    return UnitVector(std::move(v));
  }

  std::size_t dim() const { return v_.size(); }
  std::span<const double> values() const { return v_; }
  const FlatVector& vector() const { return v_; }
  double operator[](std::size_t i) const { return v_[i]; }

  friend UnitVector normalize(std::span<const double> v);

 private:
  explicit UnitVector(FlatVector v) : v_(std::move(v)) {}
  FlatVector v_;
};

// v / ||v||. Throws for a zero (or empty) input.
inline UnitVector normalize(std::span<const double> v) {
  const double n = l2_norm(v);
  if (v.empty() || !(n > 0.0)) {
    throw std::invalid_argument("normalize: zero vector has no direction");
  }
  FlatVector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return UnitVector(std::move(out));
}

// d_L(a, b) = arccos(a.b), evaluated as 2 atan2(|a - b|, |a + b|). The
// arccos form loses about half the digits for nearly parallel or antipodal
// inputs; this one stays accurate to a few ulps over the whole range.
inline double angular_distance(const UnitVector& a, const UnitVector& b) {
  require_same_length(a.dim(), b.dim(), "angular_distance");
  double diff = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i], s = a[i] + b[i];
    diff += d * d;
    sum += s * s;
  }
  return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
}

// Applies the Householder reflection Q = I - 2uu^T/(u^Tu), u = e1 - mu,
// which is orthogonal and satisfies Q e1 = mu. Cost is O(K) and Q is never
// materialized.
inline UnitVector rotate_pole_to(const UnitVector& mu, const UnitVector& x) {
  require_same_length(mu.dim(), x.dim(), "rotate_pole_to");
  FlatVector u(mu.vector());
  for (double& v : u) v = -v;
  // 1 - mu0 without cancellation when mu is close to the pole.
  double tail = 0.0;
  for (std::size_t i = 1; i < u.size(); ++i) tail += u[i] * u[i];
  u[0] = mu[0] > 0.0 ? tail / (1.0 + mu[0]) : 1.0 - mu[0];
  const double uu = u[0] * u[0] + tail;
  FlatVector out(x.vector());
  if (uu == 0.0) return UnitVector::from_unit(std::move(out));
  const double coef = 2.0 * dot(u, x.values()) / uu;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= coef * u[i];
  // Rounding can leave the norm off by a few ulps; renormalize.
  return normalize(out);
}

}  // namespace dirdp

#endif  // DIRDP_SPHERE_HPP_
