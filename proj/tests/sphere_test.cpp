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

#include "dirdp/sphere.hpp"

#include <numbers>
#include <random>

#include "gtest/gtest.h"
#include "oracles.hpp"

namespace dirdp {
namespace {

UnitVector random_unit(std::mt19937_64& gen, std::size_t n) {
  return UnitVector::from_unit(oracle::random_unit(gen, n));
}

TEST(NormalizeTest, HandValues) {
  const UnitVector u = normalize(FlatVector{3, 4});
  EXPECT_DOUBLE_EQ(u[0], 0.6);
  EXPECT_DOUBLE_EQ(u[1], 0.8);
  const UnitVector again = normalize(u.values());
  EXPECT_DOUBLE_EQ(again[0], 0.6);
  EXPECT_DOUBLE_EQ(again[1], 0.8);
}

TEST(NormalizeTest, ZeroVectorThrows) {
  EXPECT_THROW(normalize(FlatVector{0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(normalize(FlatVector{}), std::invalid_argument);
}

TEST(NormalizeTest, UnitNormOnRandomInputs) {
  std::mt19937_64 gen(1);
  for (int t = 0; t < 1000; ++t) {
    const FlatVector v = oracle::random_vector(gen, 1 + t % 50, 1e3);
    EXPECT_NEAR(l2_norm(normalize(v).values()), 1.0, 1e-12);
  }
}

TEST(UnitVectorTest, RejectsNonUnit) {
  EXPECT_THROW(UnitVector::from_unit({1.0, 1e-3}), std::invalid_argument);
  EXPECT_NO_THROW(UnitVector::from_unit({1.0, 1e-6}));
}

TEST(AngularDistanceTest, HandValues) {
  const UnitVector e1 = UnitVector::from_unit({1, 0});
  const UnitVector e2 = UnitVector::from_unit({0, 1});
  const UnitVector m1 = UnitVector::from_unit({-1, 0});
  EXPECT_EQ(angular_distance(e1, e1), 0.0);
  EXPECT_DOUBLE_EQ(angular_distance(e1, e2), std::numbers::pi / 2);
  EXPECT_DOUBLE_EQ(angular_distance(e1, m1), std::numbers::pi);
}

TEST(AngularDistanceTest, IdenticalInputsGiveZero) {
  // Norm 1 + 1e-16-ish: a dot product would exceed 1 by rounding here.
  const double a = 1.0 / std::sqrt(3.0);
  const UnitVector u = UnitVector::from_unit({a, a, a});
  EXPECT_EQ(angular_distance(u, u), 0.0);
}

TEST(AngularDistanceTest, AccurateForTinyAndNearAntipodalAngles) {
  // On the unit circle the angle between (1, 0) and (cos t, sin t) is t.
  const UnitVector e1 = UnitVector::from_unit({1, 0});
  for (double t = 1e-12; t < 1.0; t *= 7.3) {
    const UnitVector b = UnitVector::from_unit({std::cos(t), std::sin(t)});
    const UnitVector c = UnitVector::from_unit({-std::cos(t), std::sin(t)});
    EXPECT_NEAR(angular_distance(e1, b), t, 4e-16 * t) << t;
    EXPECT_NEAR(angular_distance(e1, c), std::numbers::pi - t, 1e-15) << t;
  }
}

TEST(AngularDistanceTest, IsAMetric) {
  std::mt19937_64 gen(2);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t k = 2 + t % 6;
    const UnitVector a = random_unit(gen, k);
    const UnitVector b = random_unit(gen, k);
    const UnitVector c = random_unit(gen, k);
    const double ab = angular_distance(a, b);
    EXPECT_EQ(ab, angular_distance(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, std::numbers::pi);
    EXPECT_LE(angular_distance(a, c), ab + angular_distance(b, c) + 1e-9);
  }
}

TEST(RotatePoleTest, IdentityWhenMeanIsPole) {
  std::mt19937_64 gen(3);
  const UnitVector x = random_unit(gen, 6);
  const UnitVector out = rotate_pole_to(UnitVector::pole(6), x);
  for (int i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(out[i], x[i]);
}

TEST(RotatePoleTest, PoleMapsToMean) {
  std::mt19937_64 gen(4);
  for (int t = 0; t < 100; ++t) {
    const UnitVector mu = random_unit(gen, 2 + t % 9);
    const UnitVector out = rotate_pole_to(mu, UnitVector::pole(mu.dim()));
    for (std::size_t i = 0; i < mu.dim(); ++i) EXPECT_NEAR(out[i], mu[i], 1e-12);
  }
}

TEST(RotatePoleTest, PoleMapsToNearPoleMean) {
  const double eps = 1e-9;
  const UnitVector mu = normalize(FlatVector{1.0, eps, -eps});
  const UnitVector out = rotate_pole_to(mu, UnitVector::pole(3));
  EXPECT_NEAR(out[1], mu[1], 1e-20);
  EXPECT_NEAR(out[2], mu[2], 1e-20);
}

TEST(RotatePoleTest, IsAnIsometry) {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t k = 2 + t % 40;
    const UnitVector mu = random_unit(gen, k);
    const UnitVector x = random_unit(gen, k);
    const UnitVector y = random_unit(gen, k);
    const UnitVector qx = rotate_pole_to(mu, x);
    const UnitVector qy = rotate_pole_to(mu, y);
    EXPECT_NEAR(l2_norm(qx.values()), 1.0, 1e-12);
    EXPECT_NEAR(angular_distance(UnitVector::pole(k), x),
                angular_distance(mu, qx), 1e-9);
    EXPECT_NEAR(dot(qx.values(), qy.values()), dot(x.values(), y.values()),
                1e-12);
  }
}

TEST(RotatePoleTest, DimensionMismatchThrows) {
  EXPECT_THROW(rotate_pole_to(UnitVector::pole(3), UnitVector::pole(4)),
               std::invalid_argument);
}

}  // namespace
}  // namespace dirdp
