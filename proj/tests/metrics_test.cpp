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

#include "dirdp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"

namespace dirdp {
namespace {

ImageTensor random_image(std::mt19937_64& gen, ImageShape s) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageTensor t(s);
  for (double& v : t.data) v = u(gen);
  return t;
}

// SSIM written with the raw-moment form var = E[x^2] - E[x]^2 and an
// explicitly built 2-D kernel, sharing nothing with the library loop.
double ssim_oracle(const ImageTensor& a, const ImageTensor& b) {
  const int n = 11;
  double kernel[11][11];
  double total = 0.0;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double r2 = (y - 5.0) * (y - 5.0) + (x - 5.0) * (x - 5.0);
      kernel[y][x] = std::exp(-r2 / (2.0 * 1.5 * 1.5));
      total += kernel[y][x];
    }
  }
  const double c1 = 1e-4, c2 = 9e-4;
  double acc = 0.0;
  int count = 0;
  for (int c = 0; c < a.channels(); ++c) {
    for (int oy = 0; oy + n <= a.height(); ++oy) {
      for (int ox = 0; ox + n <= a.width(); ++ox) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int y = 0; y < n; ++y) {
          for (int x = 0; x < n; ++x) {
            const double w = kernel[y][x] / total;
            const double pa = a.at(oy + y, ox + x, c), pb = b.at(oy + y, ox + x, c);
            ma += w * pa;
            mb += w * pb;
            saa += w * pa * pa;
            sbb += w * pb * pb;
            sab += w * pa * pb;
          }
        }
        const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        acc += (2 * ma * mb + c1) * (2 * cov + c2) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    }
  }
  return acc / count;
}

TEST(AccuracyTest, AllAndNone) {
  const std::vector<FlatVector> preds = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  EXPECT_EQ(accuracy(preds, std::vector<int>{0, 1, 2}), 1.0);
  EXPECT_EQ(accuracy(preds, std::vector<int>{1, 2, 0}), 0.0);
}

TEST(AccuracyTest, TiesGoToLowestIndex) {
  const std::vector<FlatVector> preds = {{0.5, 0.5, 0.1}};
  EXPECT_EQ(accuracy(preds, std::vector<int>{0}), 1.0);
  EXPECT_EQ(accuracy(preds, std::vector<int>{1}), 0.0);
}

TEST(AccuracyTest, MatchesHandCount) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  std::vector<FlatVector> preds(100, FlatVector(10));
  std::vector<int> labels(100);
  int hits = 0;
  for (int i = 0; i < 100; ++i) {
    for (double& v : preds[i]) v = nd(gen);
    labels[i] = static_cast<int>(gen() % 10);
    const auto best = std::max_element(preds[i].begin(), preds[i].end()) - preds[i].begin();
    hits += best == labels[i];
  }
  EXPECT_DOUBLE_EQ(accuracy(preds, labels), hits / 100.0);
}

TEST(AccuracyTest, Errors) {
  EXPECT_THROW(accuracy(std::vector<FlatVector>{}, std::vector<int>{}),
               std::invalid_argument);
  EXPECT_THROW(accuracy(std::vector<FlatVector>{{1, 2}}, std::vector<int>{0, 1}),
               std::invalid_argument);
  EXPECT_THROW(accuracy(std::vector<FlatVector>{{1, 2}}, std::vector<int>{2}),
               std::invalid_argument);
}

TEST(TopKTest, HandExample) {
  const std::vector<FlatVector> preds = {{0.1, 0.5, 0.4}};
  const std::vector<int> labels = {2};
  EXPECT_EQ(top_k_accuracy(preds, labels, 1), 0.0);
  EXPECT_EQ(top_k_accuracy(preds, labels, 2), 1.0);
  EXPECT_EQ(top_k_accuracy(preds, labels, 3), 1.0);
  EXPECT_THROW(top_k_accuracy(preds, labels, 0), std::invalid_argument);
  EXPECT_THROW(top_k_accuracy(preds, labels, 4), std::invalid_argument);
}

TEST(TopKTest, MonotoneInK) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<FlatVector> preds(40, FlatVector(10));
    std::vector<int> labels(40);
    for (int i = 0; i < 40; ++i) {
      for (double& v : preds[i]) v = nd(gen);
      labels[i] = static_cast<int>(gen() % 10);
    }
    double prev = 0.0;
    for (int k = 1; k <= 10; ++k) {
      const double a = top_k_accuracy(preds, labels, k);
      EXPECT_GE(a, prev);
      prev = a;
    }
    EXPECT_EQ(prev, 1.0);
    EXPECT_EQ(top_k_accuracy(preds, labels, 1), accuracy(preds, labels));
  }
}

TEST(MseTest, HandValues) {
  const ImageShape s{4, 4, 1};
  EXPECT_EQ(mse(ImageTensor(s, 0.0), ImageTensor(s, 1.0)), 1.0);
  EXPECT_EQ(mse(ImageTensor(s, 0.3), ImageTensor(s, 0.3)), 0.0);
  EXPECT_THROW(mse(ImageTensor(s), ImageTensor(ImageShape{4, 5, 1})),
               std::invalid_argument);
}

TEST(MseTest, MatchesTwoLoopOracleAndIsSymmetric) {
  std::mt19937_64 gen(9);
  const ImageShape s{7, 5, 3};
  for (int t = 0; t < 100; ++t) {
    const ImageTensor a = random_image(gen, s), b = random_image(gen, s);
    double acc = 0.0;
    for (int y = 0; y < 7; ++y) {
      for (int x = 0; x < 5; ++x) {
        for (int c = 0; c < 3; ++c) {
          const double d = a.at(y, x, c) - b.at(y, x, c);
          acc += d * d;
        }
      }
    }
    EXPECT_NEAR(mse(a, b), acc / 105.0, 1e-12);
    EXPECT_EQ(mse(a, b), mse(b, a));
    EXPECT_GT(mse(a, b), 0.0);
  }
}

TEST(SsimTest, IdenticalImagesScoreOne) {
  std::mt19937_64 gen(1);
  for (const ImageShape s : {ImageShape{8, 8, 1}, ImageShape{16, 16, 1},
                             ImageShape{14, 12, 3}}) {
    const ImageTensor a = random_image(gen, s);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-9);
  }
}

TEST(SsimTest, ConstantZeroVersusOne) {
  // Both windows have zero variance, so SSIM = C1 / (1 + C1).
  for (const ImageShape s : {ImageShape{8, 8, 1}, ImageShape{16, 16, 1}}) {
    const double v = ssim(ImageTensor(s, 0.0), ImageTensor(s, 1.0));
    EXPECT_LT(v, 0.01);
    EXPECT_NEAR(v, 1e-4 / (1.0 + 1e-4), 1e-15);
  }
}

TEST(SsimTest, SymmetricAndBounded) {
  std::mt19937_64 gen(2);
  for (int t = 0; t < 10000; ++t) {
    const ImageShape s = t % 2 ? ImageShape{8, 8, 1} : ImageShape{12, 12, 1};
    const ImageTensor a = random_image(gen, s), b = random_image(gen, s);
    const double ab = ssim(a, b);
    EXPECT_NEAR(ab, ssim(b, a), 1e-12);
    EXPECT_GE(ab, -1.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(SsimTest, MatchesIndependentGaussianWindowOracle) {
  std::mt19937_64 gen(4);
  for (const ImageShape s : {ImageShape{11, 11, 1}, ImageShape{16, 20, 1},
                             ImageShape{13, 13, 3}}) {
    const ImageTensor a = random_image(gen, s);
    ImageTensor b = a;
    std::normal_distribution<double> nd(0.0, 0.1);
    for (double& v : b.data) v = std::clamp(v + nd(gen), 0.0, 1.0);
    EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-9);
  }
}

TEST(SsimTest, NegativeForAnticorrelatedImages) {
  std::mt19937_64 gen(6);
  const ImageTensor a = random_image(gen, ImageShape{16, 16, 1});
  ImageTensor b = a;
  for (double& v : b.data) v = 1.0 - v;
  EXPECT_LT(ssim(a, b), 0.0);
}

TEST(SummarizeTest, SingleAndOutlier) {
  const std::vector<ImageScore> one = {{0.7, 0.2}};
  const MetricSummary s1 = summarize(one);
  EXPECT_EQ(s1.mean_ssim, 0.7);
  EXPECT_EQ(s1.median_mse, 0.2);
  ASSERT_EQ(s1.per_image.size(), 1u);

  const std::vector<ImageScore> three = {{0.1, 1.0}, {0.2, 2.0}, {0.3, 1e9}};
  EXPECT_EQ(summarize(three).median_mse, 2.0);
  EXPECT_NEAR(summarize(three).mean_ssim, 0.2, 1e-15);
  EXPECT_THROW(summarize(std::vector<ImageScore>{}), std::invalid_argument);
}

TEST(SummarizeTest, MatchesSortOracle) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<ImageScore> scores(1 + t % 9);
    for (ImageScore& s : scores) s = {u(gen), u(gen)};
    std::vector<double> m;
    double ssum = 0.0;
    for (const ImageScore& s : scores) {
      m.push_back(s.mse);
      ssum += s.ssim;
    }
    std::sort(m.begin(), m.end());
    const std::size_t n = m.size();
    const double med = n % 2 ? m[n / 2] : (m[n / 2 - 1] + m[n / 2]) / 2;
    const MetricSummary got = summarize(scores);
    EXPECT_EQ(got.median_mse, med);
    EXPECT_NEAR(got.mean_ssim, ssum / n, 1e-15);
  }
}

}  // namespace
}  // namespace dirdp
