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

// Utility and reconstruction-quality metrics.

#ifndef DIRDP_METRICS_HPP_
#define DIRDP_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dirdp/tensor.hpp"

namespace dirdp {

namespace detail {

inline void check_predictions(std::span<const FlatVector> preds,
                              std::span<const int> labels) {
  if (preds.empty()) throw std::invalid_argument("accuracy: empty input");
  require_same_length(preds.size(), labels.size(), "accuracy");
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= preds[i].size()) {
      throw std::invalid_argument("accuracy: label outside class range");
    }
  }
}

// Number of classes ranked strictly ahead of `label`: higher logit, or an
// equal logit at a lower index.
inline std::size_t rank_of(const FlatVector& logits, int label) {
  const auto l = static_cast<std::size_t>(label);
  std::size_t ahead = 0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (logits[k] > logits[l] || (logits[k] == logits[l] && k < l)) ++ahead;
  }
  return ahead;
}

}  // namespace detail

// Fraction of rows whose true label is among the k highest logits; ties are
// broken toward the lower class index.
inline double top_k_accuracy(std::span<const FlatVector> preds,
                             std::span<const int> labels, int k) {
  detail::check_predictions(preds, labels);
  if (k < 1 || static_cast<std::size_t>(k) > preds.front().size()) {
    throw std::invalid_argument("top_k_accuracy: k out of range");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (detail::rank_of(preds[i], labels[i]) < static_cast<std::size_t>(k)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

inline double accuracy(std::span<const FlatVector> preds,
                       std::span<const int> labels) {
  return top_k_accuracy(preds, labels, 1);
}

inline void require_same_shape(const ImageTensor& a, const ImageTensor& b,
                               const char* op) {
  if (!(a.shape == b.shape)) {
    throw std::invalid_argument(std::string(op) + ": image shape mismatch");
  }
}

inline double mse(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

// SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03 and
// dynamic range 1. The map is evaluated at every position where the window
// fits entirely inside the image and averaged; channels are averaged.
// Images narrower or shorter than the window use one uniform window
// covering the whole image. Values are not clamped.
struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

inline double ssim(const ImageTensor& a, const ImageTensor& b,
                   const SsimOptions& opt = {}) {
  require_same_shape(a, b, "ssim");
  const int H = a.height(), W = a.width(), C = a.channels();
  const double c1 = std::pow(opt.k1 * opt.dynamic_range, 2);
  const double c2 = std::pow(opt.k2 * opt.dynamic_range, 2);

  const bool full = H < opt.window || W < opt.window;
  const int wh = full ? H : opt.window;
  const int ww = full ? W : opt.window;
  std::vector<double> weights(static_cast<std::size_t>(wh * ww));
  if (full) {
    std::fill(weights.begin(), weights.end(), 1.0 / (wh * ww));
  } else {
    std::vector<double> g(static_cast<std::size_t>(opt.window));
    const double center = (opt.window - 1) / 2.0;
    double gs = 0.0;
    for (int i = 0; i < opt.window; ++i) {
      g[i] = std::exp(-(i - center) * (i - center) / (2.0 * opt.sigma * opt.sigma));
      gs += g[i];
    }
    for (int y = 0; y < wh; ++y) {
      for (int x = 0; x < ww; ++x) weights[y * ww + x] = g[y] * g[x] / (gs * gs);
    }
  }

  double total = 0.0;
  std::size_t count = 0;
  for (int c = 0; c < C; ++c) {
    for (int oy = 0; oy + wh <= H; ++oy) {
      for (int ox = 0; ox + ww <= W; ++ox) {
        double mu_a = 0.0, mu_b = 0.0;
        for (int y = 0; y < wh; ++y) {
          for (int x = 0; x < ww; ++x) {
            const double w = weights[y * ww + x];
            mu_a += w * a.at(oy + y, ox + x, c);
            mu_b += w * b.at(oy + y, ox + x, c);
          }
        }
        double var_a = 0.0, var_b = 0.0, cov = 0.0;
        for (int y = 0; y < wh; ++y) {
          for (int x = 0; x < ww; ++x) {
            const double w = weights[y * ww + x];
            const double da = a.at(oy + y, ox + x, c) - mu_a;
            const double db = b.at(oy + y, ox + x, c) - mu_b;
            var_a += w * da * da;
            var_b += w * db * db;
            cov += w * da * db;
          }
        }
        total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                 ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct ImageScore {
  double ssim = 0.0;
  double mse = 0.0;
};

// Mean SSIM and median MSE; the median keeps a few diverged
// reconstructions from dominating the MSE column.
struct MetricSummary {
  double mean_ssim = 0.0;
  double median_mse = 0.0;
  std::vector<ImageScore> per_image;
};

inline MetricSummary summarize(std::span<const ImageScore> per_image) {
  if (per_image.empty()) throw std::invalid_argument("summarize: empty input");
  MetricSummary s;
  s.per_image.assign(per_image.begin(), per_image.end());
  std::vector<double> mses;
  for (const ImageScore& p : per_image) {
    s.mean_ssim += p.ssim;
    mses.push_back(p.mse);
  }
  s.mean_ssim /= static_cast<double>(per_image.size());
  s.median_mse = median(std::move(mses));
  return s;
}

}  // namespace dirdp

#endif  // DIRDP_METRICS_HPP_
