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

// Dense 64-bit numeric containers shared by every module.
//
// Gradients and parameter vectors are plain FlatVectors. Images use a
// row-major, channel-last layout: element (row, col, ch) lives at
// (row * width + col) * channels + ch.

#ifndef DIRDP_TENSOR_HPP_
#define DIRDP_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dirdp {

using FlatVector = std::vector<double>;

inline void require_same_length(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw std::invalid_argument(std::string(op) + ": length mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) +
                                ")");
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double squared_norm(std::span<const double> a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return acc;
}

inline double l2_norm(std::span<const double> a) {
  return std::sqrt(squared_norm(a));
}

// Componentwise mean of a nonempty list of equal-length vectors.
inline FlatVector axpy_mean(std::span<const FlatVector> vs) {
  if (vs.empty()) throw std::invalid_argument("axpy_mean: empty list");
  FlatVector out(vs.front().size(), 0.0);
  for (const FlatVector& v : vs) {
    require_same_length(out.size(), v.size(), "axpy_mean");
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i];
  }
  const double n = static_cast<double>(vs.size());
  for (double& v : out) v /= n;
  return out;
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_same_length(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline FlatVector scaled(std::span<const double> x, double alpha) {
  FlatVector out(x.begin(), x.end());
  for (double& v : out) v *= alpha;
  return out;
}

inline FlatVector subtract(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "subtract");
  FlatVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(),
                     [](double v) { return std::isfinite(v); });
}

struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(channels);
  }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

struct ImageTensor {
  ImageShape shape;
  FlatVector data;

  ImageTensor() = default;
  explicit ImageTensor(ImageShape s, double fill = 0.0)
      : shape(s), data(s.size(), fill) {
    validate();
  }
  ImageTensor(ImageShape s, FlatVector values)
      : shape(s), data(std::move(values)) {
    validate();
  }

  int height() const { return shape.height; }
  int width() const { return shape.width; }
  int channels() const { return shape.channels; }
  std::size_t size() const { return data.size(); }

  std::size_t index(int row, int col, int ch) const {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(shape.width) +
            static_cast<std::size_t>(col)) *
               static_cast<std::size_t>(shape.channels) +
           static_cast<std::size_t>(ch);
  }
  double& at(int row, int col, int ch = 0) { return data[index(row, col, ch)]; }
  double at(int row, int col, int ch = 0) const {
    return data[index(row, col, ch)];
  }

  // Box projection onto [0,1]^n.
  void clamp01() {
    for (double& v : data) v = std::clamp(v, 0.0, 1.0);
  }

 private:
  void validate() const {
    if (shape.height <= 0 || shape.width <= 0 || shape.channels <= 0) {
      throw std::invalid_argument("ImageTensor: dimensions must be positive");
    }
    require_same_length(data.size(), shape.size(), "ImageTensor");
  }
};

}  // namespace dirdp

#endif  // DIRDP_TENSOR_HPP_
