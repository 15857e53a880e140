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

// Dataset ingestion: MNIST IDX files (plain or gzipped) and a seeded
// synthetic generator of class-conditional blob images.

#ifndef DIRDP_DATA_HPP_
#define DIRDP_DATA_HPP_

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dirdp/error.hpp"
#include "dirdp/nn.hpp"
#include "dirdp/rng.hpp"
#include "dirdp/tensor.hpp"

namespace dirdp {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {

// Reads a whole file; gzip input is inflated transparently.
inline std::vector<unsigned char> read_maybe_gzip(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw DataError("cannot open " + path);
  std::vector<unsigned char> out;
  std::array<unsigned char, 1 << 16> buf;
  for (;;) {
    const int n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()));
    if (n < 0) {
      gzclose(f);
      throw DataError("read error in " + path);
    }
    if (n == 0) break;
    out.insert(out.end(), buf.begin(), buf.begin() + n);
  }
  gzclose(f);
  return out;
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off,
                               const std::string& path) {
  if (off + 4 > b.size()) throw DataError("truncated IDX header in " + path);
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

// Overlap of source cell [i, i+1) with destination cell j scaled to source
// coordinates [j*r, (j+1)*r).
inline double overlap(int i, int j, double r) {
  const double lo = std::max<double>(i, j * r);
  const double hi = std::min<double>(i + 1, (j + 1) * r);
  return std::max(0.0, hi - lo);
}

}  // namespace detail

// Area-average resampling: each output pixel is the mean of the input area
// it covers, so the image mean is preserved.
inline ImageTensor resize_area(const ImageTensor& in, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ConfigError("resize target must be positive");
  if (out_h == in.height() && out_w == in.width()) return in;
  const double ry = static_cast<double>(in.height()) / out_h;
  const double rx = static_cast<double>(in.width()) / out_w;
  ImageTensor out(ImageShape{out_h, out_w, in.channels()});
  for (int y = 0; y < out_h; ++y) {
    const int y0 = static_cast<int>(std::floor(y * ry));
    const int y1 = std::min(in.height(), static_cast<int>(std::ceil((y + 1) * ry)));
    for (int x = 0; x < out_w; ++x) {
      const int x0 = static_cast<int>(std::floor(x * rx));
      const int x1 = std::min(in.width(), static_cast<int>(std::ceil((x + 1) * rx)));
      for (int c = 0; c < in.channels(); ++c) {
        double acc = 0.0;
        for (int sy = y0; sy < y1; ++sy) {
          const double wy = detail::overlap(sy, y, ry);
          for (int sx = x0; sx < x1; ++sx) {
            acc += wy * detail::overlap(sx, x, rx) * in.at(sy, sx, c);
          }
        }
        out.at(y, x, c) = acc / (ry * rx);
      }
    }
  }
  return out;
}

struct IdxHeader {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
};

inline IdxHeader read_idx_image_header(const std::string& path) {
  const auto b = detail::read_maybe_gzip(path);
  if (detail::read_be32(b, 0, path) != kIdxImagesMagic) {
    throw DataError("bad IDX image magic in " + path);
  }
  return {detail::read_be32(b, 4, path), detail::read_be32(b, 8, path),
          detail::read_be32(b, 12, path)};
}

// Loads up to `limit` examples (0 = all), scales pixels to [0,1] and
// optionally area-resizes to resize_to x resize_to.
inline std::vector<LabeledExample> load_mnist_idx(const std::string& images_path,
                                                  const std::string& labels_path,
                                                  std::size_t limit = 0,
                                                  std::optional<int> resize_to = {}) {
  const auto img = detail::read_maybe_gzip(images_path);
  const auto lab = detail::read_maybe_gzip(labels_path);
  if (detail::read_be32(img, 0, images_path) != kIdxImagesMagic) {
    throw DataError("bad IDX image magic in " + images_path);
  }
  if (detail::read_be32(lab, 0, labels_path) != kIdxLabelsMagic) {
    throw DataError("bad IDX label magic in " + labels_path);
  }
  const std::size_t count = detail::read_be32(img, 4, images_path);
  const std::size_t rows = detail::read_be32(img, 8, images_path);
  const std::size_t cols = detail::read_be32(img, 12, images_path);
  const std::size_t label_count = detail::read_be32(lab, 4, labels_path);
  if (count != label_count) {
    throw DataError("image/label count mismatch: " + std::to_string(count) + " vs " +
                    std::to_string(label_count));
  }
  if (rows == 0 || cols == 0) throw DataError("empty image dimensions in " + images_path);
  if (img.size() < 16 + count * rows * cols) throw DataError("truncated " + images_path);
  if (lab.size() < 8 + count) throw DataError("truncated " + labels_path);
  if (resize_to && *resize_to < 1) throw ConfigError("resize_to must be positive");

  const std::size_t n = limit == 0 ? count : std::min(limit, count);
  std::vector<LabeledExample> out;
  out.reserve(n);
  const ImageShape shape{static_cast<int>(rows), static_cast<int>(cols), 1};
  for (std::size_t i = 0; i < n; ++i) {
    ImageTensor x(shape);
    const unsigned char* p = &img[16 + i * rows * cols];
    for (std::size_t k = 0; k < rows * cols; ++k) x.data[k] = p[k] / 255.0;
    if (resize_to) x = resize_area(x, *resize_to, *resize_to);
    const int y = lab[8 + i];
    if (y > 9) throw DataError("label " + std::to_string(y) + " outside 0..9");
    out.push_back({std::move(x), y});
  }
  return out;
}

struct SynthSpec {
  std::size_t n = 100;
  int classes = 10;
  int image_size = 8;
  int channels = 1;
  double contrast = 1.0;   // blob amplitude
  double noise = 0.05;     // uniform background noise amplitude
  std::uint64_t seed = 0;

  void validate() const {
    if (classes < 2) throw ConfigError("synthetic dataset needs >= 2 classes");
    if (image_size < 2) throw ConfigError("synthetic image_size must be >= 2");
    if (channels < 1) throw ConfigError("synthetic channels must be >= 1");
    if (n < 1) throw ConfigError("synthetic n must be >= 1");
    if (!(contrast >= 0.0) || !(noise >= 0.0)) {
      throw ConfigError("synthetic contrast and noise must be >= 0");
    }
  }
};

// Labels are assigned round-robin. Each class owns a blob centre, width and
// per-channel tint drawn from the seed; an example is its class blob scaled
// by `contrast`, plus small background noise and a jitter of the centre,
// clamped to [0,1].
inline std::vector<LabeledExample> synth_dataset(const SynthSpec& spec) {
  spec.validate();
  const double S = spec.image_size;
  struct Proto {
    double cy, cx, width;
    std::vector<double> tint;
  };
  std::vector<Proto> protos;
  RngStream proto_rng = RngStream::derive(spec.seed, {0x5e7, 0});
  for (int k = 0; k < spec.classes; ++k) {
    Proto p;
    p.cy = (0.15 + 0.7 * proto_rng.uniform()) * S;
    p.cx = (0.15 + 0.7 * proto_rng.uniform()) * S;
    p.width = (0.12 + 0.1 * proto_rng.uniform()) * S;
    for (int c = 0; c < spec.channels; ++c) p.tint.push_back(0.6 + 0.4 * proto_rng.uniform());
    protos.push_back(std::move(p));
  }
  std::vector<LabeledExample> out;
  out.reserve(spec.n);
  const ImageShape shape{spec.image_size, spec.image_size, spec.channels};
  for (std::size_t i = 0; i < spec.n; ++i) {
    const int y = static_cast<int>(i % static_cast<std::size_t>(spec.classes));
    const Proto& p = protos[static_cast<std::size_t>(y)];
    RngStream rng = RngStream::derive(spec.seed, {0x5e7, 1, i});
    const double jy = (rng.uniform() - 0.5) * 0.1 * S;
    const double jx = (rng.uniform() - 0.5) * 0.1 * S;
    ImageTensor x(shape);
    for (int r = 0; r < spec.image_size; ++r) {
      for (int q = 0; q < spec.image_size; ++q) {
        const double dy = r + 0.5 - p.cy - jy, dx = q + 0.5 - p.cx - jx;
        const double blob = std::exp(-(dy * dy + dx * dx) / (2.0 * p.width * p.width));
        for (int c = 0; c < spec.channels; ++c) {
          x.at(r, q, c) = spec.contrast * p.tint[static_cast<std::size_t>(c)] * blob +
                          spec.noise * rng.uniform();
        }
      }
    }
    x.clamp01();
    out.push_back({std::move(x), y});
  }
  return out;
}

}  // namespace dirdp

#endif  // DIRDP_DATA_HPP_
