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

// Binary PGM (P5, maxval 255) images, one file per channel.

#ifndef DIRDP_IMAGE_IO_HPP_
#define DIRDP_IMAGE_IO_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "dirdp/error.hpp"
#include "dirdp/tensor.hpp"

namespace dirdp {

// Pixels are clamped to [0,1] and mapped to round(255 v).
inline void write_pgm(std::ostream& os, const ImageTensor& img, int channel = 0) {
  if (channel < 0 || channel >= img.channels()) {
    throw std::invalid_argument("write_pgm: channel out of range");
  }
  os << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      const double v = std::clamp(img.at(r, c, channel), 0.0, 1.0);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
    }
  }
  if (!os) throw DataError("write_pgm: write failed");
}

inline void write_pgm(const std::string& path, const ImageTensor& img, int channel = 0) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot create " + path);
  write_pgm(f, img, channel);
}

// Horizontal strip of equally sized images separated by a 1-pixel white gap.
inline ImageTensor image_strip(const std::vector<ImageTensor>& images) {
  if (images.empty()) throw std::invalid_argument("image_strip: no images");
  const ImageShape s = images.front().shape;
  const int n = static_cast<int>(images.size());
  ImageTensor out(ImageShape{s.height, n * s.width + (n - 1), s.channels}, 1.0);
  for (int k = 0; k < n; ++k) {
    if (!(images[static_cast<std::size_t>(k)].shape == s)) {
      throw std::invalid_argument("image_strip: shape mismatch");
    }
    for (int r = 0; r < s.height; ++r) {
      for (int c = 0; c < s.width; ++c) {
        for (int ch = 0; ch < s.channels; ++ch) {
          out.at(r, k * (s.width + 1) + c, ch) = images[static_cast<std::size_t>(k)].at(r, c, ch);
        }
      }
    }
  }
  return out;
}

// Reads a P5 file with maxval 255 into a single-channel image in [0,1].
inline ImageTensor read_pgm(std::istream& is) {
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (magic != "P5" || w < 1 || h < 1 || maxval != 255) {
    throw DataError("read_pgm: unsupported header");
  }
  is.get();
  ImageTensor img(ImageShape{h, w, 1});
  for (double& v : img.data) {
    const int b = is.get();
    if (b == EOF) throw DataError("read_pgm: truncated pixel data");
    v = b / 255.0;
  }
  return img;
}

}  // namespace dirdp

#endif  // DIRDP_IMAGE_IO_HPP_
