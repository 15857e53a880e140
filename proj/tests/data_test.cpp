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

#include "dirdp/data.hpp"

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dirdp/image_io.hpp"
#include "dirdp/training.hpp"
#include "gtest/gtest.h"

namespace dirdp {
namespace {

namespace fs = std::filesystem;

const std::string kMnistDir = DIRDP_DATA_DIR "/mnist5k/";

std::string temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dirdp_data_test";
  fs::create_directories(dir);
  return (dir / name).string();
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& b) {
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

std::vector<unsigned char> be32(std::uint32_t v) {
  return {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
}

// A 3-image 2x3 IDX pair, written uncompressed.
void write_tiny_idx(const std::string& images, const std::string& labels,
                    std::uint32_t image_magic = kIdxImagesMagic, std::uint32_t label_count = 3,
                    std::size_t drop_bytes = 0) {
  std::vector<unsigned char> img = be32(image_magic);
  for (std::uint32_t v : {3u, 2u, 3u}) {
    auto b = be32(v);
    img.insert(img.end(), b.begin(), b.end());
  }
  for (int i = 0; i < 18; ++i) img.push_back(static_cast<unsigned char>(i * 15));
  img.resize(img.size() - drop_bytes);
  std::vector<unsigned char> lab = be32(kIdxLabelsMagic);
  auto n = be32(label_count);
  lab.insert(lab.end(), n.begin(), n.end());
  for (std::uint32_t i = 0; i < label_count; ++i) lab.push_back(static_cast<unsigned char>(i + 4));
  write_bytes(images, img);
  write_bytes(labels, lab);
}

TEST(MnistIdxTest, SubsetHeaders) {
  const IdxHeader train = read_idx_image_header(kMnistDir + "train-images-idx3-ubyte.gz");
  EXPECT_EQ(train.count, 4000u);
  EXPECT_EQ(train.rows, 28u);
  EXPECT_EQ(train.cols, 28u);
  const IdxHeader test = read_idx_image_header(kMnistDir + "t10k-images-idx3-ubyte.gz");
  EXPECT_EQ(test.count, 1000u);
}

TEST(MnistIdxTest, LimitOneAndPixelRange) {
  const auto one = load_mnist_idx(kMnistDir + "train-images-idx3-ubyte.gz",
                                  kMnistDir + "train-labels-idx1-ubyte.gz", 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_GE(one[0].y, 0);
  EXPECT_LE(one[0].y, 9);
  EXPECT_EQ(one[0].x.shape, (ImageShape{28, 28, 1}));
  for (double v : one[0].x.data) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(MnistIdxTest, AllDigitsPresent) {
  const auto d = load_mnist_idx(kMnistDir + "t10k-images-idx3-ubyte.gz",
                                kMnistDir + "t10k-labels-idx1-ubyte.gz");
  ASSERT_EQ(d.size(), 1000u);
  std::map<int, int> hist;
  for (const auto& ex : d) ++hist[ex.y];
  EXPECT_EQ(hist.size(), 10u);
}

TEST(MnistIdxTest, ResizePreservesMean) {
  const auto full = load_mnist_idx(kMnistDir + "train-images-idx3-ubyte.gz",
                                   kMnistDir + "train-labels-idx1-ubyte.gz", 20);
  const auto small = load_mnist_idx(kMnistDir + "train-images-idx3-ubyte.gz",
                                    kMnistDir + "train-labels-idx1-ubyte.gz", 20, 14);
  for (std::size_t i = 0; i < full.size(); ++i) {
    EXPECT_EQ(small[i].x.shape, (ImageShape{14, 14, 1}));
    EXPECT_EQ(small[i].y, full[i].y);
    double a = 0, b = 0;
    for (double v : full[i].x.data) a += v;
    for (double v : small[i].x.data) b += v;
    a /= full[i].x.size();
    b /= small[i].x.size();
    EXPECT_NEAR(b, a, 0.02 * a);
  }
}

TEST(MnistIdxTest, PlainFilesAndValues) {
  const std::string im = temp_path("ok-images"), lb = temp_path("ok-labels");
  write_tiny_idx(im, lb);
  const auto d = load_mnist_idx(im, lb);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[1].y, 5);
  EXPECT_EQ(d[1].x.shape, (ImageShape{2, 3, 1}));
  EXPECT_DOUBLE_EQ(d[1].x.at(0, 0), 6 * 15 / 255.0);
  EXPECT_DOUBLE_EQ(d[1].x.at(1, 2), 11 * 15 / 255.0);
}

TEST(MnistIdxTest, MalformedInputsRaiseDataError) {
  const std::string im = temp_path("bad-images"), lb = temp_path("bad-labels");
  write_tiny_idx(im, lb, 0x00000802);
  EXPECT_THROW(load_mnist_idx(im, lb), DataError);
  write_tiny_idx(im, lb, kIdxImagesMagic, 2);
  EXPECT_THROW(load_mnist_idx(im, lb), DataError);
  write_tiny_idx(im, lb, kIdxImagesMagic, 3, 5);
  EXPECT_THROW(load_mnist_idx(im, lb), DataError);
  EXPECT_THROW(load_mnist_idx(temp_path("does-not-exist"), lb), DataError);
  // Labels file passed as images.
  write_tiny_idx(im, lb);
  EXPECT_THROW(load_mnist_idx(lb, lb), DataError);
}

TEST(ResizeTest, AreaAverageHandValues) {
  ImageTensor x(ImageShape{2, 2, 1}, FlatVector{0, 1, 0.5, 0.5});
  const ImageTensor y = resize_area(x, 1, 1);
  EXPECT_DOUBLE_EQ(y.data[0], 0.5);
  // 3 -> 2: the middle source column is shared half/half.
  ImageTensor row(ImageShape{1, 3, 1}, FlatVector{0, 1, 2});
  const ImageTensor r = resize_area(row, 1, 2);
  EXPECT_NEAR(r.data[0], (0 * 1.0 + 1 * 0.5) / 1.5, 1e-15);
  EXPECT_NEAR(r.data[1], (1 * 0.5 + 2 * 1.0) / 1.5, 1e-15);
}

TEST(SynthTest, DeterministicBalancedAndInRange) {
  SynthSpec s;
  s.n = 103;
  s.classes = 10;
  s.seed = 5;
  const auto a = synth_dataset(s), b = synth_dataset(s);
  ASSERT_EQ(a.size(), 103u);
  std::map<int, int> hist;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x.data, b[i].x.data);
    EXPECT_EQ(a[i].y, b[i].y);
    ++hist[a[i].y];
    for (double v : a[i].x.data) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  for (const auto& [label, count] : hist) {
    EXPECT_GE(count, 10);
    EXPECT_LE(count, 11);
  }
  s.seed = 6;
  EXPECT_NE(synth_dataset(s)[0].x.data, a[0].x.data);
}

TEST(SynthTest, ThreeChannelMode) {
  SynthSpec s;
  s.n = 4;
  s.channels = 3;
  s.image_size = 6;
  EXPECT_EQ(synth_dataset(s)[0].x.shape, (ImageShape{6, 6, 3}));
  s.classes = 1;
  EXPECT_THROW(synth_dataset(s), ConfigError);
}

TEST(SynthTest, HighContrastIsLinearlySeparable) {
  // Multiclass perceptron on raw pixels reaches zero training error.
  SynthSpec s;
  s.n = 200;
  s.classes = 10;
  s.contrast = 1.0;
  s.seed = 2;
  const auto d = synth_dataset(s);
  const std::size_t dim = d[0].x.size() + 1;
  std::vector<FlatVector> w(10, FlatVector(dim, 0.0));
  auto score = [&](int k, const ImageTensor& x) {
    double acc = w[k][dim - 1];
    for (std::size_t i = 0; i + 1 < dim; ++i) acc += w[k][i] * x.data[i];
    return acc;
  };
  int errors = 1;
  for (int epoch = 0; epoch < 2000 && errors > 0; ++epoch) {
    errors = 0;
    for (const auto& ex : d) {
      int best = 0;
      for (int k = 1; k < 10; ++k) if (score(k, ex.x) > score(best, ex.x)) best = k;
      if (best != ex.y) {
        ++errors;
        for (std::size_t i = 0; i + 1 < dim; ++i) {
          w[ex.y][i] += ex.x.data[i];
          w[best][i] -= ex.x.data[i];
        }
        w[ex.y][dim - 1] += 1;
        w[best][dim - 1] -= 1;
      }
    }
  }
  EXPECT_EQ(errors, 0);
}

TEST(PgmTest, RoundTripAndHeader) {
  ImageTensor x(ImageShape{3, 4, 1});
  for (std::size_t i = 0; i < x.size(); ++i) x.data[i] = i / 11.0;
  x.data[0] = -0.5;  // clamped
  x.data[1] = 1.5;
  std::stringstream ss;
  write_pgm(ss, x);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 11), "P5\n4 3\n255\n");
  EXPECT_EQ(bytes.size(), 11u + 12u);
  const ImageTensor back = read_pgm(ss);
  EXPECT_EQ(back.data[0], 0.0);
  EXPECT_EQ(back.data[1], 1.0);
  for (std::size_t i = 2; i < x.size(); ++i) EXPECT_NEAR(back.data[i], x.data[i], 0.5 / 255.0);
}

TEST(PgmTest, StripLayout) {
  const ImageTensor a(ImageShape{2, 2, 1}, 0.0), b(ImageShape{2, 2, 1}, 0.5);
  const ImageTensor s = image_strip({a, b});
  EXPECT_EQ(s.shape, (ImageShape{2, 5, 1}));
  EXPECT_EQ(s.at(0, 2), 1.0);
  EXPECT_EQ(s.at(1, 4), 0.5);
}

}  // namespace
}  // namespace dirdp
