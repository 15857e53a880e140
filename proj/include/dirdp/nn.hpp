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

// Small differentiable classifiers with exact reverse-mode gradients.
//
// Two architectures are supported:
//
//   mlp          dense(in -> hidden), tanh, dense(hidden -> classes)
//   lenet-small  conv5x5(same) -> sigmoid -> avgpool2,
//                conv5x5(same) -> sigmoid -> avgpool2, dense(-> classes)
//
// Both use smooth activations so the gradient-matching objectives of the
// reconstruction attacks are differentiable in the input.
//
// All parameters live in one flat vector. Layers are laid out in declaration
// order, each layer's weights before its bias. Dense weights are [out][in];
// conv weights are [out_ch][in_ch][ky][kx]. Feature maps are channel-last,
// matching ImageTensor.

#ifndef DIRDP_NN_HPP_
#define DIRDP_NN_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dirdp/error.hpp"
#include "dirdp/parallel.hpp"
#include "dirdp/rng.hpp"
#include "dirdp/tensor.hpp"

namespace dirdp {

enum class Architecture { kMlp, kLeNetSmall };

inline std::string to_string(Architecture a) {
  return a == Architecture::kMlp ? "mlp" : "lenet-small";
}

inline Architecture parse_architecture(const std::string& s) {
  if (s == "mlp") return Architecture::kMlp;
  if (s == "lenet-small" || s == "lenet") return Architecture::kLeNetSmall;
  throw ConfigError("unknown architecture '" + s + "'");
}

struct ModelSpec {
  Architecture arch = Architecture::kMlp;
  ImageShape input{8, 8, 1};
  int num_classes = 10;
  int hidden = 128;        // mlp only
  int conv1_channels = 6;  // lenet-small only
  int conv2_channels = 12;

  void validate() const {
    if (input.height <= 0 || input.width <= 0 || input.channels <= 0) {
      throw ConfigError("model input shape must be positive");
    }
    if (num_classes < 2) throw ConfigError("model needs at least 2 classes");
    if (arch == Architecture::kMlp && hidden < 1) {
      throw ConfigError("mlp hidden width must be >= 1");
    }
    if (arch == Architecture::kLeNetSmall &&
        (conv1_channels < 1 || conv2_channels < 1 || input.height < 4 ||
         input.width < 4)) {
      throw ConfigError("lenet-small needs >= 4x4 input and >= 1 channel");
    }
  }
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

enum class OpKind { kDense, kConv, kTanh, kSigmoid, kAvgPool2 };

struct Op {
  OpKind kind;
  ImageShape in;
  ImageShape out;
  std::size_t weight_offset = 0;
  std::size_t weight_size = 0;
  std::size_t bias_offset = 0;
  std::size_t bias_size = 0;
  int fan_in = 0;
};

inline constexpr int kConvKernel = 5;

// Builds the op sequence for a spec; returns the total parameter count.
inline std::vector<Op> build_ops(const ModelSpec& spec, std::size_t* count) {
  spec.validate();
  std::vector<Op> ops;
  std::size_t offset = 0;
  auto add_param_op = [&](OpKind kind, ImageShape in, ImageShape out,
                          std::size_t wsize, std::size_t bsize, int fan_in) {
    Op op{kind, in, out};
    op.weight_offset = offset;
    op.weight_size = wsize;
    offset += wsize;
    op.bias_offset = offset;
    op.bias_size = bsize;
    offset += bsize;
    op.fan_in = fan_in;
    ops.push_back(op);
  };
  auto flat = [](std::size_t n) { return ImageShape{1, 1, static_cast<int>(n)}; };
  const std::size_t in_size = spec.input.size();
  const auto classes = static_cast<std::size_t>(spec.num_classes);
  if (spec.arch == Architecture::kMlp) {
    const auto hidden = static_cast<std::size_t>(spec.hidden);
    add_param_op(OpKind::kDense, spec.input, flat(hidden), hidden * in_size,
                 hidden, static_cast<int>(in_size));
    ops.push_back(Op{OpKind::kTanh, flat(hidden), flat(hidden)});
    add_param_op(OpKind::kDense, flat(hidden), flat(classes), classes * hidden,
                 classes, spec.hidden);
  } else {
    ImageShape s = spec.input;
    for (int out_ch : {spec.conv1_channels, spec.conv2_channels}) {
      ImageShape conv_out{s.height, s.width, out_ch};
      const auto k2 = static_cast<std::size_t>(kConvKernel * kConvKernel);
      add_param_op(OpKind::kConv, s, conv_out,
                   static_cast<std::size_t>(out_ch) *
                       static_cast<std::size_t>(s.channels) * k2,
                   static_cast<std::size_t>(out_ch),
                   s.channels * kConvKernel * kConvKernel);
      ops.push_back(Op{OpKind::kSigmoid, conv_out, conv_out});
      ImageShape pooled{std::max(1, s.height / 2), std::max(1, s.width / 2),
                        out_ch};
      ops.push_back(Op{OpKind::kAvgPool2, conv_out, pooled});
      s = pooled;
    }
    add_param_op(OpKind::kDense, s, flat(classes), classes * s.size(), classes,
                 static_cast<int>(s.size()));
  }
  if (count != nullptr) *count = offset;
  return ops;
}

class NetworkParams {
 public:
  NetworkParams() = default;

  // Zero-initialized parameters.
  explicit NetworkParams(const ModelSpec& spec) : spec_(spec) {
    std::size_t n = 0;
    ops_ = build_ops(spec_, &n);
    values_.assign(n, 0.0);
  }

  // Rebuilds from a flattened vector; the inverse of flatten().
  static NetworkParams unflatten(const ModelSpec& spec, FlatVector values) {
    NetworkParams p(spec);
    require_same_length(values.size(), p.values_.size(), "unflatten");
    p.values_ = std::move(values);
    return p;
  }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
  static NetworkParams random(const ModelSpec& spec, std::uint64_t seed) {
    NetworkParams p(spec);
    RngStream rng = RngStream::derive(seed, {0x1417});
    for (const Op& op : p.ops_) {
      if (op.weight_size == 0) continue;
      const double bound = 1.0 / std::sqrt(static_cast<double>(op.fan_in));
      auto fill = [&](std::size_t off, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
          p.values_[off + i] = bound * (2.0 * rng.uniform() - 1.0);
        }
      };
      fill(op.weight_offset, op.weight_size);
      fill(op.bias_offset, op.bias_size);
    }
    return p;
  }

  const ModelSpec& spec() const { return spec_; }
  const std::vector<Op>& ops() const { return ops_; }
  std::size_t size() const { return values_.size(); }
  const FlatVector& flatten() const { return values_; }
  FlatVector& values() { return values_; }
  std::span<const double> values() const { return values_; }

  // [begin, end) ranges of each weight and bias tensor, in layout order.
  std::vector<std::pair<std::size_t, std::size_t>> tensor_ranges() const {
    std::vector<std::pair<std::size_t, std::size_t>> r;
    for (const Op& op : ops_) {
      if (op.weight_size == 0) continue;
      r.emplace_back(op.weight_offset, op.weight_offset + op.weight_size);
      r.emplace_back(op.bias_offset, op.bias_offset + op.bias_size);
    }
    return r;
  }

 private:
  ModelSpec spec_;
  std::vector<Op> ops_;
  FlatVector values_;
};

struct LabeledExample {
  ImageTensor x;
  int y = 0;
};

using PerExampleGrads = std::vector<FlatVector>;

namespace detail {

inline double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// Activations at every op boundary; acts[0] is the input.
struct Tape {
  std::vector<FlatVector> acts;
};

inline void check_input(const NetworkParams& params, const ImageShape& s) {
  if (!(s == params.spec().input)) {
    throw std::invalid_argument(
        "network input shape mismatch: expected " +
        std::to_string(params.spec().input.height) + "x" +
        std::to_string(params.spec().input.width) + "x" +
        std::to_string(params.spec().input.channels));
  }
}

inline void conv_forward(const Op& op, std::span<const double> w,
                         std::span<const double> b, std::span<const double> in,
                         std::span<double> out) {
  const int H = op.in.height, W = op.in.width, C = op.in.channels;
  const int O = op.out.channels, R = kConvKernel / 2;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int o = 0; o < O; ++o) {
        double acc = b[o];
        for (int ky = 0; ky < kConvKernel; ++ky) {
          const int iy = y + ky - R;
          if (iy < 0 || iy >= H) continue;
          for (int kx = 0; kx < kConvKernel; ++kx) {
            const int ix = x + kx - R;
            if (ix < 0 || ix >= W) continue;
            const double* src = &in[(iy * W + ix) * C];
            const double* k = &w[((o * C) * kConvKernel + ky) * kConvKernel + kx];
            for (int c = 0; c < C; ++c) {
              acc += k[c * kConvKernel * kConvKernel] * src[c];
            }
          }
        }
        out[(y * W + x) * O + o] = acc;
      }
    }
  }
}

inline void conv_backward(const Op& op, std::span<const double> w,
                          std::span<const double> in,
                          std::span<const double> dout, std::span<double> dw,
                          std::span<double> db, std::span<double> din) {
  const int H = op.in.height, W = op.in.width, C = op.in.channels;
  const int O = op.out.channels, R = kConvKernel / 2;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int o = 0; o < O; ++o) {
        const double g = dout[(y * W + x) * O + o];
        if (g == 0.0) continue;
        db[o] += g;
        for (int ky = 0; ky < kConvKernel; ++ky) {
          const int iy = y + ky - R;
          if (iy < 0 || iy >= H) continue;
          for (int kx = 0; kx < kConvKernel; ++kx) {
            const int ix = x + kx - R;
            if (ix < 0 || ix >= W) continue;
            const std::size_t src = static_cast<std::size_t>((iy * W + ix) * C);
            const std::size_t k =
                static_cast<std::size_t>(((o * C) * kConvKernel + ky) * kConvKernel + kx);
            for (int c = 0; c < C; ++c) {
              const std::size_t kc = k + static_cast<std::size_t>(c * kConvKernel * kConvKernel);
              dw[kc] += g * in[src + c];
              din[src + c] += g * w[kc];
            }
          }
        }
      }
    }
  }
}

inline Tape run_forward(const NetworkParams& params, std::span<const double> x) {
  Tape tape;
  tape.acts.reserve(params.ops().size() + 1);
  tape.acts.emplace_back(x.begin(), x.end());
  const auto theta = params.values();
  for (const Op& op : params.ops()) {
    const FlatVector& in = tape.acts.back();
    FlatVector out(op.out.size());
    switch (op.kind) {
      case OpKind::kDense: {
        const auto w = theta.subspan(op.weight_offset, op.weight_size);
        const auto b = theta.subspan(op.bias_offset, op.bias_size);
        const std::size_t n_in = in.size();
        for (std::size_t o = 0; o < out.size(); ++o) {
          double acc = b[o];
          const double* row = &w[o * n_in];
          for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * in[i];
          out[o] = acc;
        }
        break;
      }
      case OpKind::kConv:
        conv_forward(op, theta.subspan(op.weight_offset, op.weight_size),
                     theta.subspan(op.bias_offset, op.bias_size), in, out);
        break;
      case OpKind::kTanh:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
        break;
      case OpKind::kSigmoid:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = sigmoid(in[i]);
        break;
      case OpKind::kAvgPool2: {
        const int W = op.in.width, C = op.in.channels;
        for (int y = 0; y < op.out.height; ++y) {
          for (int x = 0; x < op.out.width; ++x) {
            for (int c = 0; c < C; ++c) {
              const double s = in[((2 * y) * W + 2 * x) * C + c] +
                               in[((2 * y) * W + 2 * x + 1) * C + c] +
                               in[((2 * y + 1) * W + 2 * x) * C + c] +
                               in[((2 * y + 1) * W + 2 * x + 1) * C + c];
              out[(y * op.out.width + x) * C + c] = 0.25 * s;
            }
          }
        }
        break;
      }
    }
    tape.acts.push_back(std::move(out));
  }
  return tape;
}

// Backpropagates dlogits through the tape. Writes the parameter gradient
// into grad_params (accumulating) and returns the input gradient.
inline FlatVector run_backward(const NetworkParams& params, const Tape& tape,
                               FlatVector dout, std::span<double> grad_params) {
  const auto theta = params.values();
  const auto& ops = params.ops();
  for (std::size_t k = ops.size(); k-- > 0;) {
    const Op& op = ops[k];
    const FlatVector& in = tape.acts[k];
    const FlatVector& out = tape.acts[k + 1];
    FlatVector din(in.size(), 0.0);
    switch (op.kind) {
      case OpKind::kDense: {
        const auto w = theta.subspan(op.weight_offset, op.weight_size);
        auto dw = grad_params.subspan(op.weight_offset, op.weight_size);
        auto db = grad_params.subspan(op.bias_offset, op.bias_size);
        const std::size_t n_in = in.size();
        for (std::size_t o = 0; o < dout.size(); ++o) {
          const double g = dout[o];
          db[o] += g;
          double* dwrow = &dw[o * n_in];
          const double* wrow = &w[o * n_in];
          for (std::size_t i = 0; i < n_in; ++i) {
            dwrow[i] += g * in[i];
            din[i] += g * wrow[i];
          }
        }
        break;
      }
      case OpKind::kConv:
        conv_backward(op, theta.subspan(op.weight_offset, op.weight_size), in,
                      dout, grad_params.subspan(op.weight_offset, op.weight_size),
                      grad_params.subspan(op.bias_offset, op.bias_size), din);
        break;
      case OpKind::kTanh:
        for (std::size_t i = 0; i < in.size(); ++i) {
          din[i] = dout[i] * (1.0 - out[i] * out[i]);
        }
        break;
      case OpKind::kSigmoid:
        for (std::size_t i = 0; i < in.size(); ++i) {
          din[i] = dout[i] * out[i] * (1.0 - out[i]);
        }
        break;
      case OpKind::kAvgPool2: {
        const int W = op.in.width, C = op.in.channels;
        for (int y = 0; y < op.out.height; ++y) {
          for (int x = 0; x < op.out.width; ++x) {
            for (int c = 0; c < C; ++c) {
              const double g = 0.25 * dout[(y * op.out.width + x) * C + c];
              din[((2 * y) * W + 2 * x) * C + c] += g;
              din[((2 * y) * W + 2 * x + 1) * C + c] += g;
              din[((2 * y + 1) * W + 2 * x) * C + c] += g;
              din[((2 * y + 1) * W + 2 * x + 1) * C + c] += g;
            }
          }
        }
        break;
      }
    }
    dout = std::move(din);
  }
  return dout;
}

inline FlatVector log_softmax(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  const double lse = m + std::log(s);
  FlatVector out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  return out;
}

}  // namespace detail

inline FlatVector softmax(std::span<const double> z) {
  FlatVector out = detail::log_softmax(z);
  for (double& v : out) v = std::exp(v);
  return out;
}

// One logit per class.
inline FlatVector forward(const NetworkParams& params, const ImageTensor& x) {
  detail::check_input(params, x.shape);
  return std::move(detail::run_forward(params, x.data).acts.back());
}

struct LossAndGrad {
  double loss = 0.0;
  FlatVector grad;
};

// Cross-entropy against a soft label y_soft (a probability vector), with
// gradients w.r.t. the parameters, the input pixels and y_soft itself.
struct SoftLabelGrads {
  double loss = 0.0;
  FlatVector grad_params;
  FlatVector grad_x;
  FlatVector grad_ysoft;
};

inline SoftLabelGrads soft_label_loss_and_grads(const NetworkParams& params,
                                                const ImageTensor& x,
                                                std::span<const double> y_soft) {
  detail::check_input(params, x.shape);
  const auto classes = static_cast<std::size_t>(params.spec().num_classes);
  if (y_soft.size() != classes) {
    throw std::invalid_argument("soft label has wrong number of classes");
  }
  detail::Tape tape = detail::run_forward(params, x.data);
  const FlatVector logp = detail::log_softmax(tape.acts.back());
  SoftLabelGrads r;
  double ysum = 0.0;
  r.grad_ysoft.resize(classes);
  for (std::size_t k = 0; k < classes; ++k) {
    r.loss -= y_soft[k] * logp[k];
    ysum += y_soft[k];
    r.grad_ysoft[k] = -logp[k];
  }
  // d/dz of -sum_k y_k log p_k = p * sum(y) - y.
  FlatVector dz(classes);
  for (std::size_t k = 0; k < classes; ++k) {
    dz[k] = std::exp(logp[k]) * ysum - y_soft[k];
  }
  r.grad_params.assign(params.size(), 0.0);
  r.grad_x = detail::run_backward(params, tape, std::move(dz), r.grad_params);
  return r;
}

inline FlatVector one_hot(int label, int classes) {
  if (label < 0 || label >= classes) {
    throw std::invalid_argument("label " + std::to_string(label) +
                                " outside [0, " + std::to_string(classes) + ")");
  }
  FlatVector y(static_cast<std::size_t>(classes), 0.0);
  y[static_cast<std::size_t>(label)] = 1.0;
  return y;
}

inline LossAndGrad loss_and_grad(const NetworkParams& params,
                                 const LabeledExample& ex) {
  detail::check_input(params, ex.x.shape);
  const int classes = params.spec().num_classes;
  if (ex.y < 0 || ex.y >= classes) {
    throw std::invalid_argument("label outside class range");
  }
  detail::Tape tape = detail::run_forward(params, ex.x.data);
  const FlatVector logp = detail::log_softmax(tape.acts.back());
  FlatVector dz(logp.size());
  for (std::size_t k = 0; k < dz.size(); ++k) dz[k] = std::exp(logp[k]);
  dz[static_cast<std::size_t>(ex.y)] -= 1.0;
  LossAndGrad r;
  r.loss = -logp[static_cast<std::size_t>(ex.y)];
  r.grad.assign(params.size(), 0.0);
  detail::run_backward(params, tape, std::move(dz), r.grad);
  return r;
}

// Mean cross-entropy over a batch and its gradient.
inline LossAndGrad mean_loss_and_grad(const NetworkParams& params,
                                      std::span<const LabeledExample> batch) {
  if (batch.empty()) throw std::invalid_argument("mean_loss_and_grad: empty batch");
  LossAndGrad total;
  total.grad.assign(params.size(), 0.0);
  for (const LabeledExample& ex : batch) {
    LossAndGrad g = loss_and_grad(params, ex);
    total.loss += g.loss;
    axpy(1.0, g.grad, total.grad);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  total.loss *= inv;
  for (double& v : total.grad) v *= inv;
  return total;
}

// One backward pass per example. Each slot is written by exactly one worker,
// so the result does not depend on the thread count.
inline PerExampleGrads per_example_grads(const NetworkParams& params,
                                         std::span<const LabeledExample> batch,
                                         unsigned threads = 1) {
  if (batch.empty()) throw std::invalid_argument("per_example_grads: empty batch");
  PerExampleGrads grads(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    grads[i] = loss_and_grad(params, batch[i]).grad;
  });
  return grads;
}

// Central finite differences, h_i = h * max(1, |theta_i|).
inline FlatVector finite_difference_grad(const NetworkParams& params,
                                         const LabeledExample& ex,
                                         double h = 1e-5) {
  NetworkParams probe = params;
  FlatVector out(params.size());
  auto loss_at = [&] { return loss_and_grad(probe, ex).loss; };
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = probe.values()[i];
    const double step = h * std::max(1.0, std::abs(orig));
    probe.values()[i] = orig + step;
    const double up = loss_at();
    probe.values()[i] = orig - step;
    const double down = loss_at();
    probe.values()[i] = orig;
    out[i] = (up - down) / (2.0 * step);
  }
  return out;
}

// Relative error with a floor on the denominator so coordinates whose true
// derivative is ~0 are judged on absolute error.
inline constexpr double kGradCheckFloor = 1e-5;

inline double relative_error(double a, double b,
                             double floor = kGradCheckFloor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t num_params = 0;
};

inline GradCheckResult check_gradient(const NetworkParams& params,
                                      const LabeledExample& ex,
                                      double h = 1e-5) {
  const FlatVector analytic = loss_and_grad(params, ex).grad;
  const FlatVector numeric = finite_difference_grad(params, ex, h);
  GradCheckResult r;
  r.num_params = params.size();
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double e = relative_error(analytic[i], numeric[i]);
    if (e > r.max_relative_error) {
      r.max_relative_error = e;
      r.worst_index = i;
    }
  }
  return r;
}

// Checkpoint format: one ASCII descriptor line terminated by '\n', then
// `count` IEEE-754 binary64 values in little-endian byte order.
//
//   dirdp-params v1 arch=mlp input=8x8x1 classes=10 hidden=128 conv=6,12 count=N
inline std::string checkpoint_descriptor(const ModelSpec& s, std::size_t count) {
  std::ostringstream os;
  os << "dirdp-params v1 arch=" << to_string(s.arch) << " input="
     << s.input.height << "x" << s.input.width << "x" << s.input.channels
     << " classes=" << s.num_classes << " hidden=" << s.hidden
     << " conv=" << s.conv1_channels << "," << s.conv2_channels
     << " count=" << count;
  return os.str();
}

inline void save_checkpoint(const NetworkParams& params, std::ostream& os) {
  os << checkpoint_descriptor(params.spec(), params.size()) << '\n';
  for (double v : params.flatten()) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    os.write(bytes, 8);
  }
  if (!os) throw std::runtime_error("save_checkpoint: write failed");
}

inline NetworkParams load_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("checkpoint: missing descriptor");
  std::istringstream ls(line);
  std::string magic, version;
  ls >> magic >> version;
  if (magic != "dirdp-params" || version != "v1") {
    throw DataError("checkpoint: bad descriptor '" + line + "'");
  }
  ModelSpec spec;
  std::size_t count = 0;
  bool have_count = false;
  std::string field;
  while (ls >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw DataError("checkpoint: bad field " + field);
    const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
    try {
      if (key == "arch") {
        spec.arch = parse_architecture(val);
      } else if (key == "input") {
        char x1, x2;
        std::istringstream vs(val);
        vs >> spec.input.height >> x1 >> spec.input.width >> x2 >> spec.input.channels;
        if (!vs || x1 != 'x' || x2 != 'x') throw DataError("bad input shape");
      } else if (key == "classes") {
        spec.num_classes = std::stoi(val);
      } else if (key == "hidden") {
        spec.hidden = std::stoi(val);
      } else if (key == "conv") {
        char comma;
        std::istringstream vs(val);
        vs >> spec.conv1_channels >> comma >> spec.conv2_channels;
        if (!vs || comma != ',') throw DataError("bad conv field");
      } else if (key == "count") {
        count = std::stoull(val);
        have_count = true;
      }
    } catch (const std::logic_error&) {
      throw DataError("checkpoint: bad value in " + field);
    }
  }
  if (!have_count) throw DataError("checkpoint: descriptor lacks count");
  NetworkParams params(spec);
  if (params.size() != count) {
    throw DataError("checkpoint: count does not match architecture");
  }
  for (double& v : params.values()) {
    unsigned char bytes[8];
    if (!is.read(reinterpret_cast<char*>(bytes), 8)) {
      throw DataError("checkpoint: truncated parameter data");
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes[i]} << (8 * i);
    v = std::bit_cast<double>(bits);
  }
  return params;
}

}  // namespace dirdp

#endif  // DIRDP_NN_HPP_
