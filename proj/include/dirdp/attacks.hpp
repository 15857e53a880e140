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

// Gradient-inversion attacks on a single example's gradient.
//
// DLG minimizes ||grad(x', softmax(l')) - W||^2 over the dummy image x' and
// dummy label logits l' by plain gradient descent. Inverting Gradients
// minimizes 1 - cos(grad(x', y), W) + alpha * TV(x') over x' in [0,1]^n with
// the label known, by projected gradient descent.
//
// Both need the derivative of a function of the parameter gradient with
// respect to the inputs. Two ways are offered: central differences of the
// matching loss (any architecture) and exact double backprop for the
// dense-tanh-dense MLP.

#ifndef DIRDP_ATTACKS_HPP_
#define DIRDP_ATTACKS_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dirdp/error.hpp"
#include "dirdp/metrics.hpp"
#include "dirdp/nn.hpp"
#include "dirdp/parallel.hpp"
#include "dirdp/rng.hpp"
#include "dirdp/tensor.hpp"

namespace dirdp {

enum class AttackMethod { kDlg, kIga };
enum class HvpMode { kFiniteDiff, kAnalyticMlp };
enum class AttackInit { kGaussianRandom, kUniformRandom };

inline std::string to_string(AttackMethod m) { return m == AttackMethod::kDlg ? "dlg" : "iga"; }
inline std::string to_string(HvpMode m) {
  return m == HvpMode::kFiniteDiff ? "finite_diff" : "analytic_mlp";
}
inline std::string to_string(AttackInit m) {
  return m == AttackInit::kGaussianRandom ? "gaussian_random" : "uniform_random";
}

inline AttackMethod parse_attack_method(const std::string& s) {
  if (s == "dlg") return AttackMethod::kDlg;
  if (s == "iga") return AttackMethod::kIga;
  throw ConfigError("unknown attack method '" + s + "'");
}

inline HvpMode parse_hvp_mode(const std::string& s) {
  if (s == "finite_diff") return HvpMode::kFiniteDiff;
  if (s == "analytic_mlp") return HvpMode::kAnalyticMlp;
  throw ConfigError("unknown hvp_mode '" + s + "'");
}

inline AttackInit parse_attack_init(const std::string& s) {
  if (s == "gaussian_random") return AttackInit::kGaussianRandom;
  if (s == "uniform_random") return AttackInit::kUniformRandom;
  throw ConfigError("unknown attack init '" + s + "'");
}

struct AttackConfig {
  AttackMethod method = AttackMethod::kDlg;
  int iterations = 1000;
  double eta = 0.0;  // 0 selects the method default (0.1 DLG, 0.01 IGA)
  double alpha_tv = 1e-4;
  HvpMode hvp_mode = HvpMode::kFiniteDiff;
  AttackInit init = AttackInit::kUniformRandom;
  std::uint64_t seed = 0;
  double fd_step = 1e-5;
  unsigned threads = 1;

  double step_size() const {
    if (eta > 0.0) return eta;
    return method == AttackMethod::kDlg ? 0.1 : 0.01;
  }

  void validate() const {
    if (iterations < 1) throw ConfigError("attack iterations must be >= 1");
    if (!(alpha_tv >= 0.0)) throw ConfigError("alpha_tv must be >= 0");
    if (!(eta >= 0.0)) throw ConfigError("attack eta must be >= 0");
    if (!(fd_step > 0.0)) throw ConfigError("fd_step must be positive");
  }
};

// The optimization variables. label_logits is used by DLG, label by IGA.
struct DummyState {
  ImageTensor x;
  FlatVector label_logits;
  int label = -1;
};

struct AttackReport {
  ImageTensor reconstructed;   // lowest-loss iterate
  FlatVector label_logits;     // DLG only
  std::vector<double> loss_trajectory;  // entry t: loss after t steps
  double best_loss = std::numeric_limits<double>::infinity();
  int best_iteration = 0;
  bool diverged = false;
  std::optional<double> final_ssim;
  std::optional<double> final_mse;
};

// Anisotropic total variation: sum of absolute differences between
// horizontally and vertically adjacent pixels of each channel.
inline double total_variation(const ImageTensor& x) {
  double tv = 0.0;
  for (int c = 0; c < x.channels(); ++c) {
    for (int r = 0; r < x.height(); ++r) {
      for (int q = 0; q < x.width(); ++q) {
        if (r + 1 < x.height()) tv += std::abs(x.at(r + 1, q, c) - x.at(r, q, c));
        if (q + 1 < x.width()) tv += std::abs(x.at(r, q + 1, c) - x.at(r, q, c));
      }
    }
  }
  return tv;
}

// Subgradient of total_variation, using sign(0) = 0.
inline FlatVector total_variation_grad(const ImageTensor& x) {
  FlatVector g(x.size(), 0.0);
  auto sgn = [](double v) { return static_cast<double>((v > 0) - (v < 0)); };
  for (int c = 0; c < x.channels(); ++c) {
    for (int r = 0; r < x.height(); ++r) {
      for (int q = 0; q < x.width(); ++q) {
        if (r + 1 < x.height()) {
          const double s = sgn(x.at(r + 1, q, c) - x.at(r, q, c));
          g[x.index(r + 1, q, c)] += s;
          g[x.index(r, q, c)] -= s;
        }
        if (q + 1 < x.width()) {
          const double s = sgn(x.at(r, q + 1, c) - x.at(r, q, c));
          g[x.index(r, q + 1, c)] += s;
          g[x.index(r, q, c)] -= s;
        }
      }
    }
  }
  return g;
}

namespace detail {

inline void check_target(const NetworkParams& params, std::span<const double> target) {
  if (target.size() != params.size()) {
    throw std::invalid_argument("target gradient has " + std::to_string(target.size()) +
                                " entries, model has " + std::to_string(params.size()));
  }
}

inline double dlg_residual_sq(std::span<const double> g, std::span<const double> t) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = g[i] - t[i];
    s += d * d;
  }
  return s;
}

inline double cosine_distance(std::span<const double> g, std::span<const double> t) {
  const double ng = l2_norm(g), nt = l2_norm(t);
  if (ng == 0.0) return 1.0;
  return 1.0 - dot(g, t) / (ng * nt);
}

inline FlatVector label_one_hot(const NetworkParams& params, int label) {
  return one_hot(label, params.spec().num_classes);
}

}  // namespace detail

// Squared distance between the dummy gradient at (x', softmax(l')) and the
// target gradient.
inline double dlg_loss(const NetworkParams& params, std::span<const double> target,
                       const ImageTensor& x, std::span<const double> label_logits) {
  detail::check_target(params, target);
  const FlatVector y = softmax(label_logits);
  const SoftLabelGrads g = soft_label_loss_and_grads(params, x, y);
  return detail::dlg_residual_sq(g.grad_params, target);
}

// 1 - cos(dummy gradient, target) + alpha * TV(x'). A zero dummy gradient
// saturates the cosine term at 1.
inline double iga_loss(const NetworkParams& params, std::span<const double> target,
                       const ImageTensor& x, int label, double alpha_tv) {
  detail::check_target(params, target);
  if (!(l2_norm(target) > 0.0)) throw std::invalid_argument("iga_loss: zero target gradient");
  const SoftLabelGrads g =
      soft_label_loss_and_grads(params, x, detail::label_one_hot(params, label));
  return detail::cosine_distance(g.grad_params, target) + alpha_tv * total_variation(x);
}

struct AttackGradient {
  double loss = 0.0;          // attack loss at the evaluation point
  FlatVector x;               // d loss / d pixels
  FlatVector label_logits;    // d loss / d label logits (DLG)
};

namespace detail {

// Matching part of the attack loss (without TV).
inline double matching_loss(const NetworkParams& params, std::span<const double> target,
                            const ImageTensor& x, const DummyState& s,
                            std::span<const double> logits, AttackMethod method) {
  if (method == AttackMethod::kDlg) {
    const SoftLabelGrads g = soft_label_loss_and_grads(params, x, softmax(logits));
    return dlg_residual_sq(g.grad_params, target);
  }
  const SoftLabelGrads g = soft_label_loss_and_grads(params, x, label_one_hot(params, s.label));
  return cosine_distance(g.grad_params, target);
}

inline AttackGradient finite_diff_gradient(const NetworkParams& params,
                                           std::span<const double> target,
                                           const DummyState& s, AttackMethod method,
                                           double h, unsigned threads) {
  const bool dlg = method == AttackMethod::kDlg;
  const std::size_t nx = s.x.size();
  const std::size_t nl = dlg ? s.label_logits.size() : 0;
  AttackGradient out;
  out.loss = matching_loss(params, target, s.x, s, s.label_logits, method);
  out.x.assign(nx, 0.0);
  out.label_logits.assign(nl, 0.0);
  parallel_for(nx + nl, threads, [&](std::size_t k) {
    if (k < nx) {
      ImageTensor probe = s.x;
      const double orig = probe.data[k];
      probe.data[k] = orig + h;
      const double up = matching_loss(params, target, probe, s, s.label_logits, method);
      probe.data[k] = orig - h;
      const double down = matching_loss(params, target, probe, s, s.label_logits, method);
      out.x[k] = (up - down) / (2.0 * h);
    } else {
      const std::size_t j = k - nx;
      FlatVector logits = s.label_logits;
      const double orig = logits[j];
      logits[j] = orig + h;
      const double up = matching_loss(params, target, s.x, s, logits, method);
      logits[j] = orig - h;
      const double down = matching_loss(params, target, s.x, s, logits, method);
      out.label_logits[j] = (up - down) / (2.0 * h);
    }
  });
  return out;
}

// For the MLP  z1 = W1 x + b1, h = tanh(z1), z = W2 h + b2, p = softmax(z)
// and soft label y with s = sum(y), the parameter gradient is
//   d2 = s p - y,  dW2 = d2 h^T,  db2 = d2,
//   d1 = (1 - h^2) * (W2^T d2),  dW1 = d1 x^T,  db1 = d1.
// Given a covector V = (A1, a1, A2, a2) on that gradient, this returns the
// derivatives of <V, grad> with respect to x and y. Writing
//   u = A1 x + a1,  q = A2 h + a2 + W2 ((1 - h^2) * u),
// the contraction is d2^T q, from which
//   dS/dz  = s (p * q - p (p^T q))
//   dS/dh  = W2^T dS/dz + A2^T d2 - 2 h * u * (W2^T d2)
//   dS/dx  = W1^T ((1 - h^2) * dS/dh) + A1^T d1
//   dS/dy_j = p^T q - q_j.
struct InputCovectorGrads {
  FlatVector x;
  FlatVector y;
};

inline InputCovectorGrads mlp_input_vjp(const NetworkParams& params,
                                        const ImageTensor& image,
                                        std::span<const double> y,
                                        std::span<const double> V) {
  const auto& ops = params.ops();
  const Op& l1 = ops[0];
  const Op& l2 = ops[2];
  const std::size_t n_in = image.size();
  const std::size_t n_h = l1.bias_size;
  const std::size_t n_c = l2.bias_size;
  const auto theta = params.values();
  const double* W1 = &theta[l1.weight_offset];
  const double* b1 = &theta[l1.bias_offset];
  const double* W2 = &theta[l2.weight_offset];
  const double* b2 = &theta[l2.bias_offset];
  const double* A1 = &V[l1.weight_offset];
  const double* a1 = &V[l1.bias_offset];
  const double* A2 = &V[l2.weight_offset];
  const double* a2 = &V[l2.bias_offset];
  const double* x = image.data.data();

  FlatVector h(n_h), u(n_h);
  for (std::size_t j = 0; j < n_h; ++j) {
    double z = b1[j], uj = a1[j];
    for (std::size_t i = 0; i < n_in; ++i) {
      z += W1[j * n_in + i] * x[i];
      uj += A1[j * n_in + i] * x[i];
    }
    h[j] = std::tanh(z);
    u[j] = uj;
  }
  FlatVector z(n_c);
  for (std::size_t k = 0; k < n_c; ++k) {
    double acc = b2[k];
    for (std::size_t j = 0; j < n_h; ++j) acc += W2[k * n_h + j] * h[j];
    z[k] = acc;
  }
  const FlatVector p = softmax(z);
  double s = 0.0;
  for (double v : y) s += v;
  FlatVector d2(n_c);
  for (std::size_t k = 0; k < n_c; ++k) d2[k] = s * p[k] - y[k];

  FlatVector w2t_d2(n_h, 0.0), d1(n_h);
  for (std::size_t k = 0; k < n_c; ++k) {
    for (std::size_t j = 0; j < n_h; ++j) w2t_d2[j] += W2[k * n_h + j] * d2[k];
  }
  for (std::size_t j = 0; j < n_h; ++j) d1[j] = (1.0 - h[j] * h[j]) * w2t_d2[j];

  FlatVector q(n_c);
  for (std::size_t k = 0; k < n_c; ++k) {
    double acc = a2[k];
    for (std::size_t j = 0; j < n_h; ++j) {
      acc += A2[k * n_h + j] * h[j] + W2[k * n_h + j] * (1.0 - h[j] * h[j]) * u[j];
    }
    q[k] = acc;
  }
  double pq = 0.0;
  for (std::size_t k = 0; k < n_c; ++k) pq += p[k] * q[k];

  FlatVector gz(n_c);
  for (std::size_t k = 0; k < n_c; ++k) gz[k] = s * (p[k] * q[k] - p[k] * pq);
  FlatVector gh(n_h);
  for (std::size_t j = 0; j < n_h; ++j) {
    double acc = -2.0 * h[j] * u[j] * w2t_d2[j];
    for (std::size_t k = 0; k < n_c; ++k) {
      acc += W2[k * n_h + j] * gz[k] + A2[k * n_h + j] * d2[k];
    }
    gh[j] = acc;
  }
  InputCovectorGrads out;
  out.x.assign(n_in, 0.0);
  for (std::size_t j = 0; j < n_h; ++j) {
    const double gz1 = (1.0 - h[j] * h[j]) * gh[j];
    for (std::size_t i = 0; i < n_in; ++i) {
      out.x[i] += W1[j * n_in + i] * gz1 + A1[j * n_in + i] * d1[j];
    }
  }
  out.y.resize(n_c);
  for (std::size_t k = 0; k < n_c; ++k) out.y[k] = pq - q[k];
  return out;
}

inline AttackGradient analytic_mlp_gradient(const NetworkParams& params,
                                            std::span<const double> target,
                                            const DummyState& s, AttackMethod method) {
  if (params.spec().arch != Architecture::kMlp) {
    throw ConfigError("analytic_mlp gradient requested for a non-MLP architecture");
  }
  const bool dlg = method == AttackMethod::kDlg;
  const FlatVector y = dlg ? softmax(s.label_logits) : label_one_hot(params, s.label);
  const SoftLabelGrads g = soft_label_loss_and_grads(params, s.x, y);
  AttackGradient out;
  FlatVector V(g.grad_params.size());
  if (dlg) {
    out.loss = dlg_residual_sq(g.grad_params, target);
    for (std::size_t i = 0; i < V.size(); ++i) V[i] = 2.0 * (g.grad_params[i] - target[i]);
  } else {
    out.loss = cosine_distance(g.grad_params, target);
    const double ng = l2_norm(g.grad_params), nt = l2_norm(target);
    if (ng > 0.0) {
      // d/dG of -<G,T>/(|G||T|).
      const double gt = dot(g.grad_params, target);
      for (std::size_t i = 0; i < V.size(); ++i) {
        V[i] = -(target[i] / (ng * nt) - gt * g.grad_params[i] / (ng * ng * ng * nt));
      }
    } else {
      std::fill(V.begin(), V.end(), 0.0);
    }
  }
  const InputCovectorGrads vjp = mlp_input_vjp(params, s.x, y, V);
  out.x = vjp.x;
  if (dlg) {
    // Chain through y = softmax(l).
    double ygy = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) ygy += y[k] * vjp.y[k];
    out.label_logits.resize(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) out.label_logits[k] = y[k] * (vjp.y[k] - ygy);
  }
  return out;
}

}  // namespace detail

// Gradient of the attack loss with respect to the dummy variables. For IGA
// the TV subgradient is added to the pixel gradient.
inline AttackGradient attack_input_gradient(const NetworkParams& params,
                                            std::span<const double> target,
                                            const DummyState& s, const AttackConfig& cfg) {
  detail::check_target(params, target);
  detail::check_input(params, s.x.shape);
  if (cfg.method == AttackMethod::kDlg) {
    if (s.label_logits.size() != static_cast<std::size_t>(params.spec().num_classes)) {
      throw std::invalid_argument("DLG needs one label logit per class");
    }
  } else if (s.label < 0 || s.label >= params.spec().num_classes) {
    throw std::invalid_argument("IGA needs a label inside the class range");
  }
  AttackGradient g = cfg.hvp_mode == HvpMode::kFiniteDiff
                         ? detail::finite_diff_gradient(params, target, s, cfg.method,
                                                        cfg.fd_step, cfg.threads)
                         : detail::analytic_mlp_gradient(params, target, s, cfg.method);
  if (cfg.method == AttackMethod::kIga && cfg.alpha_tv > 0.0) {
    g.loss += cfg.alpha_tv * total_variation(s.x);
    const FlatVector tv = total_variation_grad(s.x);
    axpy(cfg.alpha_tv, tv, g.x);
  }
  return g;
}

// The seeded starting point: pixels U(0,1) or N(0,1), label logits N(0,1).
inline DummyState initial_dummy(const NetworkParams& params, const AttackConfig& cfg,
                                int label = -1) {
  RngStream rng = RngStream::derive(cfg.seed, {0xa77ac4});
  DummyState s;
  s.x = ImageTensor(params.spec().input);
  for (double& v : s.x.data) {
    v = cfg.init == AttackInit::kUniformRandom ? rng.uniform() : rng.normal();
  }
  if (cfg.method == AttackMethod::kDlg) {
    s.label_logits.resize(static_cast<std::size_t>(params.spec().num_classes));
    for (double& v : s.label_logits) v = rng.normal();
  } else {
    s.label = label;
    s.x.clamp01();
  }
  return s;
}

namespace detail {

inline AttackReport run_attack(const NetworkParams& params, std::span<const double> target,
                               DummyState s, const AttackConfig& cfg,
                               const ImageTensor* ground_truth) {
  cfg.validate();
  const double eta = cfg.step_size();
  AttackReport rep;
  for (int t = 0;; ++t) {
    AttackGradient g;
    const bool last = t == cfg.iterations;
    if (last) {
      g.loss = cfg.method == AttackMethod::kDlg
                   ? dlg_loss(params, target, s.x, s.label_logits)
                   : iga_loss(params, target, s.x, s.label, cfg.alpha_tv);
    } else {
      g = attack_input_gradient(params, target, s, cfg);
    }
    rep.loss_trajectory.push_back(g.loss);
    if (!std::isfinite(g.loss) || !all_finite(g.x) || !all_finite(g.label_logits)) {
      rep.diverged = true;
      break;
    }
    if (g.loss < rep.best_loss) {
      rep.best_loss = g.loss;
      rep.best_iteration = t;
      rep.reconstructed = s.x;
      rep.label_logits = s.label_logits;
    }
    if (last) break;
    axpy(-eta, g.x, s.x.data);
    if (cfg.method == AttackMethod::kDlg) {
      axpy(-eta, g.label_logits, s.label_logits);
    } else {
      s.x.clamp01();
    }
  }
  if (rep.reconstructed.size() == 0) rep.reconstructed = s.x;
  if (ground_truth != nullptr) {
    rep.final_ssim = ssim(rep.reconstructed, *ground_truth);
    rep.final_mse = mse(rep.reconstructed, *ground_truth);
  }
  return rep;
}

}  // namespace detail

inline AttackReport dlg_attack(const NetworkParams& params, std::span<const double> target,
                               AttackConfig cfg, const ImageTensor* ground_truth = nullptr) {
  detail::check_target(params, target);
  cfg.method = AttackMethod::kDlg;
  return detail::run_attack(params, target, initial_dummy(params, cfg), cfg, ground_truth);
}

inline AttackReport iga_attack(const NetworkParams& params, std::span<const double> target,
                               int label, AttackConfig cfg,
                               const ImageTensor* ground_truth = nullptr) {
  detail::check_target(params, target);
  if (!(l2_norm(target) > 0.0)) throw std::invalid_argument("iga_attack: zero target gradient");
  cfg.method = AttackMethod::kIga;
  return detail::run_attack(params, target, initial_dummy(params, cfg, label), cfg,
                            ground_truth);
}

}  // namespace dirdp

#endif  // DIRDP_ATTACKS_HPP_
