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

// Private training loops.
//
//   DP-SGD (Gaussian):  g_i <- clip(g_i, C);  update = (1/L) sum_i (g_i + N(0, s^2 I))
//   DirDP-SGD (VMF):    g_i <- C g_i/|g_i|;   update = (1/L) sum_i C * V(eps, g_i/C)
//   none:               update = (1/L) sum_i g_i
//
// followed by theta <- theta - eta * update. L is the expected batch size;
// batches are Poisson-sampled with inclusion probability L/N by default.
//
// Randomness is keyed, never sequential: the batch of step t draws from
// derive(seed, {kBatchStream, t}) and example i of that step from
// derive(seed, {kNoiseStream, t, i}). Results are therefore identical for any
// thread count.

#ifndef DIRDP_TRAINING_HPP_
#define DIRDP_TRAINING_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dirdp/error.hpp"
#include "dirdp/mechanisms.hpp"
#include "dirdp/metrics.hpp"
#include "dirdp/nn.hpp"
#include "dirdp/parallel.hpp"
#include "dirdp/rng.hpp"
#include "dirdp/sphere.hpp"
#include "dirdp/tensor.hpp"

namespace dirdp {

enum class Mechanism { kNone, kGaussian, kVmf };
enum class Sampling { kPoisson, kFixed };
enum class VmfScope { kConcatenated, kPerLayer };

inline std::string to_string(Mechanism m) {
  switch (m) {
    case Mechanism::kNone: return "none";
    case Mechanism::kGaussian: return "gaussian";
    case Mechanism::kVmf: return "vmf";
  }
  return "?";
}

inline Mechanism parse_mechanism(const std::string& s) {
  if (s == "none") return Mechanism::kNone;
  if (s == "gaussian" || s == "gauss") return Mechanism::kGaussian;
  if (s == "vmf") return Mechanism::kVmf;
  throw ConfigError("unknown mechanism '" + s + "'");
}

inline std::string to_string(Sampling s) {
  return s == Sampling::kPoisson ? "poisson" : "fixed";
}

inline Sampling parse_sampling(const std::string& s) {
  if (s == "poisson") return Sampling::kPoisson;
  if (s == "fixed") return Sampling::kFixed;
  throw ConfigError("unknown sampling '" + s + "'");
}

inline std::string to_string(VmfScope s) {
  return s == VmfScope::kConcatenated ? "concatenated" : "per_layer";
}

inline VmfScope parse_vmf_scope(const std::string& s) {
  if (s == "concatenated") return VmfScope::kConcatenated;
  if (s == "per_layer") return VmfScope::kPerLayer;
  throw ConfigError("unknown vmf_scope '" + s + "'");
}

struct TrainingConfig {
  Mechanism mechanism = Mechanism::kNone;
  double epsilon_v = 0.0;        // vmf only
  double sigma = 0.0;            // gaussian only
  bool halve_epsilon = false;    // vmf: use kappa = epsilon_v / 2
  double clip_bound = 1.0;       // C
  double expected_batch = 128;   // L
  double learning_rate = 0.1;    // constant eta
  int epochs = 1;
  std::int64_t steps = 0;        // > 0 overrides epochs
  std::uint64_t seed = 0;
  Sampling sampling = Sampling::kPoisson;
  VmfScope vmf_scope = VmfScope::kConcatenated;
  unsigned threads = 1;

  void validate() const {
    if (!(clip_bound > 0.0) || !std::isfinite(clip_bound)) {
      throw ConfigError("clip bound C must be positive");
    }
    if (!(expected_batch >= 1.0)) throw ConfigError("expected batch L must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (steps <= 0 && epochs < 1) throw ConfigError("need epochs >= 1 or steps >= 1");
    switch (mechanism) {
      case Mechanism::kNone:
        if (epsilon_v != 0.0 || sigma != 0.0) {
          throw ConfigError("mechanism none takes neither epsilon_v nor sigma");
        }
        break;
      case Mechanism::kGaussian:
        if (epsilon_v != 0.0) throw ConfigError("gaussian mechanism takes sigma, not epsilon_v");
        if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
        break;
      case Mechanism::kVmf:
        if (sigma != 0.0) throw ConfigError("vmf mechanism takes epsilon_v, not sigma");
        if (!(epsilon_v > 0.0)) throw ConfigError("epsilon_v must be positive");
        break;
    }
  }

  double vmf_kappa() const { return halve_epsilon ? 0.5 * epsilon_v : epsilon_v; }
};

// g / max(1, |g|/C). Inputs already inside the ball are returned unchanged.
inline FlatVector clip_gradient(std::span<const double> g, double C) {
  if (!(C > 0.0)) throw std::invalid_argument("clip_gradient: C must be positive");
  FlatVector out(g.begin(), g.end());
  const double n = l2_norm(g);
  if (n <= C) return out;
  const double f = n / C;
  for (double& v : out) v /= f;
  return out;
}

inline constexpr double kZeroGradientNorm = 1e-12;

// g / (|g|/C): every output has norm C. A gradient with norm below
// kZeroGradientNorm has no usable direction; it is replaced by a uniformly
// random direction drawn from `rng`, or rejected when no stream is given.
inline FlatVector scale_gradient(std::span<const double> g, double C,
                                 RngStream* rng = nullptr) {
  if (!(C > 0.0)) throw std::invalid_argument("scale_gradient: C must be positive");
  const double n = l2_norm(g);
  if (n < kZeroGradientNorm) {
    if (rng == nullptr) {
      throw std::invalid_argument("scale_gradient: zero gradient has no direction");
    }
    FlatVector d(g.size());
    double dn;
    do {
      for (double& v : d) v = rng->normal();
      dn = l2_norm(d);
    } while (!(dn > 0.0));
    for (double& v : d) v *= C / dn;
    return d;
  }
  FlatVector out(g.begin(), g.end());
  const double f = n / C;
  for (double& v : out) v /= f;
  return out;
}

// Each index in [0, n) is included independently with p = min(1, L/n).
inline std::vector<std::size_t> poisson_batch(std::size_t n, double L,
                                              RngStream& rng) {
  const double p = std::min(1.0, std::max(0.0, L / static_cast<double>(n)));
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (p >= 1.0 || rng.uniform() < p) out.push_back(i);
  }
  return out;
}

// round(L) distinct indices, uniformly at random, in ascending order.
inline std::vector<std::size_t> fixed_batch(std::size_t n, double L,
                                            RngStream& rng) {
  const std::size_t k = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(L)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_u64() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Sensitivity of the averaged update to replacing one of L vectors of norm
// at most C: 2C/L.
inline double batch_sensitivity(double C, double L) {
  if (!(C > 0.0) || !(L >= 1.0)) {
    throw std::invalid_argument("batch_sensitivity: need C > 0 and L >= 1");
  }
  return 2.0 * C / L;
}

struct StepRecord {
  std::int64_t step = 0;
  std::size_t batch_size = 0;
  double grad_norm_pre = 0.0;   // mean per-example norm before clip/scale
  double grad_norm_post = 0.0;  // mean per-example norm after noise
  double loss = 0.0;            // mean loss over the batch
};

namespace detail {

inline constexpr std::uint64_t kBatchStream = 1;
inline constexpr std::uint64_t kNoiseStream = 2;

// The privatized contribution of one example's gradient.
inline FlatVector privatize(FlatVector g, const TrainingConfig& cfg,
                            const std::vector<std::pair<std::size_t, std::size_t>>& ranges,
                            RngStream& rng) {
  switch (cfg.mechanism) {
    case Mechanism::kNone:
      return g;
    case Mechanism::kGaussian:
      return gauss_perturb(GaussParams{cfg.sigma}, clip_gradient(g, cfg.clip_bound), rng);
    case Mechanism::kVmf: {
      const double C = cfg.clip_bound;
      if (cfg.vmf_scope == VmfScope::kConcatenated) {
        const FlatVector s = scale_gradient(g, C, &rng);
        const UnitVector mu = normalize(s);
        const UnitVector x = vmf_sample(VmfParams{cfg.vmf_kappa(), mu.dim()}, mu, rng);
        return scaled(x.values(), C);
      }
      // Per tensor: each block gets norm C/sqrt(m) so the whole vector
      // still has norm C.
      const double block_c = C / std::sqrt(static_cast<double>(ranges.size()));
      FlatVector out(g.size());
      for (const auto& [begin, end] : ranges) {
        std::span<const double> block(g.data() + begin, end - begin);
        if (block.size() < 2) {
          throw ConfigError("per_layer VMF needs tensors of dimension >= 2");
        }
        const UnitVector mu = normalize(scale_gradient(block, 1.0, &rng));
        const UnitVector x = vmf_sample(VmfParams{cfg.vmf_kappa(), mu.dim()}, mu, rng);
        for (std::size_t i = 0; i < x.dim(); ++i) out[begin + i] = block_c * x[i];
      }
      return out;
    }
  }
  return g;
}

}  // namespace detail

// One update with the configured mechanism. `rng` keys this step; example i
// of the batch uses the child stream derive(rng.seed(), {i}).
inline NetworkParams private_step(const NetworkParams& params,
                                  std::span<const LabeledExample> batch,
                                  const TrainingConfig& cfg, const RngStream& rng,
                                  StepRecord* stats = nullptr) {
  if (batch.empty()) throw std::invalid_argument("private_step: empty batch");
  const auto ranges = params.tensor_ranges();
  std::vector<FlatVector> contrib(batch.size());
  std::vector<double> pre(batch.size()), post(batch.size()), loss(batch.size());
  parallel_for(batch.size(), cfg.threads, [&](std::size_t i) {
    LossAndGrad lg = loss_and_grad(params, batch[i]);
    pre[i] = l2_norm(lg.grad);
    loss[i] = lg.loss;
    RngStream ex_rng = RngStream::derive(rng.seed(), {i});
    contrib[i] = detail::privatize(std::move(lg.grad), cfg, ranges, ex_rng);
    post[i] = l2_norm(contrib[i]);
  });
  FlatVector update(params.size(), 0.0);
  for (const FlatVector& c : contrib) axpy(1.0, c, update);
  NetworkParams next = params;
  axpy(-cfg.learning_rate / cfg.expected_batch, update, next.values());
  if (stats != nullptr) {
    const double n = static_cast<double>(batch.size());
    stats->batch_size = batch.size();
    stats->grad_norm_pre = std::accumulate(pre.begin(), pre.end(), 0.0) / n;
    stats->grad_norm_post = std::accumulate(post.begin(), post.end(), 0.0) / n;
    stats->loss = std::accumulate(loss.begin(), loss.end(), 0.0) / n;
  }
  return next;
}

// theta - eta (1/L) sum_i (clip(g_i, C) + N(0, sigma^2 I)).
inline NetworkParams dpsgd_step_gaussian(const NetworkParams& params,
                                         std::span<const LabeledExample> batch,
                                         TrainingConfig cfg, const RngStream& rng,
                                         StepRecord* stats = nullptr) {
  cfg.mechanism = Mechanism::kGaussian;
  cfg.epsilon_v = 0.0;
  cfg.validate();
  return private_step(params, batch, cfg, rng, stats);
}

// theta - eta (1/L) sum_i C * V(eps, g_i/|g_i|).
inline NetworkParams dirdpsgd_step_vmf(const NetworkParams& params,
                                       std::span<const LabeledExample> batch,
                                       TrainingConfig cfg, const RngStream& rng,
                                       StepRecord* stats = nullptr) {
  cfg.mechanism = Mechanism::kVmf;
  cfg.sigma = 0.0;
  cfg.validate();
  return private_step(params, batch, cfg, rng, stats);
}

struct EpochRecord {
  int epoch = 0;
  std::int64_t step = 0;
  double test_accuracy = 0.0;
  double test_loss = 0.0;
};

struct TrainingTrace {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
};

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
  std::vector<FlatVector> logits;
  std::vector<int> labels;
};

inline EvalResult evaluate(const NetworkParams& params,
                           std::span<const LabeledExample> data) {
  EvalResult r;
  if (data.empty()) return r;
  for (const LabeledExample& ex : data) {
    FlatVector z = forward(params, ex.x);
    r.loss -= detail::log_softmax(z)[static_cast<std::size_t>(ex.y)];
    r.logits.push_back(std::move(z));
    r.labels.push_back(ex.y);
  }
  r.loss /= static_cast<double>(data.size());
  r.accuracy = accuracy(r.logits, r.labels);
  return r;
}

inline std::int64_t steps_per_epoch(std::size_t n, double L) {
  return std::max<std::int64_t>(1, std::llround(static_cast<double>(n) / L));
}

struct TrainingResult {
  NetworkParams params;
  TrainingTrace trace;
};

// Runs the configured loop from `init`. Steps whose Poisson batch comes up
// empty leave the parameters unchanged and are recorded with batch_size 0.
inline TrainingResult train(const NetworkParams& init,
                            std::span<const LabeledExample> train_set,
                            std::span<const LabeledExample> test_set,
                            const TrainingConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw ConfigError("training set is empty");
  const std::int64_t per_epoch = steps_per_epoch(train_set.size(), cfg.expected_batch);
  const std::int64_t total = cfg.steps > 0 ? cfg.steps : per_epoch * cfg.epochs;
  TrainingResult result{init, {}};
  std::vector<LabeledExample> batch;
  for (std::int64_t t = 0; t < total; ++t) {
    RngStream batch_rng = RngStream::derive(cfg.seed, {detail::kBatchStream,
                                                       static_cast<std::uint64_t>(t)});
    const auto idx = cfg.sampling == Sampling::kPoisson
                         ? poisson_batch(train_set.size(), cfg.expected_batch, batch_rng)
                         : fixed_batch(train_set.size(), cfg.expected_batch, batch_rng);
    batch.clear();
    for (std::size_t i : idx) batch.push_back(train_set[i]);
    StepRecord rec;
    rec.step = t;
    if (!batch.empty()) {
      const RngStream noise = RngStream::derive(
          cfg.seed, {detail::kNoiseStream, static_cast<std::uint64_t>(t)});
      result.params = private_step(result.params, batch, cfg, noise, &rec);
    }
    result.trace.steps.push_back(rec);
    if ((t + 1) % per_epoch == 0 || t + 1 == total) {
      const EvalResult ev = evaluate(result.params, test_set);
      result.trace.epochs.push_back(EpochRecord{
          static_cast<int>((t + per_epoch) / per_epoch), t + 1, ev.accuracy, ev.loss});
    }
  }
  return result;
}

inline TrainingResult train(const ModelSpec& spec,
                            std::span<const LabeledExample> train_set,
                            std::span<const LabeledExample> test_set,
                            const TrainingConfig& cfg) {
  return train(NetworkParams::random(spec, cfg.seed), train_set, test_set, cfg);
}

// One JSON object per line: step rows, then epoch rows.
inline void write_trace_jsonl(const TrainingTrace& trace, std::ostream& os) {
  for (const StepRecord& s : trace.steps) {
    nlohmann::json j = {{"kind", "step"},
                        {"step", s.step},
                        {"batch_size", s.batch_size},
                        {"grad_norm_pre", s.grad_norm_pre},
                        {"grad_norm_post", s.grad_norm_post},
                        {"loss", s.loss}};
    os << j.dump() << '\n';
  }
  for (const EpochRecord& e : trace.epochs) {
    nlohmann::json j = {{"kind", "epoch"},
                        {"epoch", e.epoch},
                        {"step", e.step},
                        {"test_accuracy", e.test_accuracy},
                        {"test_loss", e.test_loss}};
    os << j.dump() << '\n';
  }
}

}  // namespace dirdp

#endif  // DIRDP_TRAINING_HPP_
