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

// Noise mechanisms applied to per-example gradients.
//
// The von Mises-Fisher mechanism has density C_K(eps) exp(eps mu^T x) on the
// unit sphere in R^K. Samples are drawn with Wood's (1994) rejection scheme
// for the scalar component w = e1^T x, combined with a uniformly random
// tangent direction and a reflection carrying e1 onto mu.

#ifndef DIRDP_MECHANISMS_HPP_
#define DIRDP_MECHANISMS_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

#include "dirdp/rng.hpp"
#include "dirdp/sphere.hpp"
#include "dirdp/tensor.hpp"

namespace dirdp {

struct VmfParams {
  double epsilon_v = 1.0;  // concentration kappa
  std::size_t dim = 2;     // K, the ambient dimension

  void validate() const {
    if (!(epsilon_v > 0.0) || !std::isfinite(epsilon_v)) {
      throw std::invalid_argument("VmfParams: epsilon_v must be positive");
    }
    if (dim < 2) throw std::invalid_argument("VmfParams: dim must be >= 2");
  }
};

struct GaussParams {
  double sigma = 0.0;

  void validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
      throw std::invalid_argument("GaussParams: sigma must be >= 0");
    }
  }
};

// Draws w = mu^T x for x ~ VMF(eps, mu) on S^{K-1}. The density of w is
// proportional to exp(eps w) (1 - w^2)^{(K-3)/2} on [-1, 1].
//
// The acceptance test is evaluated in a rearranged closed form so that no
// intermediate loses precision when eps is many orders of magnitude larger
// than K (w and the envelope mode x0 then both sit within 1e-6 of 1).
// Also returns sqrt(1 - w^2), computed from the same stable terms.
struct VmfScalar {
  double w;
  double tangent;  // sqrt(1 - w^2)
};

inline VmfScalar vmf_sample_scalar(const VmfParams& params, RngStream& rng) {
  params.validate();
  const double kappa = params.epsilon_v;
  const double m1 = static_cast<double>(params.dim) - 1.0;
  // b = (-2k + sqrt(4k^2 + (K-1)^2)) / (K-1), rationalized.
  const double b = m1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + m1 * m1));
  const double one_minus_x0 = 2.0 * b / (1.0 + b);
  const double half = 0.5 * m1;
  for (;;) {
    const double z = rng.beta(half, half);
    const double denom = 1.0 - (1.0 - b) * z;
    const double one_minus_w = 2.0 * b * z / denom;
    // kappa (w - x0) + (K-1) log((1 - x0 w) / (1 - x0^2))
    const double stat = kappa * (one_minus_x0 - one_minus_w) +
                        m1 * std::log((1.0 + b) / (2.0 * denom));
    if (stat >= std::log(rng.uniform_open())) {
      const double w = 1.0 - one_minus_w;
      const double tangent = 2.0 * std::sqrt(b * z * (1.0 - z)) / denom;
      return {w, tangent};
    }
  }
}

// A VMF draw about the pole e1.
inline UnitVector vmf_sample_about_pole(const VmfParams& params,
                                        RngStream& rng) {
  const VmfScalar s = vmf_sample_scalar(params, rng);
  FlatVector x(params.dim, 0.0);
  double nn;
  do {
    nn = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
      x[i] = rng.normal();
      nn += x[i] * x[i];
    }
  } while (!(nn > 0.0));
  const double scale = s.tangent / std::sqrt(nn);
  for (std::size_t i = 1; i < x.size(); ++i) x[i] *= scale;
  x[0] = s.w;
  return normalize(x);
}

inline UnitVector vmf_sample(const VmfParams& params, const UnitVector& mu,
                             RngStream& rng) {
  if (mu.dim() != params.dim) {
    throw std::invalid_argument("vmf_sample: mean direction has dimension " +
                                std::to_string(mu.dim()) + ", expected " +
                                std::to_string(params.dim));
  }
  return rotate_pole_to(mu, vmf_sample_about_pole(params, rng));
}

// eps mu^T x; the normalizer C_K(eps) is omitted since it cancels in ratios.
inline double vmf_log_density_unnormalized(const VmfParams& params,
                                           const UnitVector& mu,
                                           const UnitVector& x) {
  return params.epsilon_v * dot(mu.values(), x.values());
}

// log p(x | mu1) - log p(x | mu2) - eps d_L(mu1, mu2). The eps d_L
// guarantee holds pointwise iff this is <= 0 for all inputs.
inline double privacy_ratio_check(const VmfParams& params, const UnitVector& mu1,
                                  const UnitVector& mu2, const UnitVector& x) {
  require_same_length(mu1.dim(), mu2.dim(), "privacy_ratio_check");
  require_same_length(mu1.dim(), x.dim(), "privacy_ratio_check");
  double diff = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) diff += (mu1[i] - mu2[i]) * x[i];
  return params.epsilon_v * diff -
         params.epsilon_v * angular_distance(mu1, mu2);
}

// g + N(0, sigma^2 I).
inline FlatVector gauss_perturb(const GaussParams& params,
                                std::span<const double> g, RngStream& rng) {
  params.validate();
  FlatVector out(g.begin(), g.end());
  if (params.sigma == 0.0) return out;
  for (double& v : out) v += params.sigma * rng.normal();
  return out;
}

}  // namespace dirdp

#endif  // DIRDP_MECHANISMS_HPP_
