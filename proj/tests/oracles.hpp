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

// Independent reference computations used only by the tests. Nothing here
// calls into the code paths it is used to check.

#ifndef DIRDP_TESTS_ORACLES_HPP_
#define DIRDP_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace dirdp::oracle {

// log I_nu(x) by direct summation of the power series
//   I_nu(x) = sum_m (x/2)^(2m+nu) / (m! Gamma(m+nu+1)).
inline double log_bessel_i_series(double nu, double x) {
  const double lx = std::log(x / 2.0);
  std::vector<double> terms;
  double best = -INFINITY;
  for (int m = 0; m < 2000; ++m) {
    const double t = (2.0 * m + nu) * lx - std::lgamma(m + 1.0) -
                     std::lgamma(m + nu + 1.0);
    terms.push_back(t);
    best = std::max(best, t);
    if (m > x && t < best - 60.0) break;
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - best);
  return best + std::log(s);
}

// Mean resultant length of VMF(kappa) on S^{K-1}: I_{K/2}(k) / I_{K/2-1}(k).
inline double bessel_ratio(int dim, double kappa) {
  const double nu = dim / 2.0;
  return std::exp(log_bessel_i_series(nu, kappa) -
                  log_bessel_i_series(nu - 1.0, kappa));
}

// CDF of w = mu^T x for K = 3, where the density kappa e^{kappa w} /
// (2 sinh kappa) integrates in closed form.
inline double vmf3_scalar_cdf(double kappa, double w) {
  // (e^{k w} - e^{-k}) / (e^{k} - e^{-k}), written to avoid overflow.
  return std::expm1(kappa * (w + 1.0)) / std::expm1(2.0 * kappa);
}

// Pearson chi-square p-value of observed counts against expected counts.
inline double chi_square_pvalue(const std::vector<double>& observed,
                                const std::vector<double>& expected) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double d = observed[i] - expected[i];
    stat += d * d / expected[i];
  }
  boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Two-sample Kolmogorov-Smirnov test, asymptotic p-value.
inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double ne = na * nb / (na + nb);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return std::clamp(p, 0.0, 1.0);
}

inline std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n,
                                         double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = nd(gen);
  return v;
}

inline std::vector<double> random_unit(std::mt19937_64& gen, std::size_t n) {
  std::vector<double> v = random_vector(gen, n);
  double s = 0.0;
  for (double x : v) s += x * x;
  s = std::sqrt(s);
  for (double& x : v) x /= s;
  return v;
}

inline double sum_of_squares(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace dirdp::oracle

#endif  // DIRDP_TESTS_ORACLES_HPP_
