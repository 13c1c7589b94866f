// Copyright 2026 The lmodp Authors
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

// Exact samplers for the two-fold Laplace noise and the Gaussian baseline.

#pragma once

#include <cmath>
#include <cstddef>
#include <type_traits>
#include <variant>
#include <vector>

#include "lmodp/mgf.hpp"
#include "lmodp/rng.hpp"

namespace lmodp {

// Marsaglia-Tsang squeeze/rejection sampler for Gamma(shape, scale). Shapes
// below one use the boost G(k) = G(k + 1) * U^(1/k).
inline double SampleGamma(double shape, double scale, StreamRng& rng) {
  if (shape < 1.0) {
    const double g = SampleGamma(shape + 1.0, 1.0, rng);
    return scale * g * std::pow(rng.Uniform01(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.Normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.Uniform01();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return scale * d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return scale * d * v;
  }
}

inline double SampleComponent(const ComponentDist& dist, StreamRng& rng) {
  return std::visit(
      [&rng](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, GammaDist>) {
          return SampleGamma(d.shape, d.scale, rng);
        } else if constexpr (std::is_same_v<T, ExponentialDist>) {
          return -std::log(rng.Uniform01()) / d.rate;
        } else if constexpr (std::is_same_v<T, UniformDist>) {
          return d.lo + (d.hi - d.lo) * rng.Uniform01();
        } else {
          return d.value;
        }
      },
      dist);
}

// Draws Y, the inverse Laplace scale. Single-component mixtures consume no
// randomness for the component choice.
inline double SampleInverseScale(const MixtureSpec& spec, StreamRng& rng) {
  const auto& comps = spec.components();
  if (spec.mode() == CompositionMode::kLinearCombination) {
    double y = 0.0;
    for (const auto& c : comps) y += c.weight * SampleComponent(c.dist, rng);
    return y;
  }
  std::size_t pick = 0;
  if (comps.size() > 1) {
    double u = rng.Uniform01();
    pick = comps.size() - 1;
    for (std::size_t i = 0; i + 1 < comps.size(); ++i) {
      u -= spec.NormalizedWeight(i);
      if (u < 0.0) {
        pick = i;
        break;
      }
    }
  }
  return SampleComponent(comps[pick].dist, rng);
}

// Laplace(0, scale) by inverse CDF with u uniform on (-1/2, 1/2).
inline double SampleLaplace(double scale, StreamRng& rng) {
  const double u = rng.Uniform01() - 0.5;
  const double mag = std::log1p(-2.0 * std::fabs(u));
  return (u < 0.0 ? -scale : scale) * mag;
}

// One scalar of two-fold noise: Y from the spec, then Laplace(0, 1/Y).
inline double SampleLmoScalar(const MixtureSpec& spec, StreamRng& rng) {
  const double y = SampleInverseScale(spec, rng);
  return SampleLaplace(1.0 / y, rng);
}

// d coordinates, each with its own independent inverse scale.
inline std::vector<double> SampleLmoNoise(const MixtureSpec& spec, std::size_t d,
                                          StreamRng& rng) {
  std::vector<double> out(d);
  for (auto& w : out) w = SampleLmoScalar(spec, rng);
  return out;
}

// i.i.d. N(0, (C * sigma)^2).
inline std::vector<double> SampleGaussianNoise(double sigma, double sensitivity,
                                               std::size_t d, StreamRng& rng) {
  std::vector<double> out(d);
  const double sd = sigma * sensitivity;
  for (auto& w : out) w = sd * rng.Normal();
  return out;
}

}  // namespace lmodp
