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

// Distributions for the random inverse scale Y = 1/b of the two-fold
// Laplace mechanism, and the moment-generating-function algebra over them.
//
// Everything is evaluated in log space: the accountant needs M(t) at
// t = C(alpha - 1) for alpha up to 128, where exp(t * b_u) overflows quickly.

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "lmodp/errors.hpp"
#include "lmodp/numeric.hpp"

namespace lmodp {

struct GammaDist {
  double shape;  // k
  double scale;  // theta
  friend bool operator==(const GammaDist&, const GammaDist&) = default;
};

struct ExponentialDist {
  double rate;  // lambda
  friend bool operator==(const ExponentialDist&, const ExponentialDist&) = default;
};

struct UniformDist {
  double lo;  // a >= 0
  double hi;  // b_u > a
  friend bool operator==(const UniformDist&, const UniformDist&) = default;
};

// Point mass at `value`. Recovers the plain Laplace mechanism with b = 1/value.
struct DegenerateDist {
  double value;
  friend bool operator==(const DegenerateDist&, const DegenerateDist&) = default;
};

using ComponentDist =
    std::variant<GammaDist, ExponentialDist, UniformDist, DegenerateDist>;

enum class CompositionMode {
  kMixture,            // Y = Y_I with P(I = i) = a_i / sum(a)
  kLinearCombination,  // Y = sum_i a_i * Y_i, components independent
};

inline std::string_view ModeName(CompositionMode mode) {
  return mode == CompositionMode::kMixture ? "mixture" : "linear";
}

inline CompositionMode ParseMode(std::string_view name) {
  if (name == "mixture") return CompositionMode::kMixture;
  if (name == "linear") return CompositionMode::kLinearCombination;
  throw InvalidArgument("unknown composition mode '" + std::string(name) + "'");
}

inline std::string_view DistName(const ComponentDist& dist) {
  return std::visit(
      [](const auto& d) -> std::string_view {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, GammaDist>) return "gamma";
        if constexpr (std::is_same_v<T, ExponentialDist>) return "exp";
        if constexpr (std::is_same_v<T, UniformDist>) return "uniform";
        if constexpr (std::is_same_v<T, DegenerateDist>) return "degenerate";
      },
      dist);
}

inline void ValidateComponent(const ComponentDist& dist) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        bool ok = true;
        if constexpr (std::is_same_v<T, GammaDist>) {
          ok = positive(d.shape) && positive(d.scale);
        } else if constexpr (std::is_same_v<T, ExponentialDist>) {
          ok = positive(d.rate);
        } else if constexpr (std::is_same_v<T, UniformDist>) {
          ok = std::isfinite(d.lo) && d.lo >= 0.0 && positive(d.hi) && d.lo < d.hi;
        } else {
          ok = positive(d.value);
        }
        if (!ok) {
          throw InvalidArgument("invalid parameters for " +
                                std::string(DistName(dist)) + " component");
        }
      },
      dist);
}

struct WeightedComponent {
  double weight;
  ComponentDist dist;
  friend bool operator==(const WeightedComponent&, const WeightedComponent&) = default;
};

// The second-fold randomization: 1..8 weighted components and a composition
// mode. Weights are stored raw; mixture mode normalizes them on use.
class MixtureSpec {
 public:
  static constexpr std::size_t kMaxComponents = 8;

  MixtureSpec(CompositionMode mode, std::vector<WeightedComponent> components)
      : mode_(mode), components_(std::move(components)) {
    if (components_.empty() || components_.size() > kMaxComponents) {
      throw InvalidArgument("a mixture spec needs 1 to 8 components");
    }
    weight_sum_ = 0.0;
    for (const auto& c : components_) {
      if (!std::isfinite(c.weight) || c.weight <= 0.0) {
        throw InvalidArgument("component weights must be positive");
      }
      ValidateComponent(c.dist);
      weight_sum_ += c.weight;
    }
  }

  static MixtureSpec Single(ComponentDist dist) {
    return MixtureSpec(CompositionMode::kMixture, {{1.0, std::move(dist)}});
  }

  CompositionMode mode() const { return mode_; }
  const std::vector<WeightedComponent>& components() const { return components_; }
  std::size_t size() const { return components_.size(); }

  // a_i / sum(a); only meaningful in mixture mode.
  double NormalizedWeight(std::size_t i) const {
    return components_[i].weight / weight_sum_;
  }

  friend bool operator==(const MixtureSpec& a, const MixtureSpec& b) {
    return a.mode_ == b.mode_ && a.components_ == b.components_;
  }

 private:
  CompositionMode mode_;
  std::vector<WeightedComponent> components_;
  double weight_sum_ = 0.0;
};

namespace mgf_detail {

// Relative distance kept from a pole of the MGF.
inline constexpr double kPoleMargin = 1e-9;

inline double ComponentSup(const ComponentDist& dist) {
  if (const auto* g = std::get_if<GammaDist>(&dist)) return 1.0 / g->scale;
  if (const auto* e = std::get_if<ExponentialDist>(&dist)) return e->rate;
  return numeric::kInf;
}

inline void CheckDomain(const ComponentDist& dist, double t) {
  const double sup = ComponentSup(dist);
  if (std::isinf(sup)) return;
  if (!(t < sup - kPoleMargin * std::max(1.0, sup))) {
    throw DomainError("MGF of " + std::string(DistName(dist)) +
                      " component does not exist at t=" + std::to_string(t) +
                      " (supremum " + std::to_string(sup) + ")");
  }
}

// h(v) = v e^v - (e^v - 1), used for |v| >= 0.5.
inline double H(double v) { return v * std::exp(v) - std::expm1(v); }

// h(v) / v^2 = sum_{n>=2} (n-1) v^(n-2) / n!, for |v| < 0.5.
inline double HOverSquare(double v) {
  double term = 0.5;  // v^(n-2) / n! at n = 2
  double sum = term;
  for (int n = 3; n < 30; ++n) {
    term *= v / n;
    sum += (n - 1) * term;
  }
  return sum;
}

inline double LogUniformMgf(const UniformDist& u, double t) {
  if (t == 0.0) return 0.0;
  const double width = u.hi - u.lo;
  const double x = std::fabs(t) * width;
  // (e^{tb} - e^{ta}) / (t (b - a)) = e^{t * top} (1 - e^{-x}) / x
  const double top = t > 0.0 ? u.hi : u.lo;
  if (x < 0.1) {
    // log((1 - e^{-x}) / x) by its series, accurate to relative round-off.
    const double x2 = x * x;
    return t * top - x / 2 +
           x2 * (1.0 / 24 + x2 * (-1.0 / 2880 + x2 * (1.0 / 181440 - x2 / 9676800)));
  }
  return t * top + numeric::Log1mExp(x) - std::log(x);
}

inline double LogUniformMgfDerivative(const UniformDist& u, double t) {
  const double a = u.lo;
  const double b = u.hi;
  const double d = b - a;
  if (t == 0.0) return std::log(0.5 * (a + b));
  const double v = t * d;
  if (t > 0.0 && v > 700.0) {
    // e^{tb} [(b - a e^{-td}) / t - (1 - e^{-td}) / t^2] / d
    const double r = std::exp(-v);
    const double bracket = (b - a * r) / t - (1.0 - r) / (t * t);
    return t * b + std::log(bracket) - std::log(d);
  }
  // e^{ta} / d * integral_0^d (a + z) e^{tz} dz
  const double g0 = std::expm1(v) / t;
  const double inner =
      a * g0 + (std::fabs(v) < 0.5 ? d * d * HOverSquare(v) : H(v) / (t * t));
  return t * a + std::log(inner) - std::log(d);
}

}  // namespace mgf_detail

// log M_Y(t) for a single component.
inline double LogMgfComponent(const ComponentDist& dist, double t) {
  mgf_detail::CheckDomain(dist, t);
  return std::visit(
      [t](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, GammaDist>) {
          return -d.shape * std::log1p(-t * d.scale);
        } else if constexpr (std::is_same_v<T, ExponentialDist>) {
          return -std::log1p(-t / d.rate);
        } else if constexpr (std::is_same_v<T, UniformDist>) {
          return mgf_detail::LogUniformMgf(d, t);
        } else {
          return d.value * t;
        }
      },
      dist);
}

// log M'_Y(t) for a single component. M' > 0 because the support is positive.
inline double LogMgfDerivativeComponent(const ComponentDist& dist, double t) {
  mgf_detail::CheckDomain(dist, t);
  return std::visit(
      [t](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, GammaDist>) {
          return std::log(d.shape * d.scale) -
                 (d.shape + 1.0) * std::log1p(-t * d.scale);
        } else if constexpr (std::is_same_v<T, ExponentialDist>) {
          return -std::log(d.rate) - 2.0 * std::log1p(-t / d.rate);
        } else if constexpr (std::is_same_v<T, UniformDist>) {
          return mgf_detail::LogUniformMgfDerivative(d, t);
        } else {
          return std::log(d.value) + d.value * t;
        }
      },
      dist);
}

inline double MgfComponent(const ComponentDist& dist, double t) {
  return std::exp(LogMgfComponent(dist, t));
}

inline double LogMgf(const MixtureSpec& spec, double t) {
  if (t == 0.0) return 0.0;
  const auto& comps = spec.components();
  if (spec.mode() == CompositionMode::kLinearCombination) {
    double acc = 0.0;
    for (const auto& c : comps) acc += LogMgfComponent(c.dist, c.weight * t);
    return acc;
  }
  double terms[MixtureSpec::kMaxComponents];
  for (std::size_t i = 0; i < comps.size(); ++i) {
    terms[i] = std::log(spec.NormalizedWeight(i)) + LogMgfComponent(comps[i].dist, t);
  }
  return numeric::LogSumExp(std::span<const double>(terms, comps.size()));
}

inline double Mgf(const MixtureSpec& spec, double t) {
  return std::exp(LogMgf(spec, t));
}

// M(t) - 1 without cancellation for t near zero.
inline double MgfMinusOne(const MixtureSpec& spec, double t) {
  if (t == 0.0) return 0.0;
  const auto& comps = spec.components();
  if (spec.mode() == CompositionMode::kLinearCombination) return std::expm1(LogMgf(spec, t));
  double sum = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    sum += spec.NormalizedWeight(i) * std::expm1(LogMgfComponent(comps[i].dist, t));
  }
  return sum;
}

inline double LogMgfDerivative(const MixtureSpec& spec, double t) {
  const auto& comps = spec.components();
  double terms[MixtureSpec::kMaxComponents];
  if (spec.mode() == CompositionMode::kLinearCombination) {
    // M'(t) = M(t) * sum_i a_i M_i'(a_i t) / M_i(a_i t)
    double log_m = 0.0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const double s = comps[i].weight * t;
      const double log_mi = LogMgfComponent(comps[i].dist, s);
      log_m += log_mi;
      terms[i] = std::log(comps[i].weight) +
                 LogMgfDerivativeComponent(comps[i].dist, s) - log_mi;
    }
    return log_m + numeric::LogSumExp(std::span<const double>(terms, comps.size()));
  }
  for (std::size_t i = 0; i < comps.size(); ++i) {
    terms[i] = std::log(spec.NormalizedWeight(i)) +
               LogMgfDerivativeComponent(comps[i].dist, t);
  }
  return numeric::LogSumExp(std::span<const double>(terms, comps.size()));
}

inline double MgfDerivative(const MixtureSpec& spec, double t) {
  return std::exp(LogMgfDerivative(spec, t));
}

// Supremum t* with M finite on (-inf, t*); +inf without Gamma/Exponential parts.
inline double DomainSup(const MixtureSpec& spec) {
  double sup = numeric::kInf;
  for (const auto& c : spec.components()) {
    double s = mgf_detail::ComponentSup(c.dist);
    if (spec.mode() == CompositionMode::kLinearCombination) s /= c.weight;
    sup = std::min(sup, s);
  }
  return sup;
}

// True when t may be passed to LogMgf without a DomainError.
inline bool InDomain(const MixtureSpec& spec, double t) {
  const double sup = DomainSup(spec);
  if (std::isinf(sup)) return true;
  // Component checks are per component; this mirrors the tightest one.
  for (const auto& c : spec.components()) {
    const double s = spec.mode() == CompositionMode::kLinearCombination
                         ? c.weight * t
                         : t;
    const double csup = mgf_detail::ComponentSup(c.dist);
    if (!std::isinf(csup) &&
        !(s < csup - mgf_detail::kPoleMargin * std::max(1.0, csup))) {
      return false;
    }
  }
  return true;
}

}  // namespace lmodp
