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

// Renyi-DP accounting for the two-fold Laplace (LMO) mechanism and the
// Gaussian baseline: per-invocation curves, additive composition, and the
// conversion of a composed curve to (epsilon, delta)-DP.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lmodp/errors.hpp"
#include "lmodp/mgf.hpp"
#include "lmodp/numeric.hpp"

namespace lmodp {

struct PrivacyBudget {
  double eps;
  double delta;

  PrivacyBudget(double eps_in, double delta_in) : eps(eps_in), delta(delta_in) {
    if (!(eps > 0.0) || !(delta > 0.0 && delta < 1.0)) {
      throw InvalidArgument("privacy budget needs eps > 0 and 0 < delta < 1");
    }
  }
  friend bool operator==(const PrivacyBudget&, const PrivacyBudget&) = default;
};

// Integer orders 2..max_order.
inline std::vector<double> IntegerOrders(int max_order = 128) {
  if (max_order < 2) throw InvalidOrder("max order must be at least 2");
  std::vector<double> orders;
  orders.reserve(static_cast<std::size_t>(max_order - 1));
  for (int a = 2; a <= max_order; ++a) orders.push_back(a);
  return orders;
}

// Map from Renyi order to epsilon_alpha. +inf marks an order at which the
// mechanism has no finite guarantee.
class RdpCurve {
 public:
  RdpCurve() = default;
  RdpCurve(std::vector<double> orders, std::vector<double> eps)
      : orders_(std::move(orders)), eps_(std::move(eps)) {
    if (orders_.size() != eps_.size()) {
      throw InvalidArgument("orders and eps must have equal length");
    }
    for (std::size_t i = 0; i < orders_.size(); ++i) {
      if (!(orders_[i] > 1.0)) throw InvalidOrder("orders must exceed 1");
      if (i > 0 && !(orders_[i] > orders_[i - 1])) {
        throw InvalidArgument("orders must be strictly increasing");
      }
      if (std::isnan(eps_[i]) || eps_[i] < 0.0) {
        throw InvalidArgument("eps_alpha must be non-negative");
      }
    }
  }

  static RdpCurve Zero(std::vector<double> orders) {
    std::vector<double> eps(orders.size(), 0.0);
    return RdpCurve(std::move(orders), std::move(eps));
  }

  const std::vector<double>& orders() const { return orders_; }
  const std::vector<double>& eps() const { return eps_; }
  std::size_t size() const { return orders_.size(); }

  // Pointwise scaling, i.e. `times` identical compositions.
  RdpCurve Scaled(double times) const {
    std::vector<double> eps = eps_;
    for (double& e : eps) e = std::isinf(e) ? e : e * times;
    return RdpCurve(orders_, std::move(eps));
  }

  friend bool operator==(const RdpCurve&, const RdpCurve&) = default;

 private:
  std::vector<double> orders_;
  std::vector<double> eps_;
};

namespace accountant_detail {

inline void CheckOrder(double alpha) {
  if (!(alpha > 1.0) || std::isinf(alpha)) {
    throw InvalidOrder("Renyi order must be finite and > 1, got " +
                       std::to_string(alpha));
  }
}

}  // namespace accountant_detail

// Renyi-DP of the two-fold Laplace mechanism with sensitivity C at order
// alpha:
//   (1/(alpha-1)) log[ alpha/(2alpha-1) M(C(alpha-1))
//                      + (alpha-1)/(2alpha-1) M(-C alpha) ]
// This is E_Y of the per-scale Laplace divergence integral, which bounds the
// divergence of the released mixture from above (the two coincide for a
// point-mass Y). Returns +inf when C(alpha-1) is outside the MGF domain.
inline double LmoRdp(const MixtureSpec& spec, double sensitivity, double alpha) {
  accountant_detail::CheckOrder(alpha);
  if (!(sensitivity >= 0.0)) throw InvalidArgument("sensitivity must be >= 0");
  if (sensitivity == 0.0) return 0.0;
  const double up = sensitivity * (alpha - 1.0);
  if (!InDomain(spec, up)) return numeric::kInf;
  const double down = -sensitivity * alpha;
  const double wa = alpha / (2.0 * alpha - 1.0);
  const double wb = (alpha - 1.0) / (2.0 * alpha - 1.0);
  const double la = LogMgf(spec, up);
  const double lb = LogMgf(spec, down);
  double eps = 0.0;
  if (la < 1.0 && lb > -1.0) {
    // The weights sum to one, so the bracket is 1 + wa (M_a - 1) + wb (M_b - 1).
    eps = std::log1p(wa * MgfMinusOne(spec, up) + wb * MgfMinusOne(spec, down)) /
          (alpha - 1.0);
  } else {
    eps = numeric::LogAddExp(std::log(wa) + la, std::log(wb) + lb) / (alpha - 1.0);
  }
  return eps > 0.0 ? eps : 0.0;
}

// Alternative three-term closed form.
// It agrees with LmoRdp at C = 1 only; kept for documentation and tests.
inline double LmoRdpThreeTermForm(const MixtureSpec& spec, double sensitivity,
                                  double alpha) {
  accountant_detail::CheckOrder(alpha);
  const double c = sensitivity;
  const double args[3] = {alpha - 1.0, 1.0 - c - alpha,
                          (1.0 - 2.0 * c) * alpha + (c - 1.0)};
  const double coefs[3] = {alpha / (2.0 * alpha - 1.0), 0.5,
                           1.0 / (2.0 * (1.0 - 2.0 * alpha))};
  double logs[3];
  double hi = -numeric::kInf;
  for (int i = 0; i < 3; ++i) {
    if (!InDomain(spec, args[i])) return numeric::kInf;
    logs[i] = LogMgf(spec, args[i]);
    hi = std::max(hi, logs[i]);
  }
  if (hi < 1.0 && std::min({logs[0], logs[1], logs[2]}) > -1.0) {
    // The coefficients sum to one.
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += coefs[i] * MgfMinusOne(spec, args[i]);
    if (!(s > -1.0)) {
      throw DomainError("three-term expression is not positive at C=" + std::to_string(c));
    }
    const double eps = std::log1p(s) / (alpha - 1.0);
    return eps > 0.0 ? eps : 0.0;
  }
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) sum += coefs[i] * std::exp(logs[i] - hi);
  if (!(sum > 0.0)) {
    throw DomainError("three-term expression is not positive at C=" +
                      std::to_string(c));
  }
  const double eps = (hi + std::log(sum)) / (alpha - 1.0);
  return eps > 0.0 ? eps : 0.0;
}

// Gaussian mechanism with absolute noise standard deviation `sigma` and
// sensitivity C: alpha C^2 / (2 sigma^2).
inline double GaussianRdp(double sigma, double sensitivity, double alpha) {
  accountant_detail::CheckOrder(alpha);
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  return alpha * sensitivity * sensitivity / (2.0 * sigma * sigma);
}

inline RdpCurve LmoCurve(const MixtureSpec& spec, double sensitivity,
                         const std::vector<double>& orders) {
  std::vector<double> eps(orders.size());
  for (std::size_t i = 0; i < orders.size(); ++i) {
    eps[i] = LmoRdp(spec, sensitivity, orders[i]);
  }
  return RdpCurve(orders, std::move(eps));
}

// DP-SGD convention: noise N(0, (C * multiplier)^2), so the curve does not
// depend on C.
inline RdpCurve GaussianCurve(double noise_multiplier,
                              const std::vector<double>& orders) {
  std::vector<double> eps(orders.size());
  for (std::size_t i = 0; i < orders.size(); ++i) {
    eps[i] = GaussianRdp(noise_multiplier, 1.0, orders[i]);
  }
  return RdpCurve(orders, std::move(eps));
}

inline RdpCurve Compose(std::span<const RdpCurve> curves) {
  if (curves.empty()) throw InvalidArgument("nothing to compose");
  std::vector<double> eps(curves.front().size(), 0.0);
  for (const auto& c : curves) {
    if (c.orders() != curves.front().orders()) {
      throw GridMismatch("cannot compose curves over different order grids");
    }
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] += c.eps()[i];
  }
  return RdpCurve(curves.front().orders(), std::move(eps));
}

struct DpConversion {
  double eps;
  double alpha;
};

// eps = min_alpha [eps_alpha + log(1/delta) / (alpha - 1)]; the smallest
// minimizing order wins ties.
inline DpConversion ToDp(const RdpCurve& curve, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must be in (0,1)");
  const double log_inv_delta = -std::log(delta);
  DpConversion best{numeric::kInf, 0.0};
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double e = curve.eps()[i];
    if (std::isinf(e)) continue;
    const double total = e + log_inv_delta / (curve.orders()[i] - 1.0);
    if (total < best.eps) best = {total, curve.orders()[i]};
  }
  if (std::isinf(best.eps)) {
    throw AllInfinite("every order of the curve is infeasible");
  }
  return best;
}

// Smallest noise multiplier sigma (noise std = C * sigma) such that T
// compositions of the Gaussian mechanism meet `budget` over `orders`.
// Bisection to 1e-6 relative width; returns the feasible end.
inline double CalibrateGaussian(const PrivacyBudget& budget, int steps,
                                const std::vector<double>& orders,
                                double sigma_cap = 1e6) {
  if (steps < 1) throw InvalidArgument("steps must be >= 1");
  auto eps_at = [&](double sigma) {
    return ToDp(GaussianCurve(sigma, orders).Scaled(steps), budget.delta).eps;
  };
  double hi = 1.0;
  while (eps_at(hi) > budget.eps) {
    hi *= 2.0;
    if (hi > sigma_cap) {
      throw Unachievable("no sigma below the cap meets eps=" +
                         std::to_string(budget.eps));
    }
  }
  double lo = hi / 2.0;
  while (eps_at(lo) <= budget.eps) {
    hi = lo;
    lo /= 2.0;
    if (lo < 1e-12) return hi;
  }
  while ((hi - lo) > 1e-6 * hi) {
    const double mid = 0.5 * (lo + hi);
    (eps_at(mid) <= budget.eps ? hi : lo) = mid;
  }
  return hi;
}

// Poisson-subsampling amplification at integer order alpha with sampling
// rate q, taking eps_j of the base mechanism from `base`:
//   (1/(alpha-1)) log(1 + sum_{j=2}^{alpha} binom(alpha,j) q^j (1-q)^{alpha-j} F_j)
// with F_2 = min(4(e^{eps_2} - 1), 2 e^{eps_2}) and F_j = 2 e^{(j-1) eps_j}.
// Off by default in training; see TrainConfig::amplify.
inline double PoissonAmplifiedRdp(const RdpCurve& base, double q, int alpha) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("q must be in (0, 1]");
  if (alpha < 2) throw InvalidOrder("amplified orders must be integers >= 2");
  auto eps_at = [&](int j) -> double {
    for (std::size_t i = 0; i < base.size(); ++i) {
      if (base.orders()[i] == j) return base.eps()[i];
    }
    throw GridMismatch("base curve lacks integer order " + std::to_string(j));
  };
  std::vector<double> logs;
  logs.reserve(static_cast<std::size_t>(alpha));
  logs.push_back(0.0);  // the leading 1
  const double log_q = std::log(q);
  const double log_1mq = q < 1.0 ? std::log1p(-q) : -numeric::kInf;
  for (int j = 2; j <= alpha; ++j) {
    const double e = eps_at(j);
    if (std::isinf(e)) return numeric::kInf;
    double log_f;
    if (j == 2) {
      const double four = e > 0.0 ? std::log(4.0) + std::log(std::expm1(e))
                                  : -numeric::kInf;
      log_f = std::min(four, std::log(2.0) + e);
    } else {
      log_f = std::log(2.0) + (j - 1) * e;
    }
    const double log_binom = std::lgamma(alpha + 1.0) - std::lgamma(j + 1.0) -
                             std::lgamma(alpha - j + 1.0);
    const double log_mix = j * log_q + (alpha - j == 0 ? 0.0 : (alpha - j) * log_1mq);
    logs.push_back(log_binom + log_mix + log_f);
  }
  const double eps = numeric::LogSumExp(logs) / (alpha - 1.0);
  return eps > 0.0 ? eps : 0.0;
}

inline RdpCurve PoissonAmplifiedCurve(const RdpCurve& base, double q) {
  std::vector<double> eps(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double a = base.orders()[i];
    if (a != std::floor(a)) throw GridMismatch("amplification needs integer orders");
    eps[i] = PoissonAmplifiedRdp(base, q, static_cast<int>(a));
  }
  return RdpCurve(base.orders(), std::move(eps));
}

}  // namespace lmodp
