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

// Harnesses comparing searched two-fold Laplace noise with the Gaussian
// baseline, histogram distances, search-space quantification and a
// quadrature Renyi divergence of the released noise.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "lmodp/accountant.hpp"
#include "lmodp/errors.hpp"
#include "lmodp/mgf.hpp"
#include "lmodp/rng.hpp"
#include "lmodp/sampler.hpp"
#include "lmodp/search.hpp"

namespace lmodp {

// ---------------------------------------------------------------------------
// Sample statistics

inline double Mean(std::span<const double> xs) {
  if (xs.empty()) throw EmptyInput("mean of an empty sample");
  // Kahan summation.
  double sum = 0.0, comp = 0.0;
  for (double x : xs) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum / static_cast<double>(xs.size());
}

inline double MeanAbs(std::span<const double> xs) {
  if (xs.empty()) throw EmptyInput("mean |x| of an empty sample");
  double sum = 0.0;
  for (double x : xs) sum += std::fabs(x);
  return sum / static_cast<double>(xs.size());
}

// Unbiased sample variance.
inline double Variance(std::span<const double> xs) {
  if (xs.size() < 2) throw EmptyInput("variance needs at least two samples");
  const double m = Mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

// Linear-interpolated quantile, p in [0, 1].
inline double Quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw EmptyInput("quantile of an empty sample");
  const double pos = p * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(lo), xs.end());
  const double a = xs[lo];
  if (lo + 1 >= xs.size()) return a;
  const double b = *std::min_element(xs.begin() + static_cast<std::ptrdiff_t>(lo) + 1, xs.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

struct BinEdges {
  double lo;
  double hi;
  int bins;
};

// Normalized histogram over [lo, hi]; samples outside the range are ignored.
inline std::vector<double> Histogram(std::span<const double> xs, const BinEdges& e) {
  if (e.bins < 1) throw InvalidArgument("histogram needs at least one bin");
  std::vector<double> h(static_cast<std::size_t>(e.bins), 0.0);
  const double width = (e.hi - e.lo) / e.bins;
  double total = 0.0;
  for (double x : xs) {
    if (x < e.lo || x > e.hi) continue;
    auto i = width > 0.0 ? static_cast<std::ptrdiff_t>((x - e.lo) / width) : 0;
    i = std::clamp<std::ptrdiff_t>(i, 0, e.bins - 1);
    h[static_cast<std::size_t>(i)] += 1.0;
    total += 1.0;
  }
  if (total > 0.0) {
    for (double& v : h) v /= total;
  }
  return h;
}

// Shannon entropy (nats) of a probability vector.
inline double Entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

inline double EntropyOnEdges(std::span<const double> xs, const BinEdges& e) {
  if (xs.empty()) throw EmptyInput("entropy of an empty sample");
  const auto h = Histogram(xs, e);
  return Entropy(h);
}

// Entropy of the histogram on `bins` equal cells spanning the sample range.
inline double EmpiricalEntropy(std::span<const double> xs, int bins) {
  if (xs.empty()) throw EmptyInput("entropy of an empty sample");
  if (bins < 2) throw InvalidArgument("entropy needs at least two bins");
  const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
  if (*mn == *mx) return 0.0;
  return EntropyOnEdges(xs, {*mn, *mx, bins});
}

// 1024 cells over the pooled 0.1..99.9 percentile range of two samples.
inline BinEdges PooledEdges(std::span<const double> a, std::span<const double> b,
                            int bins = 1024) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const double lo = Quantile(pooled, 0.001);
  const double hi = Quantile(std::move(pooled), 0.999);
  return {lo, hi, bins};
}

// 1 - E|a| / E|b|.
inline double ReductionRate(std::span<const double> a, std::span<const double> b) {
  return 1.0 - MeanAbs(a) / MeanAbs(b);
}

// ---------------------------------------------------------------------------
// Histogram distances

namespace analysis_detail {

inline void CheckSameSize(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeMismatch("histograms differ in length");
  if (p.empty()) throw EmptyInput("empty histogram");
}

}  // namespace analysis_detail

// KL(p || q) with both sides smoothed by `smoothing` per cell and renormalized.
inline double KlDivergence(std::span<const double> p, std::span<const double> q,
                           double smoothing = 1e-10) {
  analysis_detail::CheckSameSize(p, q);
  const double sp = std::accumulate(p.begin(), p.end(), 0.0) + smoothing * p.size();
  const double sq = std::accumulate(q.begin(), q.end(), 0.0) + smoothing * q.size();
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = (p[i] + smoothing) / sp;
    const double b = (q[i] + smoothing) / sq;
    kl += a * std::log(a / b);
  }
  return std::max(kl, 0.0);
}

inline double L2Distance(std::span<const double> p, std::span<const double> q) {
  analysis_detail::CheckSameSize(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - q[i]) * (p[i] - q[i]);
  return std::sqrt(s);
}

// 1-Wasserstein distance between histograms on a common grid of equal cells.
inline double Emd(std::span<const double> p, std::span<const double> q,
                  double bin_width = 1.0) {
  analysis_detail::CheckSameSize(p, q);
  double cp = 0.0, cq = 0.0, s = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    cp += p[i];
    cq += q[i];
    s += std::fabs(cp - cq);
  }
  return s * bin_width;
}

// ---------------------------------------------------------------------------
// Renyi divergence of the released noise by quadrature

// log p(x) for the noise density p(x) = M'(-|x|) / 2.
inline double LogNoiseDensity(const MixtureSpec& spec, double x) {
  return std::log(0.5) + LogMgfDerivative(spec, -std::fabs(x));
}

// D_alpha(P || P shifted by C) for the marginal noise law, by tanh-sinh on
// [0, C] and exp-sinh on both tails.
inline double RenyiDivergenceNumeric(const MixtureSpec& spec, double sensitivity,
                                     double alpha, double tolerance = 1e-10) {
  accountant_detail::CheckOrder(alpha);
  if (!(sensitivity >= 0.0)) throw InvalidArgument("sensitivity must be >= 0");
  const double c = sensitivity;
  auto log_f = [&](double x) {
    return alpha * LogNoiseDensity(spec, x) + (1.0 - alpha) * LogNoiseDensity(spec, x - c);
  };
  const double shift = std::max({log_f(0.0), log_f(0.5 * c), log_f(c)});
  auto f = [&](double x) {
    const double v = std::exp(log_f(x) - shift);
    return std::isfinite(v) ? v : 0.0;
  };

  double total = 0.0;
  double worst = 0.0;
  try {
    boost::math::quadrature::exp_sinh<double> tails;
    double err = 0.0, l1 = 0.0;
    const double left = tails.integrate([&](double u) { return f(-u); }, tolerance, &err, &l1);
    worst = std::max(worst, err / std::max(l1, 1e-300));
    total += left;
    const double right = tails.integrate([&](double u) { return f(c + u); }, tolerance, &err, &l1);
    worst = std::max(worst, err / std::max(l1, 1e-300));
    total += right;
    if (c > 0.0) {
      boost::math::quadrature::tanh_sinh<double> mid;
      const double m = mid.integrate(f, 0.0, c, tolerance, &err, &l1);
      worst = std::max(worst, err / std::max(l1, 1e-300));
      total += m;
    }
  } catch (const std::exception& e) {
    throw QuadratureNonConvergence(std::string("quadrature failed: ") + e.what());
  }
  if (!(total > 0.0) || !std::isfinite(total) || worst > 1e-6) {
    throw QuadratureNonConvergence("quadrature did not converge (relative error " +
                                   std::to_string(worst) + ")");
  }
  const double d = (shift + std::log(total)) / (alpha - 1.0);
  return std::max(d, 0.0);
}

// ---------------------------------------------------------------------------
// LMO vs Gaussian comparison

struct ComparisonRow {
  double eps = 0.0;
  double delta = 0.0;
  MixtureSpec lmo_spec = MixtureSpec::Single(DegenerateDist{1.0});
  double gaussian_sigma = 0.0;  // noise multiplier; std = C * sigma
  double mean_abs_lmo = 0.0;
  double mean_abs_gauss = 0.0;
  double reduction_rate = 0.0;
  double entropy_lmo = 0.0;
  double entropy_gauss = 0.0;
  double var_lmo = 0.0;
  double var_gauss = 0.0;
  double lmo_eps_total = 0.0;
  double usefulness = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

struct NoiseStats {
  double mean_abs_a, mean_abs_b, entropy_a, entropy_b, var_a, var_b;
};

inline NoiseStats CompareSamples(std::span<const double> a, std::span<const double> b,
                                 int bins = 1024) {
  const BinEdges edges = PooledEdges(a, b, bins);
  return {MeanAbs(a), MeanAbs(b), EntropyOnEdges(a, edges), EntropyOnEdges(b, edges),
          Variance(a), Variance(b)};
}

// For each per-step eps: search `grid` at (eps, delta) with T = 1, calibrate
// the Gaussian to the same budget, and compare n draws of each. Stream ids
// are 2i (LMO) and 2i+1 (Gaussian) for the i-th budget.
inline ComparisonReport CompareNoises(std::span<const double> eps_list, double delta,
                                      double sensitivity, const SearchGrid& grid,
                                      std::size_t n, std::uint64_t seed,
                                      unsigned threads = 1) {
  if (n < 2) throw InvalidArgument("comparison needs at least two samples");
  ComparisonReport report{{}, n, seed};
  const auto orders = IntegerOrders(grid.alpha_max);
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    SearchGrid g = grid;
    g.budget = PrivacyBudget(eps_list[i], delta);
    g.sensitivity = sensitivity;
    g.steps = 1;
    g.scope = BudgetScope::kPerStep;
    const SearchResult found = SearchOptimal(g, threads);
    const double sigma = CalibrateGaussian(g.budget, 1, orders);

    StreamRng lmo_rng(seed, 2 * i);
    StreamRng gauss_rng(seed, 2 * i + 1);
    const auto lmo = SampleLmoNoise(found.spec, n, lmo_rng);
    const auto gauss = SampleGaussianNoise(sigma, sensitivity, n, gauss_rng);
    const NoiseStats s = CompareSamples(lmo, gauss);

    ComparisonRow row;
    row.eps = eps_list[i];
    row.delta = delta;
    row.lmo_spec = found.spec;
    row.gaussian_sigma = sigma;
    row.mean_abs_lmo = s.mean_abs_a;
    row.mean_abs_gauss = s.mean_abs_b;
    row.reduction_rate = 1.0 - s.mean_abs_a / s.mean_abs_b;
    row.entropy_lmo = s.entropy_a;
    row.entropy_gauss = s.entropy_b;
    row.var_lmo = s.var_a;
    row.var_gauss = s.var_b;
    row.lmo_eps_total = found.eps_total;
    row.usefulness = found.usefulness;
    report.rows.push_back(std::move(row));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Ablation: the full grid against a restricted one at equal budgets

struct AblationRow {
  double eps = 0.0;
  MixtureSpec base_spec = MixtureSpec::Single(DegenerateDist{1.0});
  MixtureSpec variant_spec = MixtureSpec::Single(DegenerateDist{1.0});
  double mean_abs_base = 0.0;
  double mean_abs_variant = 0.0;
  double difference = 0.0;  // variant - base
  double usefulness_base = 0.0;
  double usefulness_variant = 0.0;
};

struct AblationReport {
  std::string variant;
  std::vector<AblationRow> rows;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

// Copy of `grid` searching only the listed families.
inline SearchGrid RestrictFamilies(SearchGrid grid, std::vector<Family> families) {
  std::vector<Family> kept;
  for (Family f : {Family::kGamma, Family::kExponential, Family::kUniform,
                   Family::kDegenerate}) {
    if (std::find(families.begin(), families.end(), f) != families.end()) kept.push_back(f);
  }
  if (kept.empty()) throw InvalidArgument("ablation needs at least one family");
  grid.families = std::move(kept);
  if (grid.families.size() == 1) grid.weights = {1.0};
  return grid;
}

inline std::string VariantName(const SearchGrid& g) {
  std::string s;
  for (Family f : g.families) {
    if (!s.empty()) s += "+";
    s += FamilyName(f);
  }
  return s;
}

// Each variant is searched and sampled on the same streams as the base, so
// a variant equal to the base gives a difference of exactly zero.
inline std::vector<AblationReport> AblationCompareMany(
    const SearchGrid& base, std::span<const SearchGrid> variants,
    std::span<const double> eps_list, double delta, double sensitivity, std::size_t n,
    std::uint64_t seed, unsigned threads = 1) {
  std::vector<AblationReport> reports;
  for (const auto& v : variants) reports.push_back({VariantName(v), {}, n, seed});
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    auto run = [&](SearchGrid g) {
      g.budget = PrivacyBudget(eps_list[i], delta);
      g.sensitivity = sensitivity;
      g.steps = 1;
      g.scope = BudgetScope::kPerStep;
      return SearchOptimal(g, threads);
    };
    const SearchResult a = run(base);
    StreamRng ra(seed, 2 * i);
    const auto xa = SampleLmoNoise(a.spec, n, ra);
    const double mean_abs_base = MeanAbs(xa);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const SearchResult b = run(variants[v]);
      StreamRng rb(seed, 2 * i);
      const auto xb = SampleLmoNoise(b.spec, n, rb);
      AblationRow row;
      row.eps = eps_list[i];
      row.base_spec = a.spec;
      row.variant_spec = b.spec;
      row.mean_abs_base = mean_abs_base;
      row.mean_abs_variant = MeanAbs(xb);
      row.difference = row.mean_abs_variant - row.mean_abs_base;
      row.usefulness_base = a.usefulness;
      row.usefulness_variant = b.usefulness;
      reports[v].rows.push_back(std::move(row));
    }
  }
  return reports;
}

inline AblationReport AblationCompare(const SearchGrid& base, const SearchGrid& variant,
                                      std::span<const double> eps_list, double delta,
                                      double sensitivity, std::size_t n,
                                      std::uint64_t seed, unsigned threads = 1) {
  return AblationCompareMany(base, std::span<const SearchGrid>(&variant, 1), eps_list,
                             delta, sensitivity, n, seed, threads)
      .front();
}

// ---------------------------------------------------------------------------
// Search-space quantification

struct QuantifyRow {
  double q = 0.0;
  int k = 0;
  int trials = 0;  // N = 1/q
  int draws = 0;   // M
  double mu_sim = 0.0;
  double sigma_sim = 0.0;
  double kl = 0.0;
  double l2 = 0.0;
  double emd = 0.0;
  double kl_repaired = 0.0;
  double l2_repaired = 0.0;
  double emd_repaired = 0.0;
};

struct QuantifyReport {
  std::vector<QuantifyRow> rows;
  int draws = 0;
  std::uint64_t seed = 0;
};

namespace analysis_detail {

inline int TrialsFor(double q) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidQuantization("q must lie in (0, 1]");
  const double inv = 1.0 / q;
  const double r = std::round(inv);
  if (std::fabs(inv - r) > 1e-9 * r) {
    throw InvalidQuantization("1/q must be an integer, got " + std::to_string(inv));
  }
  return static_cast<int>(r);
}

// Mean and std of a histogram read as a distribution over the cell
// midpoints (i + 1/2) / k of [0, 1].
inline std::pair<double, double> HistogramMoments(std::span<const double> h) {
  const double k = static_cast<double>(h.size());
  double m = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = (static_cast<double>(i) + 0.5) / k;
    m += h[i] * x;
    m2 += h[i] * x * x;
  }
  return {m, std::sqrt(std::max(m2 - m * m, 0.0))};
}

struct Distances {
  double kl = 0.0, l2 = 0.0, emd = 0.0;
};

inline Distances MeanDistances(const std::vector<std::vector<double>>& xs,
                               const std::vector<std::vector<double>>& ys,
                               const std::vector<std::size_t>& pairing) {
  Distances d;
  const double w = 1.0 / static_cast<double>(xs.front().size());
  for (std::size_t m = 0; m < xs.size(); ++m) {
    const auto& y = ys[pairing[m]];
    d.kl += KlDivergence(xs[m], y);
    d.l2 += L2Distance(xs[m], y);
    d.emd += Emd(xs[m], y, w);
  }
  const double n = static_cast<double>(xs.size());
  return {d.kl / n, d.l2 / n, d.emd / n};
}

}  // namespace analysis_detail

// For every (q, k): M multinomial histograms of N = 1/q uniform trials on k
// cells, and M histograms of N noise draws from uniformly chosen candidates
// of `grid`. Each noise sample set is mapped affinely so its mean and std
// equal the simulated (mu, sigma) on [0, 1], then binned on the same cells.
// Distances are averaged over index pairs and over 32 random re-pairings.
inline QuantifyReport QuantifySpace(std::span<const double> qs, std::span<const int> ks,
                                    int draws, const SearchGrid& grid,
                                    std::uint64_t seed) {
  if (draws < 1) throw InvalidArgument("M must be >= 1");
  const std::uint64_t candidates = grid.Cardinality();
  if (candidates == 0 || candidates > grid.max_candidates) {
    throw GridTooLarge("grid cardinality out of range for quantification");
  }
  QuantifyReport report{{}, draws, seed};
  std::uint64_t cell = 0;
  for (double q : qs) {
    const int trials = analysis_detail::TrialsFor(q);
    for (int k : ks) {
      if (k < 2) throw InvalidQuantization("k must be >= 2");
      StreamRng sim_rng(seed, 3 * cell);
      StreamRng lmo_rng(seed, 3 * cell + 1);
      StreamRng pair_rng(seed, 3 * cell + 2);
      ++cell;

      std::vector<std::vector<double>> sim(static_cast<std::size_t>(draws));
      double mu = 0.0, sd = 0.0;
      for (auto& h : sim) {
        h.assign(static_cast<std::size_t>(k), 0.0);
        for (int t = 0; t < trials; ++t) {
          auto i = static_cast<std::size_t>(sim_rng.Uniform01() * k);
          h[std::min<std::size_t>(i, static_cast<std::size_t>(k) - 1)] += 1.0 / trials;
        }
        const auto [m, s] = analysis_detail::HistogramMoments(h);
        mu += m;
        sd += s;
      }
      mu /= draws;
      sd /= draws;

      std::vector<std::vector<double>> lmo(static_cast<std::size_t>(draws));
      for (auto& h : lmo) {
        const auto index = static_cast<std::uint64_t>(lmo_rng.Uniform01() *
                                                      static_cast<double>(candidates));
        const MixtureSpec spec = grid.Decode(std::min(index, candidates - 1));
        auto xs = SampleLmoNoise(spec, static_cast<std::size_t>(trials), lmo_rng);
        double xm = 0.0;
        for (double x : xs) xm += x;
        xm /= trials;
        double xv = 0.0;
        for (double x : xs) xv += (x - xm) * (x - xm);
        const double xsd = std::sqrt(xv / trials);
        for (double& x : xs) x = mu + (xsd > 0.0 ? sd * (x - xm) / xsd : 0.0);
        h.assign(static_cast<std::size_t>(k), 0.0);
        for (double x : xs) {
          auto i = static_cast<std::ptrdiff_t>(std::floor(x * k));
          i = std::clamp<std::ptrdiff_t>(i, 0, k - 1);
          h[static_cast<std::size_t>(i)] += 1.0 / trials;
        }
      }

      std::vector<std::size_t> pairing(static_cast<std::size_t>(draws));
      std::iota(pairing.begin(), pairing.end(), 0);
      const auto direct = analysis_detail::MeanDistances(sim, lmo, pairing);
      analysis_detail::Distances repaired;
      constexpr int kRepairings = 32;
      for (int r = 0; r < kRepairings; ++r) {
        for (std::size_t i = pairing.size(); i > 1; --i) {
          const auto j = static_cast<std::size_t>(pair_rng() % i);
          std::swap(pairing[i - 1], pairing[j]);
        }
        const auto d = analysis_detail::MeanDistances(sim, lmo, pairing);
        repaired.kl += d.kl / kRepairings;
        repaired.l2 += d.l2 / kRepairings;
        repaired.emd += d.emd / kRepairings;
      }
      report.rows.push_back({q, k, trials, draws, mu, sd, direct.kl, direct.l2, direct.emd,
                             repaired.kl, repaired.l2, repaired.emd});
    }
  }
  return report;
}

}  // namespace lmodp
