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

#include "lmodp/analysis.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "test_util.hpp"

namespace lmodp {
namespace {

TEST(Statistics, MeanAndVariance) {
  const std::vector<double> xs{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(Mean(xs), 2.5);
  EXPECT_DOUBLE_EQ(MeanAbs(std::vector<double>{-1, 1, -3, 3}), 2.0);
  EXPECT_DOUBLE_EQ(Variance(xs), 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(Quantile(xs, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(Quantile(xs, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(Quantile(xs, 1.0), 4.0);
  EXPECT_THROW(Mean(std::vector<double>{}), EmptyInput);
  EXPECT_THROW(Variance(std::vector<double>{1.0}), EmptyInput);
}

TEST(Statistics, HistogramIgnoresOutOfRange) {
  const std::vector<double> xs{-5, 0.1, 0.6, 0.9, 7};
  const auto h = Histogram(xs, {0, 1, 2});
  ASSERT_EQ(h.size(), 2u);
  EXPECT_DOUBLE_EQ(h[0], 1.0 / 3);
  EXPECT_DOUBLE_EQ(h[1], 2.0 / 3);
}

TEST(Entropy, Examples) {
  EXPECT_EQ(EmpiricalEntropy(std::vector<double>(100, 3.0), 16), 0.0);
  std::vector<double> xs;
  for (int i = 0; i < 100'000; ++i) xs.push_back((i + 0.5) / 100'000);
  EXPECT_NEAR(EmpiricalEntropy(xs, 64), std::log(64.0), 1e-3);
  EXPECT_NEAR(Entropy(std::vector<double>{0.5, 0.5}), std::log(2.0), 1e-15);
}

TEST(ReductionRate, Properties) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> a(1000), b(1000);
  for (auto& x : a) x = n(gen);
  for (auto& x : b) x = 3 * n(gen);
  EXPECT_EQ(ReductionRate(a, a), 0.0);
  std::vector<double> half(b);
  for (auto& x : half) x *= 0.5;
  EXPECT_NEAR(ReductionRate(half, b), 0.5, 1e-15);
  std::vector<double> a2(a), b2(b);
  for (auto& x : a2) x *= 7;
  for (auto& x : b2) x *= 7;
  EXPECT_NEAR(ReductionRate(a2, b2), ReductionRate(a, b), 1e-14);
}

TEST(Metrics, KlExample) {
  const std::vector<double> p{0.5, 0.5}, q{0.25, 0.75};
  EXPECT_NEAR(KlDivergence(p, q), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-9);
  EXPECT_NEAR(KlDivergence(p, q, 0.0), 0.1438410362258904, 1e-15);
}

TEST(Metrics, IdenticalInputsGiveZero) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> h(1 + gen() % 50);
    double s = 0;
    for (auto& v : h) s += v = u(gen) < 0.3 ? 0.0 : u(gen);
    for (auto& v : h) v /= s > 0 ? s : 1;
    EXPECT_EQ(KlDivergence(h, h), 0.0);
    EXPECT_EQ(L2Distance(h, h), 0.0);
    EXPECT_EQ(Emd(h, h, 0.1), 0.0);
  }
}

TEST(Metrics, ShapeChecks) {
  EXPECT_THROW(KlDivergence(std::vector<double>{1}, std::vector<double>{0.5, 0.5}),
               ShapeMismatch);
  EXPECT_THROW(L2Distance(std::vector<double>{}, std::vector<double>{}), EmptyInput);
}

// Explicit monotone transport plan: move mass from the leftmost remaining
// supply to the leftmost remaining demand.
double TransportCost(std::vector<double> p, std::vector<double> q, double w) {
  std::size_t i = 0, j = 0;
  double cost = 0.0;
  while (i < p.size() && j < q.size()) {
    const double m = std::min(p[i], q[j]);
    cost += m * std::fabs(static_cast<double>(i) - static_cast<double>(j)) * w;
    p[i] -= m;
    q[j] -= m;
    if (p[i] <= 1e-15) ++i;
    if (j < q.size() && q[j] <= 1e-15) ++j;
  }
  return cost;
}

TEST(Metrics, EmdMatchesExplicitTransport) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 2 + gen() % 9;
    std::vector<double> p(k), q(k);
    double sp = 0, sq = 0;
    for (auto& v : p) sp += v = u(gen);
    for (auto& v : q) sq += v = u(gen);
    for (auto& v : p) v /= sp;
    for (auto& v : q) v /= sq;
    EXPECT_NEAR(Emd(p, q, 0.25), TransportCost(p, q, 0.25), 1e-12);
  }
  EXPECT_DOUBLE_EQ(Emd(std::vector<double>{1, 0, 0}, std::vector<double>{0, 0, 1}, 0.5), 1.0);
}

TEST(RenyiDivergenceNumeric, LaplaceClosedForm) {
  const auto lap = MixtureSpec::Single(DegenerateDist{1});
  EXPECT_NEAR(RenyiDivergenceNumeric(lap, 1.0, 2.0),
              std::log(2.0 / 3.0 * std::exp(1.0) + std::exp(-2.0) / 3.0), 1e-9);
  EXPECT_NEAR(RenyiDivergenceNumeric(lap, 1.0, 2.0), 0.6191236302, 1e-9);
  EXPECT_NEAR(RenyiDivergenceNumeric(lap, 0.0, 4.0), 0.0, 1e-10);
  for (double c : {0.5, 2.0}) {
    for (double a : {2.0, 8.0, 32.0}) {
      EXPECT_NEAR(RenyiDivergenceNumeric(lap, c, a), LmoRdp(lap, c, a), 1e-6) << c << " " << a;
    }
  }
}

TEST(RenyiDivergenceNumeric, DensityIntegratesToOne) {
  std::mt19937_64 gen(4);
  boost::math::quadrature::exp_sinh<double> q;
  for (int s = 0; s < 20; ++s) {
    const auto spec = testing::RandomSpec(gen, {4.0});
    const double mass =
        2 * q.integrate(
            [&](double x) { return std::isfinite(x) ? std::exp(LogNoiseDensity(spec, x)) : 0.0; },
            1e-12);
    EXPECT_NEAR(mass, 1.0, 1e-8) << "spec " << s;
  }
}

// E_Y[exp(s Y)] by quadrature of the component densities, without the MGF
// closed forms.
double ExpectationOfExp(const MixtureSpec& spec, double s) {
  double total = 0.0, wsum = 0.0;
  for (const auto& c : spec.components()) wsum += c.weight;
  for (const auto& c : spec.components()) {
    double v = 0.0;
    if (const auto* g = std::get_if<GammaDist>(&c.dist)) {
      const double norm = std::lgamma(g->shape) + g->shape * std::log(g->scale);
      boost::math::quadrature::exp_sinh<double> q;
      v = q.integrate(
          [&](double y) {
            if (!std::isfinite(y)) return 0.0;
            return std::exp((g->shape - 1) * std::log(y) - y / g->scale + s * y - norm);
          },
          1e-12);
    } else if (const auto* u = std::get_if<UniformDist>(&c.dist)) {
      boost::math::quadrature::tanh_sinh<double> q;
      v = q.integrate([&](double y) { return std::exp(s * y) / (u->hi - u->lo); }, u->lo, u->hi);
    } else if (const auto* e = std::get_if<ExponentialDist>(&c.dist)) {
      boost::math::quadrature::exp_sinh<double> q;
      v = q.integrate([&](double y) { return e->rate * std::exp((s - e->rate) * y); }, 1e-12);
    } else {
      v = std::exp(s * std::get<DegenerateDist>(c.dist).value);
    }
    total += c.weight / wsum * v;
  }
  return total;
}

// Divergence between the joint laws of (Y, released value) at shift C:
// Y is shared, so it averages the conditional Laplace divergences.
double JointDivergence(const MixtureSpec& spec, double c, double a) {
  const double m = a / (2 * a - 1) * ExpectationOfExp(spec, (a - 1) * c) +
                   (a - 1) / (2 * a - 1) * ExpectationOfExp(spec, -a * c);
  return std::log(m) / (a - 1);
}

TEST(RenyiDivergenceNumeric, ClosedFormIsJointDivergenceAndBoundsMarginal) {
  std::mt19937_64 gen(5);
  for (int s = 0; s < 10; ++s) {
    const auto spec = testing::RandomMixture(gen, 4.0);
    for (double a : {2.0, 4.0}) {
      const double closed = LmoRdp(spec, 1.0, a);
      EXPECT_NEAR(closed, JointDivergence(spec, 1.0, a), 1e-8 * std::max(1.0, closed))
          << "spec " << s << " alpha " << a;
      EXPECT_LE(RenyiDivergenceNumeric(spec, 1.0, a), closed * (1 + 1e-9) + 1e-12)
          << "spec " << s << " alpha " << a;
    }
  }
}

TEST(RenyiDivergenceNumeric, MixtureMarginalIsStrictlyBelowClosedForm) {
  const MixtureSpec spec(CompositionMode::kMixture,
                         {{0.5, GammaDist{2, 0.1}}, {0.5, UniformDist{0.1, 1}}});
  EXPECT_NEAR(LmoRdp(spec, 1.0, 8.0), 0.557086, 1e-5);
  EXPECT_NEAR(RenyiDivergenceNumeric(spec, 1.0, 8.0), 0.323449, 1e-5);
}

TEST(RenyiDivergenceNumeric, RejectsBadInput) {
  const auto lap = MixtureSpec::Single(DegenerateDist{1});
  EXPECT_THROW(RenyiDivergenceNumeric(lap, 1.0, 1.0), InvalidOrder);
  EXPECT_THROW(RenyiDivergenceNumeric(lap, -1.0, 2.0), InvalidArgument);
}

SearchGrid LaplaceGrid() {
  SearchGrid g;
  g.families = {Family::kDegenerate};
  g.weights = {1.0};
  for (int i = 1; i <= 40; ++i) g.degenerate_values.push_back(0.05 * i);
  return g;
}

TEST(CompareNoises, RowsAreConsistent) {
  const std::vector<double> eps{0.5, 2.0};
  const auto r = CompareNoises(eps, 1e-10, 1.0, LaplaceGrid(), 20'000, 7);
  ASSERT_EQ(r.rows.size(), 2u);
  for (const auto& row : r.rows) {
    EXPECT_LE(row.lmo_eps_total, row.eps);
    EXPECT_NEAR(row.gaussian_sigma,
                CalibrateGaussian(PrivacyBudget(row.eps, 1e-10), 1, IntegerOrders(128)), 1e-15);
    EXPECT_NEAR(row.reduction_rate, 1 - row.mean_abs_lmo / row.mean_abs_gauss, 1e-15);
    EXPECT_GT(row.var_lmo, 0.0);
  }
  EXPECT_GT(r.rows[0].gaussian_sigma, r.rows[1].gaussian_sigma);
  const auto again = CompareNoises(eps, 1e-10, 1.0, LaplaceGrid(), 20'000, 7);
  EXPECT_EQ(again.rows[1].mean_abs_lmo, r.rows[1].mean_abs_lmo);
}

TEST(CompareSamples, SelfComparison) {
  StreamRng rng(8, 0);
  const auto x = SampleGaussianNoise(1, 1, 10'000, rng);
  const auto s = CompareSamples(x, x);
  EXPECT_EQ(s.mean_abs_a, s.mean_abs_b);
  EXPECT_EQ(s.entropy_a, s.entropy_b);
}

TEST(Ablation, VariantEqualToBaseGivesZeroDifference) {
  auto base = LaplaceGrid();
  const std::vector<double> eps{1.0};
  const auto r = AblationCompare(base, base, eps, 1e-10, 1.0, 5000, 9);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].difference, 0.0);
  EXPECT_EQ(r.variant, "degenerate");
}

TEST(Ablation, RestrictFamilies) {
  const auto g = RestrictFamilies(DefaultSearchGrid(), {Family::kGamma});
  EXPECT_EQ(g.families, std::vector<Family>{Family::kGamma});
  EXPECT_EQ(g.weights, std::vector<double>{1.0});
  EXPECT_THROW(RestrictFamilies(DefaultSearchGrid(), {}), InvalidArgument);
  EXPECT_EQ(VariantName(DefaultSearchGrid()), "gamma+exp+uniform");
}

SearchGrid TinyMixedGrid() {
  SearchGrid g;
  g.families = {Family::kGamma, Family::kUniform};
  g.weights = {0.3, 0.7};
  g.gamma_shapes = {2.0, 5.0};
  g.gamma_scales = {0.1, 0.2};
  g.uniform_bounds = {{0.1, 1.0}, {0.5, 2.0}};
  return g;
}

TEST(QuantifySpace, ShapeAndDeterminism) {
  const std::vector<double> qs{0.1, 0.01};
  const std::vector<int> ks{10, 20};
  const auto a = QuantifySpace(qs, ks, 8, TinyMixedGrid(), 11);
  const auto b = QuantifySpace(qs, ks, 8, TinyMixedGrid(), 11);
  ASSERT_EQ(a.rows.size(), 4u);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].emd, b.rows[i].emd);
    EXPECT_EQ(a.rows[i].kl_repaired, b.rows[i].kl_repaired);
    EXPECT_GE(a.rows[i].kl, 0.0);
    EXPECT_NEAR(a.rows[i].mu_sim, 0.5, 0.1);
  }
  EXPECT_EQ(a.rows[2].trials, 100);
  EXPECT_EQ(a.rows[3].k, 20);
}

TEST(QuantifySpace, InvalidQuantization) {
  const std::vector<int> ks{10};
  for (double q : {0.0, 0.3, 1.5}) {
    const std::vector<double> qs{q};
    EXPECT_THROW(QuantifySpace(qs, ks, 2, TinyMixedGrid(), 1), InvalidQuantization) << q;
  }
  const std::vector<double> qs{0.1};
  const std::vector<int> bad{1};
  EXPECT_THROW(QuantifySpace(qs, bad, 2, TinyMixedGrid(), 1), InvalidQuantization);
}

TEST(QuantifySpace, HistogramMoments) {
  const auto [m, s] = analysis_detail::HistogramMoments(std::vector<double>{0.5, 0, 0, 0.5});
  EXPECT_DOUBLE_EQ(m, 0.5);
  EXPECT_DOUBLE_EQ(s, 0.375);
}

}  // namespace
}  // namespace lmodp
