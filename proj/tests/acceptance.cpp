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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lmodp/lmodp.hpp"
#include "test_util.hpp"

namespace {

namespace fs = std::filesystem;
using namespace lmodp;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

unsigned Threads() { return std::max(1u, std::thread::hardware_concurrency()); }

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 1. Closed-form RDP against the quadrature divergence.
Outcome RdpOracle() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> alphas{2, 4, 8, 16, 32};
  const std::vector<double> cs{0.5, 1, 2};
  double worst_lap = 0.0;
  for (double c : {0.3, 1.0, 2.5}) {
    const auto spec = MixtureSpec::Single(DegenerateDist{c});
    for (double a : alphas) {
      for (double s : cs) {
        worst_lap = std::max(worst_lap,
                             std::fabs(LmoRdp(spec, s, a) - RenyiDivergenceNumeric(spec, s, a)));
      }
    }
  }
  std::mt19937_64 gen(2024);
  double worst_mix = 0.0;
  int failures = 0, cases = 0, quad_errors = 0;
  for (int i = 0; i < 50; ++i) {
    const auto spec = testing::RandomMixture(gen);
    for (double a : alphas) {
      for (double s : cs) {
        ++cases;
        double d = 0.0;
        try {
          d = std::fabs(LmoRdp(spec, s, a) - RenyiDivergenceNumeric(spec, s, a));
        } catch (const QuadratureNonConvergence&) {
          ++quad_errors;
          ++failures;
          continue;
        }
        worst_mix = std::max(worst_mix, d);
        failures += d > 1e-4;
      }
    }
  }
  const double t = Seconds(start);
  Outcome o;
  o.pass = worst_lap <= 1e-6 && failures == 0 && t <= 120.0;
  o.detail = "laplace max|diff|=" + Fmt("%.2e", worst_lap) + " (tol 1e-6); mixtures " +
             std::to_string(failures) + "/" + std::to_string(cases) +
             " cases over 1e-4, max|diff|=" + Fmt("%.3g", worst_mix) +
             ", quadrature failures=" + std::to_string(quad_errors) + "; " + Fmt("%.1fs", t);
  return o;
}

// 2. The three-term and two-term closed forms agree at unit sensitivity.
Outcome ThreeTermFormIdentity() {
  std::mt19937_64 gen(7);
  double worst = 0.0;
  int mismatched_inf = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto spec = testing::RandomSpec(gen, {63.0});
    for (int a = 2; a <= 64; ++a) {
      const double x = LmoRdp(spec, 1.0, a);
      const double y = LmoRdpThreeTermForm(spec, 1.0, a);
      if (std::isinf(x) || std::isinf(y)) {
        mismatched_inf += x != y;
        continue;
      }
      worst = std::max(worst, std::fabs(x - y) / std::max(std::fabs(x), 1e-300));
    }
  }
  return {worst <= 1e-12 && mismatched_inf == 0,
          "max relative diff=" + Fmt("%.2e", worst) + " (tol 1e-12) over 1000 specs x 63 orders"};
}

// 3. Degenerate specs are plain Laplace.
Outcome LaplaceRecovery() {
  double worst_rdp = 0.0, worst_pure = 0.0;
  for (double c : {0.1, 0.5, 1.0, 2.0}) {
    const auto spec = MixtureSpec::Single(DegenerateDist{c});
    for (double s : {0.25, 1.0, 3.0}) {
      const double b = 1.0 / c;
      for (int a = 2; a <= 128; ++a) {
        const double ref = std::log(a / (2.0 * a - 1) * std::exp((a - 1) * s / b) +
                                    (a - 1) / (2.0 * a - 1) * std::exp(-a * s / b)) /
                           (a - 1);
        if (!std::isfinite(ref)) continue;
        worst_rdp = std::max(worst_rdp, std::fabs(LmoRdp(spec, s, a) - ref) / std::max(1.0, ref));
      }
      worst_pure = std::max(worst_pure, std::fabs(PureDpEpsilon(spec, s) - c * s));
    }
  }
  return {worst_rdp <= 1e-12 && worst_pure <= 1e-12,
          "rdp max diff=" + Fmt("%.2e", worst_rdp) + ", pure eps max diff=" +
              Fmt("%.2e", worst_pure) + " (tol 1e-12)"};
}

// 4 and 5 share one comparison run.
ComparisonReport& Comparison(double* seconds) {
  static ComparisonReport report;
  static double elapsed = 0.0;
  static bool done = false;
  if (!done) {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<double> eps{0.3, 0.7, 2.0, 3.0};
    report = CompareNoises(eps, 1e-10, 1.0, DefaultSearchGrid(), 1'000'000, 42, Threads());
    elapsed = Seconds(start);
    done = true;
  }
  *seconds = elapsed;
  return report;
}

Outcome NoiseReduction() {
  double t = 0.0;
  const auto& r = Comparison(&t);
  const double target[] = {95.13, 92.19, 87.71, 87.31};
  bool above = true, within = true, monotone = true;
  std::string rates;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const double pct = 100.0 * r.rows[i].reduction_rate;
    above &= pct >= 80.0;
    within &= std::fabs(pct - target[i]) <= 10.0;
    if (i > 0) monotone &= r.rows[i].reduction_rate <= r.rows[i - 1].reduction_rate;
    rates += (i ? ", " : "") + Fmt("%.2f%%", pct);
  }
  return {above && within && monotone && t <= 600.0,
          "rates {" + rates + "} vs {95.13, 92.19, 87.71, 87.31}: >=80%: " +
              (above ? "yes" : "no") + ", within 10 points: " + (within ? "yes" : "no") +
              ", non-increasing: " + (monotone ? "yes" : "no") + "; " + Fmt("%.1fs", t)};
}

Outcome EntropyVariance() {
  double t = 0.0;
  const auto& r = Comparison(&t);
  bool ok = true;
  std::string detail;
  for (const auto& row : r.rows) {
    ok &= row.entropy_lmo < row.entropy_gauss && row.var_lmo < row.var_gauss;
    detail += Fmt("eps=%g: ", row.eps) + Fmt("H %.3f", row.entropy_lmo) +
              Fmt("<%.3f, ", row.entropy_gauss) + Fmt("var %.3g", row.var_lmo) +
              Fmt("<%.3g; ", row.var_gauss);
  }
  return {ok, detail};
}

// 6. Search-space quantification.
Outcome Quantification() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0, 1);
  bool zeros = true;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> h(10 + gen() % 91);
    double s = 0;
    for (auto& v : h) s += v = u(gen);
    for (auto& v : h) v /= s;
    zeros &= KlDivergence(h, h) == 0.0 && L2Distance(h, h) == 0.0 && Emd(h, h, 0.01) == 0.0;
  }
  const std::vector<double> qs{1e-1, 1e-2, 1e-3};
  const std::vector<int> ks{10, 100};
  const auto rep = QuantifySpace(qs, ks, 100, DefaultSearchGrid(), 42);
  const double t = Seconds(start);
  bool emd_ok = true;
  std::cout << "  quantify table: q k kl l2 emd (index pairing) | emd (re-paired)\n";
  for (const auto& row : rep.rows) {
    emd_ok &= row.emd <= 1e-2;
    std::printf("  %g %d %.4g %.4g %.4g | %.4g\n", row.q, row.k, row.kl, row.l2, row.emd,
                row.emd_repaired);
  }
  double worst = 0.0;
  for (const auto& row : rep.rows) worst = std::max(worst, row.emd);
  return {zeros && emd_ok && t <= 300.0,
          std::string("identical-input zeros: ") + (zeros ? "yes" : "no") +
              ", max mean EMD=" + Fmt("%.4g", worst) + " (tol 1e-2); " + Fmt("%.1fs", t)};
}

// 7. Sampler against the analytic CDF and usefulness.
Outcome SamplerCorrectness() {
  std::mt19937_64 gen(8);
  const std::size_t n = 100'000;
  const double crit = std::sqrt(-std::log(5e-4) / 2.0) / std::sqrt(static_cast<double>(n));
  bool ok = true;
  double worst_ks = 0.0, worst_z = 0.0;
  for (int s = 0; s < 5; ++s) {
    const auto spec = testing::RandomSpec(gen);
    StreamRng rng(8, static_cast<std::uint64_t>(s));
    auto w = SampleLmoNoise(spec, n, rng);
    std::sort(w.begin(), w.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = MechanismCdf(spec, 0.0, w[i]);
      d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    worst_ks = std::max(worst_ks, d / crit);
    ok &= d < crit;
    const double u = Usefulness(spec, 1.0);
    const double hit = static_cast<double>(
                           std::upper_bound(w.begin(), w.end(), 1.0) -
                           std::lower_bound(w.begin(), w.end(), -1.0)) /
                       n;
    const double se = std::sqrt(std::max(u * (1 - u), 1e-12) / n);
    worst_z = std::max(worst_z, std::fabs(hit - u) / se);
    ok &= std::fabs(hit - u) <= 3 * se;
  }
  return {ok, "max KS/critical=" + Fmt("%.3f", worst_ks) + " (<1), max |usefulness z|=" +
                  Fmt("%.2f", worst_z) + " (<=3)"};
}

// 8. Desk-scale DP-SGD.
Outcome DpSgd() {
  const auto start = std::chrono::steady_clock::now();
  const Dataset data = MakeBlobs(4000, 20, 3.0, 1.0, 42);
  TrainConfig base;
  base.steps = 300;
  base.batch_size = 256;
  base.learning_rate = 0.5;
  base.eval_every = 0;

  SearchGrid grid = DefaultSearchGrid();
  grid.budget = PrivacyBudget(3.0, 1e-10);
  grid.scope = BudgetScope::kTotalComposed;
  grid.steps = base.steps;
  const auto found = SearchOptimal(grid, Threads());
  const double sigma =
      CalibrateGaussian(PrivacyBudget(3.0, 1e-10), base.steps, IntegerOrders(base.alpha_max));

  std::vector<double> plain, lmo, gauss;
  int lmo_wins = 0;
  bool ledger_ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainConfig c = base;
    c.seed = seed;
    plain.push_back(Evaluate(Train(data, c).model, data).accuracy);
    c.noise = LmoNoise{found.spec};
    const auto rl = Train(data, c);
    lmo.push_back(Evaluate(rl.model, data).accuracy);
    ledger_ok &= ToDp(Compose(rl.ledger.step_curves), c.delta).eps == rl.ledger.eps_total &&
                 rl.ledger.eps_total <= 3.0;
    c.noise = GaussianNoise{sigma};
    const auto rg = Train(data, c);
    gauss.push_back(Evaluate(rg.model, data).accuracy);
    ledger_ok &= ToDp(Compose(rg.ledger.step_curves), c.delta).eps == rg.ledger.eps_total &&
                 rg.ledger.eps_total <= 3.0;
    lmo_wins += lmo.back() >= gauss.back();
  }
  const double t = Seconds(start);
  const double mp = Median(plain), ml = Median(lmo), mg = Median(gauss);
  const bool ok = mp >= 0.95 && mp - ml <= 0.10 && lmo_wins >= 4 && ledger_ok && t <= 300.0;
  std::string per_seed;
  for (std::size_t i = 0; i < lmo.size(); ++i) {
    per_seed += Fmt(" %.4f", lmo[i]) + Fmt("/%.4f", gauss[i]);
  }
  return {ok, "median acc plain=" + Fmt("%.4f", mp) + " lmo=" + Fmt("%.4f", ml) +
                  " gauss=" + Fmt("%.4f", mg) + " (sigma=" + Fmt("%.3f", sigma) +
                  "); lmo>=gauss in " + std::to_string(lmo_wins) +
                  "/5 seeds (lmo/gauss:" + per_seed + "); ledger recomputes: " +
                  (ledger_ok ? "yes" : "no") + "; " + Fmt("%.1fs", t)};
}

// 9. CLI determinism.
std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int RunCli(const std::string& args) {
  const std::string cmd = std::string(LMODP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome Determinism() {
  const fs::path dir = fs::temp_directory_path() / ("lmodp_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto compare_cfg = dir / "compare.json";
  WriteJsonFile(compare_cfg.string(), Json{{"eps", {0.7, 2.0}}, {"n", 100000}});
  const auto train_cfg = dir / "train.json";
  bool ok = true;
  std::string detail;
  for (const char* run : {"a", "b"}) {
    const fs::path out = dir / run;
    int rc = RunCli("-o " + out.string() + " search --eps 3 --steps 300 --scope total");
    WriteJsonFile(train_cfg.string(),
                  Json{{"noise", {{"result", (dir / "a" / "search_result.json").string()}}},
                       {"eval_every", 10}});
    rc |= RunCli("-o " + out.string() + " compare -c " + compare_cfg.string());
    rc |= RunCli("-o " + out.string() + " train -c " + train_cfg.string());
    ok &= rc == 0;
  }
  for (const char* f : {"search_result.json", "compare.csv", "compare.json", "compare.svg",
                        "ledger.json", "metrics.csv", "model.json"}) {
    const auto a = Slurp(dir / "a" / f), b = Slurp(dir / "b" / f);
    const bool same = !a.empty() && a == b;
    ok &= same;
    if (!same) detail += std::string(f) + " differs; ";
  }
  fs::remove_all(dir);
  return {ok, detail.empty() ? "search, compare and train outputs byte-identical" : detail};
}

// 10. Gradient check.
Outcome GradientCheck() {
  std::mt19937_64 gen(10);
  std::normal_distribution<double> n(0, 1);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    Model m = Model::Zeros(2 + static_cast<int>(gen() % 4), 1 + gen() % 20);
    for (auto& p : m.params) p = n(gen);
    std::vector<double> x(m.d);
    for (auto& v : x) v = n(gen);
    const int y = static_cast<int>(gen() % m.classes);
    auto loss = [&](const Model& mm) {
      std::vector<double> z(mm.classes);
      for (int c = 0; c < mm.classes; ++c) {
        z[c] = mm.params[mm.classes * mm.d + c];
        for (std::size_t j = 0; j < mm.d; ++j) z[c] += mm.params[c * mm.d + j] * x[j];
      }
      const double hi = *std::max_element(z.begin(), z.end());
      double s = 0;
      for (double v : z) s += std::exp(v - hi);
      return hi + std::log(s) - z[y];
    };
    const auto g = PerSampleGradient(m, x, y);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double h = 1e-5;
      Model a = m, b = m;
      a.params[i] += h;
      b.params[i] -= h;
      const double fd = (loss(a) - loss(b)) / (2 * h);
      num += (g[i] - fd) * (g[i] - fd);
      den += fd * fd;
    }
    worst = std::max(worst, std::sqrt(num / std::max(den, 1e-300)));
  }
  return {worst <= 1e-6, "max relative error=" + Fmt("%.2e", worst) + " (tol 1e-6)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"RDP oracle equivalence", RdpOracle},
      {"Three-term form identity at C=1", ThreeTermFormIdentity},
      {"Laplace recovery", LaplaceRecovery},
      {"Noise reduction vs Gaussian", NoiseReduction},
      {"Entropy and variance ordering", EntropyVariance},
      {"Search-space quantification", Quantification},
      {"Sampler correctness", SamplerCorrectness},
      {"DP-SGD desk scale", DpSgd},
      {"CLI determinism", Determinism},
      {"Gradient check", GradientCheck},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " ("
              << criteria[i].first << "): " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
