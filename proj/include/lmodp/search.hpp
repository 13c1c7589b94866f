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

// Offline grid search for two-fold Laplace noise parameters that meet a
// target (eps, delta), plus the auxiliary quantities of the randomized-scale
// Laplace mechanism (usefulness, pure-DP bound, output CDF).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "lmodp/accountant.hpp"
#include "lmodp/errors.hpp"
#include "lmodp/json_io.hpp"
#include "lmodp/mgf.hpp"

namespace lmodp {

// P(|noise| <= gamma) = 1 - M(-gamma): given Y, a Laplace draw with inverse
// scale Y exceeds gamma in magnitude with probability exp(-gamma Y).
inline double Usefulness(const MixtureSpec& spec, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  const double u = -std::expm1(LogMgf(spec, -gamma));
  return std::clamp(u, 0.0, 1.0);
}

// Pure-DP level of the randomized-scale Laplace mechanism at sensitivity
// delta_q: ln[E(Y) / M'(-delta_q)].
inline double PureDpEpsilon(const MixtureSpec& spec, double sensitivity) {
  if (!(sensitivity > 0.0)) throw InvalidArgument("sensitivity must be positive");
  return LogMgfDerivative(spec, 0.0) - LogMgfDerivative(spec, -sensitivity);
}

// CDF of the mechanism output q_v + w.
inline double MechanismCdf(const MixtureSpec& spec, double query_value, double x) {
  if (x >= query_value) {
    if (std::isinf(x)) return 1.0;
    return 1.0 - 0.5 * Mgf(spec, -(x - query_value));
  }
  if (std::isinf(x)) return 0.0;
  return 0.5 * Mgf(spec, -(query_value - x));
}

enum class BudgetScope { kPerStep, kTotalComposed };
enum class Aggregation { kMin, kMax };
enum class Family { kGamma, kExponential, kUniform, kDegenerate };

inline std::string_view FamilyName(Family f) {
  switch (f) {
    case Family::kGamma: return "gamma";
    case Family::kExponential: return "exp";
    case Family::kUniform: return "uniform";
    case Family::kDegenerate: return "degenerate";
  }
  return "";
}

inline Family ParseFamily(std::string_view s) {
  if (s == "gamma") return Family::kGamma;
  if (s == "exp") return Family::kExponential;
  if (s == "uniform") return Family::kUniform;
  if (s == "degenerate") return Family::kDegenerate;
  throw InvalidArgument("unknown family '" + std::string(s) + "'");
}

struct SearchGrid {
  std::vector<CompositionMode> modes = {CompositionMode::kMixture};
  // Components present in every candidate, always in gamma, exp, uniform,
  // degenerate order.
  std::vector<Family> families = {Family::kGamma, Family::kExponential,
                                  Family::kUniform};
  std::vector<double> weights = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> gamma_shapes;
  std::vector<double> gamma_scales;
  std::vector<double> exp_rates;
  std::vector<std::pair<double, double>> uniform_bounds;
  std::vector<double> degenerate_values;
  int alpha_max = 128;
  double sensitivity = 1.0;
  int steps = 1;
  PrivacyBudget budget{1.0, 1e-10};
  BudgetScope scope = BudgetScope::kPerStep;
  Aggregation aggregation = Aggregation::kMin;
  std::optional<double> usefulness_gamma;  // defaults to the sensitivity
  std::uint64_t max_candidates = 10'000'000;
  std::uint64_t seed = 42;

  bool Has(Family f) const {
    return std::find(families.begin(), families.end(), f) != families.end();
  }
  double Gamma() const { return usefulness_gamma.value_or(sensitivity); }
  friend bool operator==(const SearchGrid&, const SearchGrid&) = default;

  // Mixed-radix digits, most significant first:
  // mode, one weight per family, k, theta, lambda, (a, b_u), c.
  std::vector<std::uint64_t> Radices() const {
    std::vector<std::uint64_t> r{modes.size()};
    for (std::size_t i = 0; i < families.size(); ++i) r.push_back(weights.size());
    if (Has(Family::kGamma)) {
      r.push_back(gamma_shapes.size());
      r.push_back(gamma_scales.size());
    }
    if (Has(Family::kExponential)) r.push_back(exp_rates.size());
    if (Has(Family::kUniform)) r.push_back(uniform_bounds.size());
    if (Has(Family::kDegenerate)) r.push_back(degenerate_values.size());
    return r;
  }

  void Validate() const {
    if (modes.empty() || families.empty() || weights.empty()) {
      throw InvalidArgument("grid needs at least one mode, family and weight");
    }
    for (Family f : families) {
      if (std::count(families.begin(), families.end(), f) != 1) {
        throw InvalidArgument("duplicate family in grid");
      }
    }
    if (Has(Family::kGamma) && (gamma_shapes.empty() || gamma_scales.empty())) {
      throw InvalidArgument("gamma family needs shape and scale values");
    }
    if (Has(Family::kExponential) && exp_rates.empty()) {
      throw InvalidArgument("exp family needs rate values");
    }
    if (Has(Family::kUniform) && uniform_bounds.empty()) {
      throw InvalidArgument("uniform family needs (a, b) pairs");
    }
    if (Has(Family::kDegenerate) && degenerate_values.empty()) {
      throw InvalidArgument("degenerate family needs values");
    }
    if (alpha_max < 2) throw InvalidOrder("alpha_max must be >= 2");
    if (!(sensitivity > 0.0)) throw InvalidArgument("sensitivity must be positive");
    if (steps < 1) throw InvalidArgument("steps must be >= 1");
    if (!(Gamma() > 0.0)) throw InvalidArgument("usefulness gamma must be positive");
  }

  std::uint64_t Cardinality() const {
    std::uint64_t n = 1;
    for (auto r : Radices()) {
      if (r != 0 && n > max_candidates / r + 1) return max_candidates + 1;
      n *= r;
    }
    return n;
  }

  MixtureSpec Decode(std::uint64_t index) const {
    const auto radices = Radices();
    std::vector<std::uint64_t> digit(radices.size());
    for (std::size_t i = radices.size(); i-- > 0;) {
      digit[i] = index % radices[i];
      index /= radices[i];
    }
    std::size_t pos = 0;
    const CompositionMode mode = modes[digit[pos++]];
    std::vector<double> w;
    for (std::size_t i = 0; i < families.size(); ++i) w.push_back(weights[digit[pos++]]);
    std::vector<WeightedComponent> comps;
    std::size_t wi = 0;
    // Component order is fixed regardless of the order families were listed.
    if (Has(Family::kGamma)) {
      const double k = gamma_shapes[digit[pos++]];
      const double theta = gamma_scales[digit[pos++]];
      comps.push_back({w[wi++], GammaDist{k, theta}});
    }
    if (Has(Family::kExponential)) {
      comps.push_back({w[wi++], ExponentialDist{exp_rates[digit[pos++]]}});
    }
    if (Has(Family::kUniform)) {
      const auto [a, b] = uniform_bounds[digit[pos++]];
      comps.push_back({w[wi++], UniformDist{a, b}});
    }
    if (Has(Family::kDegenerate)) {
      comps.push_back({w[wi++], DegenerateDist{degenerate_values[digit[pos++]]}});
    }
    return MixtureSpec(mode, std::move(comps));
  }
};

struct SearchResult {
  static constexpr int kVersion = 1;

  MixtureSpec spec;
  RdpCurve curve;  // per step
  double eps_total = 0.0;
  double argmin_alpha = 0.0;
  double usefulness = 0.0;
  std::string grid_fingerprint;
  std::uint64_t seed = 0;
  std::string created_at;
  // Context needed to re-check the result without the grid.
  PrivacyBudget budget{1.0, 1e-10};
  BudgetScope scope = BudgetScope::kPerStep;
  int steps = 1;
  double sensitivity = 1.0;
  std::uint64_t candidates = 0;

  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

inline Json ToJson(const SearchGrid& g) {
  Json modes = Json::array();
  for (auto m : g.modes) modes.push_back(std::string(ModeName(m)));
  Json fams = Json::array();
  for (auto f : g.families) fams.push_back(std::string(FamilyName(f)));
  Json bounds = Json::array();
  for (const auto& [a, b] : g.uniform_bounds) bounds.push_back({a, b});
  Json j = {
      {"modes", modes},
      {"families", fams},
      {"weights", g.weights},
      {"k", g.gamma_shapes},
      {"theta", g.gamma_scales},
      {"lambda", g.exp_rates},
      {"uniform", bounds},
      {"c", g.degenerate_values},
      {"alpha_max", g.alpha_max},
      {"sensitivity", g.sensitivity},
      {"steps", g.steps},
      {"budget", {{"eps", g.budget.eps}, {"delta", g.budget.delta}}},
      {"budget_scope", g.scope == BudgetScope::kPerStep ? "per_step" : "total"},
      {"aggregation", g.aggregation == Aggregation::kMin ? "min" : "max"},
      {"max_candidates", g.max_candidates},
      {"seed", g.seed},
  };
  j["usefulness_gamma"] = g.usefulness_gamma ? Json(*g.usefulness_gamma) : Json(nullptr);
  return j;
}

// Keys missing from `j` keep the values already in `base`.
inline SearchGrid GridFromJson(const Json& j, SearchGrid base = {}) {
  try {
    if (j.contains("modes")) {
      base.modes.clear();
      for (const auto& m : j.at("modes")) base.modes.push_back(ParseMode(m.get<std::string>()));
    }
    if (j.contains("families")) {
      base.families.clear();
      for (const auto& f : j.at("families")) base.families.push_back(ParseFamily(f.get<std::string>()));
    }
    if (j.contains("weights")) base.weights = j.at("weights").get<std::vector<double>>();
    if (j.contains("k")) base.gamma_shapes = j.at("k").get<std::vector<double>>();
    if (j.contains("theta")) base.gamma_scales = j.at("theta").get<std::vector<double>>();
    if (j.contains("lambda")) base.exp_rates = j.at("lambda").get<std::vector<double>>();
    if (j.contains("uniform")) {
      base.uniform_bounds.clear();
      for (const auto& p : j.at("uniform")) {
        base.uniform_bounds.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      }
    }
    if (j.contains("c")) base.degenerate_values = j.at("c").get<std::vector<double>>();
    if (j.contains("alpha_max")) base.alpha_max = j.at("alpha_max").get<int>();
    if (j.contains("sensitivity")) base.sensitivity = j.at("sensitivity").get<double>();
    if (j.contains("steps")) base.steps = j.at("steps").get<int>();
    if (j.contains("budget")) {
      base.budget = PrivacyBudget(j.at("budget").at("eps").get<double>(),
                                  j.at("budget").at("delta").get<double>());
    }
    if (j.contains("budget_scope")) {
      const auto s = j.at("budget_scope").get<std::string>();
      if (s == "per_step") base.scope = BudgetScope::kPerStep;
      else if (s == "total") base.scope = BudgetScope::kTotalComposed;
      else throw SchemaError("budget_scope must be per_step or total");
    }
    if (j.contains("aggregation")) {
      const auto s = j.at("aggregation").get<std::string>();
      if (s == "min") base.aggregation = Aggregation::kMin;
      else if (s == "max") base.aggregation = Aggregation::kMax;
      else throw SchemaError("aggregation must be min or max");
    }
    if (j.contains("usefulness_gamma")) {
      const auto& u = j.at("usefulness_gamma");
      base.usefulness_gamma = u.is_null() ? std::nullopt : std::optional<double>(u.get<double>());
    }
    if (j.contains("max_candidates")) base.max_candidates = j.at("max_candidates").get<std::uint64_t>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("grid config: ") + e.what());
  }
  return base;
}

inline std::string GridFingerprint(const SearchGrid& g) {
  return Fnv1aHex(ToJson(g).dump());
}

// Shipped default space. Uniform pairs are narrow (2%) or wide (20%) bands
// around log-spaced centers from 0.005 to about 6; the composition mode is
// searched too.
inline SearchGrid DefaultSearchGrid() {
  SearchGrid g;
  g.modes = {CompositionMode::kMixture, CompositionMode::kLinearCombination};
  g.gamma_shapes = {2.0, 20.0, 200.0, 2000.0};
  g.gamma_scales = {1e-4, 1e-3, 1e-2, 1e-1};
  g.exp_rates = {200.0, 2000.0, 20000.0};
  for (int j = 0; j <= 51; ++j) {
    const double m = 0.005 * std::pow(1.15, j);
    for (double w : {0.02, 0.2}) g.uniform_bounds.emplace_back(m * (1.0 - w / 2), m * (1.0 + w / 2));
  }
  return g;
}

// ISO-8601 stamp for persisted results: SOURCE_DATE_EPOCH when set, else the
// Unix epoch, so identical searches write identical files. Wall-clock time
// belongs in run manifests.
inline std::string ReproducibleTimestamp() {
  std::time_t t = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) t = std::strtoll(env, nullptr, 10);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace search_detail {

struct Best {
  double usefulness = -1.0;
  std::uint64_t index = 0;
  bool found = false;
};

class Evaluator {
 public:
  explicit Evaluator(const SearchGrid& g)
      : grid_(g),
        orders_(IntegerOrders(g.alpha_max)),
        log_inv_delta_(-std::log(g.budget.delta)),
        times_(g.scope == BudgetScope::kTotalComposed ? g.steps : 1) {}

  double Converted(double eps_alpha, double alpha) const {
    return eps_alpha * times_ + log_inv_delta_ / (alpha - 1.0);
  }

  // Jensen: log M(t) >= t E[Y], hence eps_alpha >= C E[Y] - ln(2)/(alpha-1).
  bool CertainlyInfeasible(const MixtureSpec& spec) const {
    if (grid_.aggregation != Aggregation::kMin) return false;
    const double mean = std::exp(LogMgfDerivative(spec, 0.0));
    double best = numeric::kInf;
    for (double alpha : {orders_.front(), orders_.back()}) {
      const double lb = times_ * (grid_.sensitivity * mean - std::log(2.0) / (alpha - 1.0)) +
                        log_inv_delta_ / (alpha - 1.0);
      best = std::min(best, lb);
    }
    // The bound is monotone in 1/(alpha-1), so an end point is its minimum.
    return best > grid_.budget.eps * (1.0 + 1e-9);
  }

  bool Feasible(const MixtureSpec& spec) const {
    if (grid_.aggregation == Aggregation::kMin) {
      for (double alpha : orders_) {
        const double e = LmoRdp(spec, grid_.sensitivity, alpha);
        if (!std::isinf(e) && Converted(e, alpha) <= grid_.budget.eps) return true;
      }
      return false;
    }
    bool any = false;
    for (double alpha : orders_) {
      const double e = LmoRdp(spec, grid_.sensitivity, alpha);
      if (std::isinf(e)) continue;
      any = true;
      if (Converted(e, alpha) > grid_.budget.eps) return false;
    }
    return any;
  }

  Best Scan(std::uint64_t begin, std::uint64_t end) const {
    Best best;
    const double gamma = grid_.Gamma();
    for (std::uint64_t i = begin; i < end; ++i) {
      const MixtureSpec spec = grid_.Decode(i);
      const double u = Usefulness(spec, gamma);
      if (best.found && u <= best.usefulness) continue;
      if (CertainlyInfeasible(spec)) continue;
      if (Feasible(spec)) best = {u, i, true};
    }
    return best;
  }

  const std::vector<double>& orders() const { return orders_; }
  int times() const { return times_; }

 private:
  const SearchGrid& grid_;
  std::vector<double> orders_;
  double log_inv_delta_;
  int times_;
};

}  // namespace search_detail

// Exhaustive search: among candidates meeting the budget, the one with the
// highest usefulness; ties go to the earliest candidate in enumeration order.
// The answer does not depend on `threads`.
inline SearchResult SearchOptimal(const SearchGrid& grid, unsigned threads = 1) {
  grid.Validate();
  const std::uint64_t n = grid.Cardinality();
  if (n > grid.max_candidates) {
    throw GridTooLarge("grid has more than " + std::to_string(grid.max_candidates) +
                       " candidates");
  }
  const search_detail::Evaluator eval(grid);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::uint64_t>(n, 1))));
  std::vector<search_detail::Best> partial(threads);
  if (threads == 1) {
    partial[0] = eval.Scan(0, n);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      const std::uint64_t b = n * t / threads;
      const std::uint64_t e = n * (t + 1) / threads;
      pool.emplace_back([&, t, b, e] { partial[t] = eval.Scan(b, e); });
    }
    for (auto& th : pool) th.join();
  }
  search_detail::Best best;
  for (const auto& p : partial) {
    if (!p.found) continue;
    if (!best.found || p.usefulness > best.usefulness ||
        (p.usefulness == best.usefulness && p.index < best.index)) {
      best = p;
    }
  }
  if (!best.found) {
    throw NoFeasibleCandidate("no candidate in the grid meets eps=" +
                              std::to_string(grid.budget.eps));
  }

  MixtureSpec spec = grid.Decode(best.index);
  RdpCurve curve = LmoCurve(spec, grid.sensitivity, eval.orders());
  const RdpCurve scoped = curve.Scaled(eval.times());
  double eps_total;
  double alpha;
  if (grid.aggregation == Aggregation::kMin) {
    const auto conv = ToDp(scoped, grid.budget.delta);
    eps_total = conv.eps;
    alpha = conv.alpha;
  } else {
    eps_total = -numeric::kInf;
    alpha = 0.0;
    for (std::size_t i = 0; i < scoped.size(); ++i) {
      if (std::isinf(scoped.eps()[i])) continue;
      const double v = eval.Converted(curve.eps()[i], scoped.orders()[i]);
      if (v > eps_total) {
        eps_total = v;
        alpha = scoped.orders()[i];
      }
    }
  }
  return SearchResult{
      .spec = std::move(spec),
      .curve = std::move(curve),
      .eps_total = eps_total,
      .argmin_alpha = alpha,
      .usefulness = best.usefulness,
      .grid_fingerprint = GridFingerprint(grid),
      .seed = grid.seed,
      .created_at = ReproducibleTimestamp(),
      .budget = grid.budget,
      .scope = grid.scope,
      .steps = grid.steps,
      .sensitivity = grid.sensitivity,
      .candidates = n,
  };
}

inline Json ToJson(const SearchResult& r) {
  return {
      {"version", SearchResult::kVersion},
      {"spec", ToJson(r.spec)},
      {"curve", ToJson(r.curve)},
      {"eps_total", r.eps_total},
      {"argmin_alpha", r.argmin_alpha},
      {"usefulness", r.usefulness},
      {"grid_fingerprint", r.grid_fingerprint},
      {"seed", r.seed},
      {"created_at", r.created_at},
      {"budget", {{"eps", r.budget.eps}, {"delta", r.budget.delta}}},
      {"budget_scope", r.scope == BudgetScope::kPerStep ? "per_step" : "total"},
      {"steps", r.steps},
      {"sensitivity", r.sensitivity},
      {"candidates", r.candidates},
  };
}

inline SearchResult ResultFromJson(const Json& j) {
  if (!j.is_object() || !j.contains("version")) throw SchemaError("missing version");
  if (!j.at("version").is_number_integer() ||
      j.at("version").get<int>() != SearchResult::kVersion) {
    throw SchemaError("unsupported search result version " + j.at("version").dump());
  }
  try {
    SearchResult r{
        .spec = SpecFromJson(j.at("spec")),
        .curve = CurveFromJson(j.at("curve")),
        .eps_total = j.at("eps_total").get<double>(),
        .argmin_alpha = j.at("argmin_alpha").get<double>(),
        .usefulness = j.at("usefulness").get<double>(),
        .grid_fingerprint = j.at("grid_fingerprint").get<std::string>(),
        .seed = j.at("seed").get<std::uint64_t>(),
        .created_at = j.at("created_at").get<std::string>(),
        .budget = PrivacyBudget(j.at("budget").at("eps").get<double>(),
                                j.at("budget").at("delta").get<double>()),
        .scope = j.at("budget_scope").get<std::string>() == "total" ? BudgetScope::kTotalComposed
                                                                    : BudgetScope::kPerStep,
        .steps = j.at("steps").get<int>(),
        .sensitivity = j.at("sensitivity").get<double>(),
        .candidates = j.value("candidates", std::uint64_t{0}),
    };
    if (r.eps_total > r.budget.eps) {
      throw ValidationError("eps_total " + std::to_string(r.eps_total) +
                            " exceeds the recorded budget " + std::to_string(r.budget.eps));
    }
    if (!(r.usefulness >= 0.0 && r.usefulness <= 1.0)) {
      throw ValidationError("usefulness must lie in [0, 1]");
    }
    return r;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("search result: ") + e.what());
  }
}

inline void SaveResult(const SearchResult& result, const std::string& path) {
  WriteJsonFile(path, ToJson(result));
}

inline SearchResult LoadResult(const std::string& path) {
  return ResultFromJson(ReadJsonFile(path));
}

}  // namespace lmodp
