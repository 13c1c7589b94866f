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

// DP-SGD for multinomial logistic regression: Poisson batches, per-example
// l2 clipping, one noise vector per step, and a Renyi-DP ledger.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "lmodp/accountant.hpp"
#include "lmodp/errors.hpp"
#include "lmodp/json_io.hpp"
#include "lmodp/mgf.hpp"
#include "lmodp/rng.hpp"
#include "lmodp/sampler.hpp"

namespace lmodp {

struct Dataset {
  std::vector<double> features;  // row-major n x d
  std::vector<int> labels;
  std::size_t n = 0;
  std::size_t d = 0;
  int classes = 0;
  std::string provenance;

  std::span<const double> Row(std::size_t i) const {
    return {features.data() + i * d, d};
  }

  void Validate() const {
    if (n < 1 || d < 1) throw ShapeMismatch("dataset needs n >= 1 and d >= 1");
    if (features.size() != n * d || labels.size() != n) {
      throw ShapeMismatch("dataset buffers do not match n x d");
    }
    for (double v : features) {
      if (!std::isfinite(v)) throw InvalidArgument("non-finite feature value");
    }
    for (int y : labels) {
      if (y < 0 || y >= classes) throw InvalidArgument("label out of range");
    }
  }
};

// Headered CSV; the label column is named "y", every other column is a
// numeric feature. Labels must be integers 0..V-1.
inline Dataset LoadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": empty file");
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      out.push_back(cell);
    }
    return out;
  };
  const auto header = split(line);
  const auto ycol = std::find(header.begin(), header.end(), "y");
  if (ycol == header.end()) throw SchemaError(path + ": no 'y' column");
  const auto label_index = static_cast<std::size_t>(ycol - header.begin());

  Dataset ds;
  ds.d = header.size() - 1;
  ds.provenance = "csv:" + path;
  int max_label = -1;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": wrong column count");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (cells[c].empty() || *end != '\0') {
        throw SchemaError(path + ":" + std::to_string(lineno) + ": not a number");
      }
      if (c == label_index) {
        if (v != std::floor(v) || v < 0) {
          throw SchemaError(path + ":" + std::to_string(lineno) + ": bad label");
        }
        ds.labels.push_back(static_cast<int>(v));
        max_label = std::max(max_label, static_cast<int>(v));
      } else {
        ds.features.push_back(v);
      }
    }
    ++ds.n;
  }
  ds.classes = std::max(2, max_label + 1);
  ds.Validate();
  return ds;
}

// Two Gaussian blobs N(+-separation * e_1, blob_sigma^2 I), balanced labels.
inline Dataset MakeBlobs(std::size_t n, std::size_t d, double separation,
                         double blob_sigma, std::uint64_t seed) {
  if (n < 1 || d < 1) throw InvalidArgument("blobs need n >= 1 and d >= 1");
  Dataset ds;
  ds.n = n;
  ds.d = d;
  ds.classes = 2;
  ds.features.resize(n * d);
  ds.labels.resize(n);
  StreamRng rng(seed, 0xB10B);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    ds.labels[i] = y;
    for (std::size_t j = 0; j < d; ++j) {
      ds.features[i * d + j] = blob_sigma * rng.Normal();
    }
    ds.features[i * d] += y == 1 ? separation : -separation;
  }
  std::ostringstream os;
  os << "blobs(n=" << n << ",d=" << d << ",separation=" << separation
     << ",sigma=" << blob_sigma << ",seed=" << seed << ")";
  ds.provenance = os.str();
  return ds;
}

// Weights W (V x d, row-major) followed by biases b (V).
struct Model {
  int classes = 0;
  std::size_t d = 0;
  std::vector<double> params;

  static Model Zeros(int classes, std::size_t d) {
    return {classes, d, std::vector<double>(static_cast<std::size_t>(classes) * (d + 1), 0.0)};
  }
  std::size_t size() const { return params.size(); }
  friend bool operator==(const Model&, const Model&) = default;
};

namespace dpsgd_detail {

inline void CheckShapes(const Model& m, std::span<const double> x) {
  if (m.classes < 2 || m.params.size() != static_cast<std::size_t>(m.classes) * (m.d + 1)) {
    throw ShapeMismatch("model parameter vector has the wrong length");
  }
  if (x.size() != m.d) throw ShapeMismatch("feature vector length differs from model");
}

// Softmax probabilities of Wx + b.
inline std::vector<double> Probabilities(const Model& m, std::span<const double> x) {
  std::vector<double> z(static_cast<std::size_t>(m.classes));
  const std::size_t bias = static_cast<std::size_t>(m.classes) * m.d;
  double hi = -numeric::kInf;
  for (int c = 0; c < m.classes; ++c) {
    double s = m.params[bias + c];
    const double* w = m.params.data() + static_cast<std::size_t>(c) * m.d;
    for (std::size_t j = 0; j < m.d; ++j) s += w[j] * x[j];
    z[c] = s;
    hi = std::max(hi, s);
  }
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - hi);
    total += v;
  }
  for (double& v : z) v /= total;
  return z;
}

}  // namespace dpsgd_detail

// Gradient of -log p_y(x) with respect to (W, b).
inline std::vector<double> PerSampleGradient(const Model& model, std::span<const double> x,
                                             int y) {
  dpsgd_detail::CheckShapes(model, x);
  if (y < 0 || y >= model.classes) throw ShapeMismatch("label out of range for model");
  auto p = dpsgd_detail::Probabilities(model, x);
  p[static_cast<std::size_t>(y)] -= 1.0;
  std::vector<double> g(model.size());
  const std::size_t bias = static_cast<std::size_t>(model.classes) * model.d;
  for (int c = 0; c < model.classes; ++c) {
    for (std::size_t j = 0; j < model.d; ++j) g[c * model.d + j] = p[c] * x[j];
    g[bias + c] = p[c];
  }
  return g;
}

inline double L2Norm(std::span<const double> g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

// g / max(1, |g|_2 / C), in place.
inline void ClipInPlace(std::span<double> g, double clip) {
  if (!(clip > 0.0)) throw InvalidArgument("clip threshold must be positive");
  const double norm = L2Norm(g);
  if (norm <= clip) return;
  const double f = clip / norm;
  for (double& v : g) v *= f;
}

inline std::vector<double> Clip(std::vector<double> g, double clip) {
  ClipInPlace(g, clip);
  return g;
}

struct EvalMetrics {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

inline EvalMetrics Evaluate(const Model& model, const Dataset& data) {
  if (data.n == 0) throw EmptyInput("cannot evaluate on an empty dataset");
  if (data.d != model.d || data.classes > model.classes) {
    throw ShapeMismatch("dataset and model shapes differ");
  }
  double correct = 0.0, loss = 0.0;
  for (std::size_t i = 0; i < data.n; ++i) {
    const auto p = dpsgd_detail::Probabilities(model, data.Row(i));
    const auto best = std::max_element(p.begin(), p.end()) - p.begin();
    const int y = data.labels[i];
    if (best == y) correct += 1.0;
    loss -= std::log(std::max(p[static_cast<std::size_t>(y)], 1e-300));
  }
  return {correct / data.n, loss / data.n};
}

struct NoNoise {};
struct GaussianNoise {
  double multiplier;  // noise std = C * multiplier
};
struct LmoNoise {
  MixtureSpec spec;
};
using NoiseBackend = std::variant<NoNoise, GaussianNoise, LmoNoise>;

inline std::string BackendName(const NoiseBackend& b) {
  if (std::holds_alternative<NoNoise>(b)) return "none";
  if (std::holds_alternative<GaussianNoise>(b)) return "gaussian";
  return "lmo";
}

struct TrainConfig {
  int steps = 300;
  double batch_size = 256.0;  // expected batch size B; q = B / n
  double learning_rate = 0.5;
  std::function<double(int)> schedule;  // overrides learning_rate when set
  double clip = 1.0;
  NoiseBackend noise = NoNoise{};
  std::uint64_t seed = 42;
  double delta = 1e-10;
  int alpha_max = 128;
  bool amplify = false;  // charge Poisson-amplified curves with q = B / n
  int eval_every = 1;    // 0 disables per-step metrics
  // Sees every clipped per-example gradient before it is summed.
  std::function<void(std::span<const double>)> clip_hook;

  double Rate(int step) const { return schedule ? schedule(step) : learning_rate; }
};

struct StepRecord {
  int step = 0;
  int batch_size = 0;
  bool skipped = false;
};

struct TrainLedger {
  std::vector<StepRecord> steps;
  std::vector<RdpCurve> step_curves;  // one per executed step
  RdpCurve composed;
  double delta = 0.0;
  double eps_total = 0.0;  // +inf without noise
  double argmin_alpha = 0.0;
  std::string backend;
  double wall_clock_seconds = 0.0;  // not serialized
};

struct MetricsRow {
  int step = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double eps_cumulative = 0.0;
};

struct TrainResult {
  Model model;
  TrainLedger ledger;
  std::vector<MetricsRow> metrics;
};

// Per-step privacy curve charged for one executed step.
inline RdpCurve StepCurve(const TrainConfig& cfg, const std::vector<double>& orders,
                          double q) {
  RdpCurve base;
  if (const auto* g = std::get_if<GaussianNoise>(&cfg.noise)) {
    base = GaussianCurve(g->multiplier, orders);
  } else if (const auto* l = std::get_if<LmoNoise>(&cfg.noise)) {
    base = LmoCurve(l->spec, cfg.clip, orders);
  } else {
    return RdpCurve(orders, std::vector<double>(orders.size(), numeric::kInf));
  }
  return cfg.amplify ? PoissonAmplifiedCurve(base, q) : base;
}

inline DpConversion LedgerTotal(const RdpCurve& composed, double delta) {
  for (double e : composed.eps()) {
    if (!std::isinf(e)) return ToDp(composed, delta);
  }
  return {numeric::kInf, 0.0};
}

inline TrainResult Train(const Dataset& data, const TrainConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  data.Validate();
  if (cfg.steps < 1) throw InvalidArgument("steps must be >= 1");
  if (!(cfg.batch_size > 0.0) || cfg.batch_size > static_cast<double>(data.n)) {
    throw InvalidArgument("batch size must lie in (0, n]");
  }
  if (!(cfg.clip > 0.0)) throw InvalidArgument("clip threshold must be positive");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw InvalidArgument("delta must be in (0,1)");
  if (!cfg.schedule && !(cfg.learning_rate > 0.0)) {
    throw InvalidArgument("learning rate must be positive");
  }

  const auto orders = IntegerOrders(cfg.alpha_max);
  const double q = cfg.batch_size / static_cast<double>(data.n);
  const RdpCurve per_step = StepCurve(cfg, orders, q);
  if (!std::holds_alternative<NoNoise>(cfg.noise)) {
    const bool any = std::any_of(per_step.eps().begin(), per_step.eps().end(),
                                 [](double e) { return !std::isinf(e); });
    if (!any) {
      throw InfeasibleNoise("noise has no finite Renyi order at C=" + std::to_string(cfg.clip));
    }
  }

  TrainResult out{Model::Zeros(data.classes, data.d), {}, {}};
  out.ledger.delta = cfg.delta;
  out.ledger.backend = BackendName(cfg.noise);
  out.ledger.composed = RdpCurve::Zero(orders);
  Model& model = out.model;
  const std::size_t dim = model.size();

  StreamRng batch_rng(cfg.seed, 1);
  StreamRng noise_rng(cfg.seed, 2);
  std::vector<double> sum(dim);
  std::vector<double> composed(orders.size(), 0.0);

  for (int step = 0; step < cfg.steps; ++step) {
    std::fill(sum.begin(), sum.end(), 0.0);
    int batch = 0;
    for (std::size_t i = 0; i < data.n; ++i) {
      if (batch_rng.Uniform01() >= q) continue;
      ++batch;
      auto g = PerSampleGradient(model, data.Row(i), data.labels[i]);
      ClipInPlace(g, cfg.clip);
      if (cfg.clip_hook) cfg.clip_hook(g);
      for (std::size_t j = 0; j < dim; ++j) sum[j] += g[j];
    }
    StepRecord rec{step, batch, batch == 0};
    if (batch > 0) {
      if (const auto* gn = std::get_if<GaussianNoise>(&cfg.noise)) {
        const auto w = SampleGaussianNoise(gn->multiplier, cfg.clip, dim, noise_rng);
        for (std::size_t j = 0; j < dim; ++j) sum[j] += w[j];
      } else if (const auto* ln = std::get_if<LmoNoise>(&cfg.noise)) {
        const auto w = SampleLmoNoise(ln->spec, dim, noise_rng);
        for (std::size_t j = 0; j < dim; ++j) sum[j] += w[j];
      }
      const double eta = cfg.Rate(step);
      for (std::size_t j = 0; j < dim; ++j) model.params[j] -= eta * sum[j] / batch;
      out.ledger.step_curves.push_back(per_step);
      for (std::size_t a = 0; a < orders.size(); ++a) composed[a] += per_step.eps()[a];
    }
    out.ledger.steps.push_back(rec);
    if (cfg.eval_every > 0 && ((step + 1) % cfg.eval_every == 0 || step + 1 == cfg.steps)) {
      const auto m = Evaluate(model, data);
      const double eps = LedgerTotal(RdpCurve(orders, composed), cfg.delta).eps;
      out.metrics.push_back({step + 1, m.mean_loss, m.accuracy, eps});
    }
  }
  out.ledger.composed = out.ledger.step_curves.empty()
                            ? RdpCurve::Zero(orders)
                            : Compose(out.ledger.step_curves);
  const auto total = LedgerTotal(out.ledger.composed, cfg.delta);
  out.ledger.eps_total = total.eps;
  out.ledger.argmin_alpha = total.alpha;
  out.ledger.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

// Runs of identical per-step curves are stored once with a repeat count.
inline Json ToJson(const TrainLedger& ledger) {
  Json steps = Json::array();
  for (const auto& s : ledger.steps) {
    steps.push_back({{"step", s.step}, {"batch_size", s.batch_size}, {"skipped", s.skipped}});
  }
  Json curves = Json::array();
  const RdpCurve* last = nullptr;
  for (const auto& c : ledger.step_curves) {
    if (last == nullptr || *last != c) {
      curves.push_back({{"curve", ToJson(c)}, {"count", 1}});
    } else {
      curves.back()["count"] = curves.back()["count"].get<int>() + 1;
    }
    last = &c;
  }
  return {
      {"version", 1},
      {"backend", ledger.backend},
      {"delta", ledger.delta},
      {"steps", steps},
      {"step_curves", curves},
      {"composed", ToJson(ledger.composed)},
      {"eps_total", EpsToJson(ledger.eps_total)},
      {"argmin_alpha", ledger.argmin_alpha},
  };
}

inline TrainLedger LedgerFromJson(const Json& j) {
  try {
    TrainLedger l;
    l.backend = j.at("backend").get<std::string>();
    l.delta = j.at("delta").get<double>();
    for (const auto& s : j.at("steps")) {
      l.steps.push_back({s.at("step").get<int>(), s.at("batch_size").get<int>(),
                         s.at("skipped").get<bool>()});
    }
    for (const auto& c : j.at("step_curves")) {
      const RdpCurve curve = CurveFromJson(c.at("curve"));
      for (int i = 0; i < c.at("count").get<int>(); ++i) l.step_curves.push_back(curve);
    }
    l.composed = CurveFromJson(j.at("composed"));
    l.eps_total = EpsFromJson(j.at("eps_total"));
    l.argmin_alpha = j.at("argmin_alpha").get<double>();
    return l;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("train ledger: ") + e.what());
  }
}

}  // namespace lmodp
