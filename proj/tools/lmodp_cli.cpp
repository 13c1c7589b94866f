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

// lmodp: search, account, sample, compare, quantify and train from the
// command line. Exit codes: 0 success, 1 usage or I/O error, 2 infeasible.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "lmodp/lmodp.hpp"
#include "svg.hpp"

namespace {

namespace fs = std::filesystem;
using lmodp::Json;

constexpr const char* kVersion = "0.1.0";

struct Run {
  std::string subcommand;
  fs::path out_dir;
  std::uint64_t seed = 42;
  int verbosity = 0;
  std::vector<std::string> argv;
  Json config = Json::object();
  Json outputs = Json::array();
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();

  void Write(const std::string& name, const std::string& text) {
    fs::create_directories(out_dir);
    lmodp::WriteTextFile((out_dir / name).string(), text);
    outputs.push_back({{"file", name}, {"fnv1a", lmodp::Fnv1aHex(text)}});
  }
  void WriteJson(const std::string& name, const Json& j) { Write(name, j.dump(2) + "\n"); }
  void Log(const std::string& msg) const {
    if (verbosity > 0) std::cerr << "[lmodp " << subcommand << "] " << msg << "\n";
  }

  void WriteManifest() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(started);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm);
    Json m = {
        {"tool", "lmodp"},
        {"version", kVersion},
        {"subcommand", subcommand},
        {"argv", argv},
        {"seed", seed},
        {"config", config},
        {"config_hash", lmodp::Fnv1aHex(config.dump())},
        {"outputs", outputs},
        {"started_at", stamp},
        {"elapsed_seconds", std::chrono::duration<double>(now - started).count()},
    };
    fs::create_directories(out_dir);
    lmodp::WriteJsonFile((out_dir / ("manifest_" + subcommand + ".json")).string(), m);
  }
};

std::string F(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// A bare spec object, or a search result file whose "spec" is used.
lmodp::MixtureSpec LoadSpec(const std::string& path) {
  const Json j = lmodp::ReadJsonFile(path);
  if (j.is_object() && j.contains("version") && j.contains("spec")) {
    return lmodp::ResultFromJson(j).spec;
  }
  return lmodp::SpecFromJson(j);
}

// "default", a path to a grid file, or an inline grid object. Keys not
// given fall back to the shipped default grid.
lmodp::SearchGrid GridFrom(const Json& ref) {
  if (ref.is_null() || (ref.is_string() && ref.get<std::string>() == "default")) {
    return lmodp::DefaultSearchGrid();
  }
  if (ref.is_string()) {
    return lmodp::GridFromJson(lmodp::ReadJsonFile(ref.get<std::string>()),
                               lmodp::DefaultSearchGrid());
  }
  return lmodp::GridFromJson(ref, lmodp::DefaultSearchGrid());
}

Json LoadConfig(const std::string& path) {
  if (path.empty()) return Json::object();
  Json j = lmodp::ReadJsonFile(path);
  if (!j.is_object()) throw lmodp::SchemaError(path + ": config must be a JSON object");
  return j;
}

unsigned DefaultThreads() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------------------

struct SearchArgs {
  std::string config;
  std::optional<double> eps, delta, sensitivity, gamma;
  std::optional<int> steps, alpha_max;
  std::optional<std::string> scope, aggregation;
  unsigned threads = 0;
  std::string result = "search_result.json";
};

void CmdSearch(Run& run, const SearchArgs& a) {
  lmodp::SearchGrid grid = lmodp::GridFromJson(LoadConfig(a.config), lmodp::DefaultSearchGrid());
  if (a.eps || a.delta) {
    grid.budget = lmodp::PrivacyBudget(a.eps.value_or(grid.budget.eps),
                                       a.delta.value_or(grid.budget.delta));
  }
  if (a.sensitivity) grid.sensitivity = *a.sensitivity;
  if (a.gamma) grid.usefulness_gamma = *a.gamma;
  if (a.steps) grid.steps = *a.steps;
  if (a.alpha_max) grid.alpha_max = *a.alpha_max;
  if (a.scope) {
    grid = lmodp::GridFromJson({{"budget_scope", *a.scope}}, grid);
  }
  if (a.aggregation) grid = lmodp::GridFromJson({{"aggregation", *a.aggregation}}, grid);
  grid.seed = run.seed;
  run.config = lmodp::ToJson(grid);
  run.Log("searching " + std::to_string(grid.Cardinality()) + " candidates");
  const auto result = lmodp::SearchOptimal(grid, a.threads ? a.threads : DefaultThreads());
  run.WriteJson(a.result, lmodp::ToJson(result));
  std::cout << "eps_total=" << F(result.eps_total) << " alpha=" << F(result.argmin_alpha)
            << " usefulness=" << F(result.usefulness) << "\n";
}

// ---------------------------------------------------------------------------

struct AccountArgs {
  std::string spec;
  std::optional<double> sigma;
  double sensitivity = 1.0;
  int steps = 1;
  double delta = 1e-10;
  int alpha_max = 128;
  std::optional<double> amplify_q;
};

void CmdAccount(Run& run, const AccountArgs& a) {
  const auto orders = lmodp::IntegerOrders(a.alpha_max);
  lmodp::RdpCurve step;
  Json mech;
  if (a.sigma) {
    step = lmodp::GaussianCurve(*a.sigma, orders);
    mech = {{"gaussian_multiplier", *a.sigma}};
  } else if (!a.spec.empty()) {
    const auto spec = LoadSpec(a.spec);
    step = lmodp::LmoCurve(spec, a.sensitivity, orders);
    mech = {{"spec", lmodp::ToJson(spec)}};
  } else {
    throw lmodp::InvalidArgument("account needs --spec or --sigma");
  }
  if (a.amplify_q) step = lmodp::PoissonAmplifiedCurve(step, *a.amplify_q);
  const auto composed = step.Scaled(a.steps);
  const auto dp = lmodp::ToDp(composed, a.delta);
  run.config = {{"mechanism", mech}, {"sensitivity", a.sensitivity}, {"steps", a.steps},
                {"delta", a.delta}, {"alpha_max", a.alpha_max},
                {"amplify_q", a.amplify_q ? Json(*a.amplify_q) : Json(nullptr)}};

  std::string csv = "alpha,eps_step,eps_composed,eps_dp\n";
  const double log_inv_delta = -std::log(a.delta);
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const double e = composed.eps()[i];
    csv += F(orders[i]) + "," + F(step.eps()[i]) + "," + F(e) + "," +
           F(std::isinf(e) ? e : e + log_inv_delta / (orders[i] - 1.0)) + "\n";
  }
  run.Write("account_curve.csv", csv);
  run.WriteJson("account.json", {{"step_curve", lmodp::ToJson(step)},
                                 {"composed", lmodp::ToJson(composed)},
                                 {"delta", a.delta},
                                 {"eps_total", dp.eps},
                                 {"argmin_alpha", dp.alpha}});
  std::cout << "eps_total=" << F(dp.eps) << " alpha=" << F(dp.alpha) << "\n";
}

// ---------------------------------------------------------------------------

struct SampleArgs {
  std::string spec;
  std::optional<double> sigma;
  double sensitivity = 1.0;
  std::size_t dim = 1;
  std::size_t n = 1000;
  std::uint64_t stream = 0;
  std::string format = "csv";
  int bins = 100;
};

void CmdSample(Run& run, const SampleArgs& a) {
  if (a.dim < 1 || a.n < 1) throw lmodp::InvalidArgument("--dim and --n must be >= 1");
  std::optional<lmodp::MixtureSpec> spec;
  if (!a.spec.empty()) {
    spec = LoadSpec(a.spec);
  } else if (!a.sigma) {
    throw lmodp::InvalidArgument("sample needs --spec or --sigma");
  }
  run.config = {{"mechanism", spec ? Json{{"spec", lmodp::ToJson(*spec)}}
                                   : Json{{"gaussian_multiplier", *a.sigma}}},
                {"sensitivity", a.sensitivity}, {"dim", a.dim}, {"n", a.n},
                {"stream", a.stream}, {"format", a.format}, {"bins", a.bins}};
  lmodp::StreamRng rng(run.seed, a.stream);
  std::vector<double> all;
  all.reserve(a.n * a.dim);
  for (std::size_t i = 0; i < a.n; ++i) {
    const auto w = spec ? lmodp::SampleLmoNoise(*spec, a.dim, rng)
                        : lmodp::SampleGaussianNoise(*a.sigma, a.sensitivity, a.dim, rng);
    all.insert(all.end(), w.begin(), w.end());
  }
  if (a.format == "csv") {
    std::string csv;
    for (std::size_t j = 0; j < a.dim; ++j) csv += (j ? ",w" : "w") + std::to_string(j);
    csv += "\n";
    for (std::size_t i = 0; i < a.n; ++i) {
      for (std::size_t j = 0; j < a.dim; ++j) csv += (j ? "," : "") + F(all[i * a.dim + j]);
      csv += "\n";
    }
    run.Write("samples.csv", csv);
  } else if (a.format == "hist") {
    const auto [mn, mx] = std::minmax_element(all.begin(), all.end());
    const lmodp::BinEdges edges{*mn, *mx, a.bins};
    run.WriteJson("histogram.json",
                  {{"lo", edges.lo}, {"hi", edges.hi}, {"bins", edges.bins},
                   {"density", lmodp::Histogram(all, edges)},
                   {"count", all.size()},
                   {"mean_abs", lmodp::MeanAbs(all)},
                   {"variance", all.size() > 1 ? lmodp::Variance(all) : 0.0}});
  } else {
    throw lmodp::InvalidArgument("--format must be csv or hist");
  }
}

// ---------------------------------------------------------------------------

struct CompareArgs {
  std::string config;
  unsigned threads = 0;
};

void CmdCompare(Run& run, const CompareArgs& a) {
  Json cfg = LoadConfig(a.config);
  const auto eps = cfg.value("eps", std::vector<double>{0.3, 0.7, 2.0, 3.0});
  const double delta = cfg.value("delta", 1e-10);
  const double c = cfg.value("sensitivity", 1.0);
  const auto n = cfg.value("n", std::size_t{1000000});
  const auto grid = GridFrom(cfg.value("grid", Json("default")));
  const auto ablation = cfg.value("ablation", Json::array());
  run.config = {{"eps", eps}, {"delta", delta}, {"sensitivity", c}, {"n", n},
                {"grid", lmodp::ToJson(grid)}, {"ablation", ablation}};
  const unsigned threads = a.threads ? a.threads : DefaultThreads();

  const auto report = lmodp::CompareNoises(eps, delta, c, grid, n, run.seed, threads);
  std::string csv =
      "eps,delta,gaussian_sigma,mean_abs_lmo,mean_abs_gauss,reduction_rate,entropy_lmo,"
      "entropy_gauss,var_lmo,var_gauss,lmo_eps_total,usefulness\n";
  Json rows = Json::array();
  lmodp::svg::Series s_lmo{"LMO", {}, {}}, s_gauss{"Gaussian", {}, {}};
  for (const auto& r : report.rows) {
    csv += F(r.eps) + "," + F(r.delta) + "," + F(r.gaussian_sigma) + "," + F(r.mean_abs_lmo) +
           "," + F(r.mean_abs_gauss) + "," + F(r.reduction_rate) + "," + F(r.entropy_lmo) +
           "," + F(r.entropy_gauss) + "," + F(r.var_lmo) + "," + F(r.var_gauss) + "," +
           F(r.lmo_eps_total) + "," + F(r.usefulness) + "\n";
    rows.push_back({{"eps", r.eps}, {"lmo_spec", lmodp::ToJson(r.lmo_spec)},
                    {"gaussian_sigma", r.gaussian_sigma}, {"reduction_rate", r.reduction_rate}});
    s_lmo.x.push_back(r.eps);
    s_lmo.y.push_back(r.mean_abs_lmo);
    s_gauss.x.push_back(r.eps);
    s_gauss.y.push_back(r.mean_abs_gauss);
  }
  run.Write("compare.csv", csv);
  run.WriteJson("compare.json", {{"rows", rows}, {"n", n}, {"seed", run.seed}});
  run.Write("compare.svg", lmodp::svg::LinePlot(
                               {s_lmo, s_gauss},
                               {"Mean |noise| at matched per-step budget", "epsilon",
                                "E|w|", false, true}));

  if (!ablation.empty()) {
    std::vector<lmodp::SearchGrid> variants;
    for (const auto& fams : ablation) {
      std::vector<lmodp::Family> fs;
      for (const auto& f : fams) fs.push_back(lmodp::ParseFamily(f.get<std::string>()));
      variants.push_back(lmodp::RestrictFamilies(grid, fs));
    }
    const auto reports =
        lmodp::AblationCompareMany(grid, variants, eps, delta, c, n, run.seed, threads);
    std::string ab = "variant,eps,mean_abs_base,mean_abs_variant,difference,usefulness_base,"
                     "usefulness_variant\n";
    for (const auto& rep : reports) {
      for (const auto& r : rep.rows) {
        ab += rep.variant + "," + F(r.eps) + "," + F(r.mean_abs_base) + "," +
              F(r.mean_abs_variant) + "," + F(r.difference) + "," + F(r.usefulness_base) +
              "," + F(r.usefulness_variant) + "\n";
      }
    }
    run.Write("ablation.csv", ab);
  }
  for (const auto& r : report.rows) {
    std::cout << "eps=" << F(r.eps) << " reduction_rate=" << F(r.reduction_rate) << "\n";
  }
}

// ---------------------------------------------------------------------------

struct QuantifyArgs {
  std::string config;
};

void CmdQuantify(Run& run, const QuantifyArgs& a) {
  Json cfg = LoadConfig(a.config);
  const auto qs = cfg.value("q", std::vector<double>{1e-1, 1e-2, 1e-3});
  const auto ks = cfg.value("k", std::vector<int>{10, 100});
  const int m = cfg.value("M", 100);
  const auto grid = GridFrom(cfg.value("grid", Json("default")));
  run.config = {{"q", qs}, {"k", ks}, {"M", m}, {"grid", lmodp::ToJson(grid)}};
  const auto report = lmodp::QuantifySpace(qs, ks, m, grid, run.seed);
  std::string csv = "q,k,N,M,mu_sim,sigma_sim,kl,l2,emd,kl_repaired,l2_repaired,emd_repaired\n";
  std::vector<lmodp::svg::Series> series;
  for (int k : ks) series.push_back({"EMD k=" + std::to_string(k), {}, {}});
  for (const auto& r : report.rows) {
    csv += F(r.q) + "," + std::to_string(r.k) + "," + std::to_string(r.trials) + "," +
           std::to_string(r.draws) + "," + F(r.mu_sim) + "," + F(r.sigma_sim) + "," + F(r.kl) +
           "," + F(r.l2) + "," + F(r.emd) + "," + F(r.kl_repaired) + "," + F(r.l2_repaired) +
           "," + F(r.emd_repaired) + "\n";
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (ks[i] == r.k) {
        series[i].x.push_back(r.q);
        series[i].y.push_back(r.emd);
      }
    }
  }
  run.Write("quantify.csv", csv);
  run.Write("quantify.svg", lmodp::svg::LinePlot(
                                series, {"Search-space EMD after moment matching", "q",
                                         "mean EMD", true, true}));
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::optional<std::string> data, noise;
  std::optional<double> sigma, gaussian_eps, lr, clip, batch, delta;
  std::optional<int> steps, eval_every;
  bool amplify = false;
};

void CmdTrain(Run& run, const TrainArgs& a) {
  Json cfg = LoadConfig(a.config);
  if (a.data) cfg["data"] = *a.data;
  if (a.steps) cfg["steps"] = *a.steps;
  if (a.batch) cfg["batch"] = *a.batch;
  if (a.clip) cfg["clip"] = *a.clip;
  if (a.lr) cfg["lr"] = *a.lr;
  if (a.delta) cfg["delta"] = *a.delta;
  if (a.eval_every) cfg["eval_every"] = *a.eval_every;
  if (a.amplify) cfg["amplify"] = true;
  if (a.noise) cfg["noise"] = {{"result", *a.noise}};
  if (a.sigma) cfg["noise"] = {{"sigma", *a.sigma}};
  if (a.gaussian_eps) cfg["noise"] = {{"gaussian_eps", *a.gaussian_eps}};

  lmodp::Dataset data;
  if (cfg.contains("data") && cfg["data"].is_string()) {
    data = lmodp::LoadCsv(cfg["data"].get<std::string>());
  } else {
    const Json b = cfg.value("blobs", Json::object());
    data = lmodp::MakeBlobs(b.value("n", std::size_t{4000}), b.value("d", std::size_t{20}),
                            b.value("separation", 3.0), b.value("sigma", 1.0),
                            b.value("seed", run.seed));
    cfg["blobs"] = {{"n", data.n}, {"d", data.d}, {"separation", b.value("separation", 3.0)},
                    {"sigma", b.value("sigma", 1.0)}, {"seed", b.value("seed", run.seed)}};
  }

  lmodp::TrainConfig tc;
  tc.steps = cfg.value("steps", 300);
  tc.batch_size = cfg.value("batch", 256.0);
  tc.clip = cfg.value("clip", 1.0);
  tc.learning_rate = cfg.value("lr", 0.5);
  tc.delta = cfg.value("delta", 1e-10);
  tc.alpha_max = cfg.value("alpha_max", 128);
  tc.amplify = cfg.value("amplify", false);
  tc.eval_every = cfg.value("eval_every", 1);
  tc.seed = run.seed;

  const Json noise = cfg.value("noise", Json("none"));
  Json noise_resolved = "none";
  if (noise.is_object()) {
    if (noise.contains("result")) {
      const auto spec = LoadSpec(noise["result"].get<std::string>());
      tc.noise = lmodp::LmoNoise{spec};
      noise_resolved = {{"spec", lmodp::ToJson(spec)}};
    } else if (noise.contains("spec")) {
      const auto spec = lmodp::SpecFromJson(noise["spec"]);
      tc.noise = lmodp::LmoNoise{spec};
      noise_resolved = {{"spec", lmodp::ToJson(spec)}};
    } else if (noise.contains("sigma")) {
      tc.noise = lmodp::GaussianNoise{noise["sigma"].get<double>()};
      noise_resolved = {{"sigma", noise["sigma"]}};
    } else if (noise.contains("gaussian_eps")) {
      if (tc.amplify) throw lmodp::InvalidArgument("gaussian_eps calibration is unamplified");
      const double sigma = lmodp::CalibrateGaussian(
          lmodp::PrivacyBudget(noise["gaussian_eps"].get<double>(), tc.delta), tc.steps,
          lmodp::IntegerOrders(tc.alpha_max));
      tc.noise = lmodp::GaussianNoise{sigma};
      noise_resolved = {{"sigma", sigma}, {"gaussian_eps", noise["gaussian_eps"]}};
    } else {
      throw lmodp::SchemaError("noise needs result, spec, sigma or gaussian_eps");
    }
  } else if (noise != "none") {
    throw lmodp::SchemaError("noise must be \"none\" or an object");
  }
  cfg["noise"] = noise_resolved;
  cfg["steps"] = tc.steps;
  cfg["batch"] = tc.batch_size;
  cfg["clip"] = tc.clip;
  cfg["lr"] = tc.learning_rate;
  cfg["delta"] = tc.delta;
  cfg["alpha_max"] = tc.alpha_max;
  cfg["amplify"] = tc.amplify;
  cfg["eval_every"] = tc.eval_every;
  run.config = cfg;

  const auto result = lmodp::Train(data, tc);
  run.WriteJson("ledger.json", lmodp::ToJson(result.ledger));
  std::string csv = "step,loss,accuracy,eps_cumulative\n";
  for (const auto& m : result.metrics) {
    csv += std::to_string(m.step) + "," + F(m.loss) + "," + F(m.accuracy) + "," +
           F(m.eps_cumulative) + "\n";
  }
  run.Write("metrics.csv", csv);
  run.WriteJson("model.json", {{"classes", result.model.classes},
                               {"d", result.model.d},
                               {"params", result.model.params}});
  const auto final_metrics = lmodp::Evaluate(result.model, data);
  std::cout << "accuracy=" << F(final_metrics.accuracy) << " loss=" << F(final_metrics.mean_loss)
            << " eps_total=" << F(result.ledger.eps_total) << "\n";
}

int ExitCodeFor(const std::string& kind) {
  if (kind == "NoFeasibleCandidate" || kind == "Unachievable" || kind == "InfeasibleNoise") {
    return 2;
  }
  return 1;
}

void ReportError(const std::string& kind, const std::string& message, int code) {
  std::cerr << Json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-fold Laplace noise search, accounting and DP-SGD toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Run run;
  std::string out_dir = "lmodp_out";
  app.add_option("-o,--out", out_dir, "Output directory")->envname("LMODP_OUT_DIR");
  app.add_option("--seed", run.seed, "Random seed")->capture_default_str();
  app.add_flag("-v,--verbose", run.verbosity, "Log progress to stderr");

  SearchArgs sa;
  auto* search = app.add_subcommand("search", "Grid-search noise parameters for a budget");
  search->add_option("-c,--config", sa.config, "Grid config JSON")->check(CLI::ExistingFile);
  search->add_option("--eps", sa.eps);
  search->add_option("--delta", sa.delta);
  search->add_option("--sensitivity", sa.sensitivity);
  search->add_option("--gamma", sa.gamma, "Usefulness threshold (default: sensitivity)");
  search->add_option("--steps", sa.steps);
  search->add_option("--alpha-max", sa.alpha_max);
  search->add_option("--scope", sa.scope)->check(CLI::IsMember({"per_step", "total"}));
  search->add_option("--aggregation", sa.aggregation)->check(CLI::IsMember({"min", "max"}));
  search->add_option("--threads", sa.threads, "Worker threads (0: all cores)");
  search->add_option("--result", sa.result, "Result file name")->capture_default_str();

  AccountArgs aa;
  auto* account = app.add_subcommand("account", "Renyi-DP curve and total epsilon");
  account->add_option("--spec", aa.spec, "Spec or search result JSON")->check(CLI::ExistingFile);
  account->add_option("--sigma", aa.sigma, "Gaussian noise multiplier");
  account->add_option("--sensitivity", aa.sensitivity)->capture_default_str();
  account->add_option("--steps", aa.steps)->capture_default_str();
  account->add_option("--delta", aa.delta)->capture_default_str();
  account->add_option("--alpha-max", aa.alpha_max)->capture_default_str();
  account->add_option("--amplify-q", aa.amplify_q, "Poisson sampling rate");

  SampleArgs pa;
  auto* sample = app.add_subcommand("sample", "Draw noise vectors");
  sample->add_option("--spec", pa.spec, "Spec or search result JSON")->check(CLI::ExistingFile);
  sample->add_option("--sigma", pa.sigma, "Gaussian noise multiplier");
  sample->add_option("--sensitivity", pa.sensitivity)->capture_default_str();
  sample->add_option("-d,--dim", pa.dim)->capture_default_str();
  sample->add_option("-n", pa.n)->capture_default_str();
  sample->add_option("--stream", pa.stream)->capture_default_str();
  sample->add_option("--format", pa.format)->check(CLI::IsMember({"csv", "hist"}));
  sample->add_option("--bins", pa.bins)->capture_default_str();

  CompareArgs ca;
  auto* compare = app.add_subcommand("compare", "Compare searched noise with the Gaussian");
  compare->add_option("-c,--config", ca.config)->check(CLI::ExistingFile);
  compare->add_option("--threads", ca.threads);

  QuantifyArgs qa;
  auto* quantify = app.add_subcommand("quantify", "Quantify the search space");
  quantify->add_option("-c,--config", qa.config)->check(CLI::ExistingFile);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "DP-SGD on a CSV dataset or synthetic blobs");
  train->add_option("-c,--config", ta.config)->check(CLI::ExistingFile);
  train->add_option("--data", ta.data, "CSV with label column y")->check(CLI::ExistingFile);
  train->add_option("--noise", ta.noise, "Search result or spec JSON")->check(CLI::ExistingFile);
  train->add_option("--sigma", ta.sigma, "Gaussian noise multiplier");
  train->add_option("--gaussian-eps", ta.gaussian_eps, "Calibrate Gaussian to total eps");
  train->add_option("--steps", ta.steps);
  train->add_option("--batch", ta.batch);
  train->add_option("--clip", ta.clip);
  train->add_option("--lr", ta.lr);
  train->add_option("--delta", ta.delta);
  train->add_option("--eval-every", ta.eval_every);
  train->add_flag("--amplify", ta.amplify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    ReportError("UsageError", e.what(), 1);
    return 1;
  }

  run.out_dir = out_dir;
  run.argv.assign(argv, argv + argc);
  try {
    if (search->parsed()) {
      run.subcommand = "search";
      CmdSearch(run, sa);
    } else if (account->parsed()) {
      run.subcommand = "account";
      CmdAccount(run, aa);
    } else if (sample->parsed()) {
      run.subcommand = "sample";
      CmdSample(run, pa);
    } else if (compare->parsed()) {
      run.subcommand = "compare";
      CmdCompare(run, ca);
    } else if (quantify->parsed()) {
      run.subcommand = "quantify";
      CmdQuantify(run, qa);
    } else if (train->parsed()) {
      run.subcommand = "train";
      CmdTrain(run, ta);
    }
    run.WriteManifest();
  } catch (const lmodp::Error& e) {
    const int code = ExitCodeFor(e.kind());
    ReportError(e.kind(), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    ReportError("Error", e.what(), 1);
    return 1;
  }
  return 0;
}
