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

// JSON encodings shared by the persisted file formats.
//
//   MixtureSpec: {"mode": "mixture"|"linear",
//                 "components": [{"weight": w, "dist": {"type": ..., params}}]}
//     gamma: {"k", "theta"}; exp: {"lambda"}; uniform: {"a", "b"};
//     degenerate: {"c"}
//   RdpCurve:    {"orders": [...], "eps": [... | "inf"]}

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmodp/accountant.hpp"
#include "lmodp/errors.hpp"
#include "lmodp/mgf.hpp"

namespace lmodp {

using Json = nlohmann::json;

namespace json_detail {

inline double Number(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw SchemaError(std::string("expected numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

}  // namespace json_detail

inline Json ToJson(const ComponentDist& dist) {
  Json j;
  j["type"] = std::string(DistName(dist));
  if (const auto* g = std::get_if<GammaDist>(&dist)) {
    j["k"] = g->shape;
    j["theta"] = g->scale;
  } else if (const auto* e = std::get_if<ExponentialDist>(&dist)) {
    j["lambda"] = e->rate;
  } else if (const auto* u = std::get_if<UniformDist>(&dist)) {
    j["a"] = u->lo;
    j["b"] = u->hi;
  } else {
    j["c"] = std::get<DegenerateDist>(dist).value;
  }
  return j;
}

inline ComponentDist ComponentFromJson(const Json& j) {
  using json_detail::Number;
  if (!j.is_object() || !j.contains("type")) throw SchemaError("dist needs a type");
  const auto type = j.at("type").get<std::string>();
  if (type == "gamma") return GammaDist{Number(j, "k"), Number(j, "theta")};
  if (type == "exp") return ExponentialDist{Number(j, "lambda")};
  if (type == "uniform") return UniformDist{Number(j, "a"), Number(j, "b")};
  if (type == "degenerate") return DegenerateDist{Number(j, "c")};
  throw SchemaError("unknown dist type '" + type + "'");
}

inline Json ToJson(const MixtureSpec& spec) {
  Json comps = Json::array();
  for (const auto& c : spec.components()) {
    comps.push_back({{"weight", c.weight}, {"dist", ToJson(c.dist)}});
  }
  return {{"mode", std::string(ModeName(spec.mode()))}, {"components", comps}};
}

inline MixtureSpec SpecFromJson(const Json& j) {
  if (!j.is_object() || !j.contains("components")) {
    throw SchemaError("spec needs 'components'");
  }
  const auto mode = ParseMode(j.value("mode", std::string("mixture")));
  std::vector<WeightedComponent> comps;
  for (const auto& c : j.at("components")) {
    comps.push_back({json_detail::Number(c, "weight"), ComponentFromJson(c.at("dist"))});
  }
  return MixtureSpec(mode, std::move(comps));
}

inline Json EpsToJson(double e) { return std::isinf(e) ? Json("inf") : Json(e); }

inline double EpsFromJson(const Json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return numeric::kInf;
    throw SchemaError("eps entries must be numbers or \"inf\"");
  }
  return j.get<double>();
}

inline Json ToJson(const RdpCurve& curve) {
  Json eps = Json::array();
  for (double e : curve.eps()) eps.push_back(EpsToJson(e));
  return {{"orders", curve.orders()}, {"eps", eps}};
}

inline RdpCurve CurveFromJson(const Json& j) {
  if (!j.contains("orders") || !j.contains("eps")) {
    throw SchemaError("curve needs 'orders' and 'eps'");
  }
  std::vector<double> eps;
  for (const auto& e : j.at("eps")) eps.push_back(EpsFromJson(e));
  return RdpCurve(j.at("orders").get<std::vector<double>>(), std::move(eps));
}

inline Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

inline void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

inline void WriteJsonFile(const std::string& path, const Json& j) {
  WriteTextFile(path, j.dump(2) + "\n");
}

// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string Fnv1aHex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace lmodp
