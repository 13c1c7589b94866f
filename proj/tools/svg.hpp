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

// Minimal line-plot renderer for the CSV tables the CLI writes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace lmodp::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

inline std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

inline std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string LinePlot(const std::vector<Series>& series, const PlotOptions& opt) {
  constexpr double kW = 640, kH = 400, kL = 70, kR = 150, kT = 40, kB = 50;
  auto tx = [&](double v) { return opt.log_x ? std::log10(std::max(v, 1e-300)) : v; };
  auto ty = [&](double v) { return opt.log_y ? std::log10(std::max(v, 1e-300)) : v; };
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (x0 > x1) x0 = 0, x1 = 1;
  if (y0 > y1) y0 = 0, y1 = 1;
  if (x0 == x1) x0 -= 0.5, x1 += 0.5;
  if (y0 == y1) y0 -= 0.5, y1 += 0.5;
  const double pw = kW - kL - kR, ph = kH - kT - kB;
  auto px = [&](double v) { return kL + (tx(v) - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return kT + ph - (ty(v) - y0) / (y1 - y0) * ph; };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + Num(kW) + "\" height=\"" +
         Num(kH) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + Num(kW / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         Escape(opt.title) + "</text>\n";
  out += "<rect x=\"" + Num(kL) + "\" y=\"" + Num(kT) + "\" width=\"" + Num(pw) +
         "\" height=\"" + Num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0;
    const double fy = y0 + (y1 - y0) * i / 4.0;
    const double sx = kL + pw * i / 4.0;
    const double sy = kT + ph - ph * i / 4.0;
    out += "<text x=\"" + Num(sx) + "\" y=\"" + Num(kT + ph + 16) +
           "\" text-anchor=\"middle\">" + Num(opt.log_x ? std::pow(10.0, fx) : fx) + "</text>\n";
    out += "<text x=\"" + Num(kL - 6) + "\" y=\"" + Num(sy + 4) + "\" text-anchor=\"end\">" +
           Num(opt.log_y ? std::pow(10.0, fy) : fy) + "</text>\n";
  }
  out += "<text x=\"" + Num(kL + pw / 2) + "\" y=\"" + Num(kH - 10) +
         "\" text-anchor=\"middle\">" + Escape(opt.x_label) + "</text>\n";
  out += "<text transform=\"translate(16," + Num(kT + ph / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + Escape(opt.y_label) + "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::string color = kColors[k % 8];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      pts += Num(px(s.x[i])) + "," + Num(py(s.y[i])) + " ";
      out += "<circle cx=\"" + Num(px(s.x[i])) + "\" cy=\"" + Num(py(s.y[i])) +
             "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    out += "<polyline fill=\"none\" stroke=\"" + color + "\" points=\"" + pts + "\"/>\n";
    const double ly = kT + 14 + 18 * static_cast<double>(k);
    out += "<line x1=\"" + Num(kL + pw + 10) + "\" y1=\"" + Num(ly - 4) + "\" x2=\"" +
           Num(kL + pw + 30) + "\" y2=\"" + Num(ly - 4) + "\" stroke=\"" + color + "\"/>\n";
    out += "<text x=\"" + Num(kL + pw + 34) + "\" y=\"" + Num(ly) + "\">" + Escape(s.name) +
           "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace lmodp::svg
