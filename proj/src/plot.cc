// Copyright 2026 The XTEval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xteval/plot.h"

#include <algorithm>

#include <fmt/format.h>

namespace xteval {
namespace {

constexpr double kWidthPerBar = 90.0;
constexpr double kPlotHeight = 260.0;
constexpr double kLeft = 60.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 70.0;

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double Clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::string Frame(double width, const std::string& title,
                  const std::string& y_label) {
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" "
      "height=\"{1:.0f}\" font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2:.1f}\" y=\"20\" text-anchor=\"middle\" "
      "font-size=\"14\">{3}</text>\n",
      width, kTop + kPlotHeight + kBottom, width / 2.0, Escape(title));
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = tick / 4.0;
    const double y = kTop + kPlotHeight * (1.0 - v);
    s += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" "
        "stroke=\"#ddd\"/>\n<text x=\"{3:.1f}\" y=\"{4:.1f}\" "
        "text-anchor=\"end\">{5:.2f}</text>\n",
        kLeft, y, width - 10.0, kLeft - 5.0, y + 4.0, v);
  }
  s += fmt::format(
      "<text transform=\"translate(15,{0:.1f}) rotate(-90)\" "
      "text-anchor=\"middle\">{1}</text>\n",
      kTop + kPlotHeight / 2.0, Escape(y_label));
  return s;
}

}  // namespace

std::string BarChartSvg(const std::string& title, const std::string& y_label,
                        const std::vector<Bar>& bars) {
  const double width =
      kLeft + kWidthPerBar * static_cast<double>(std::max<std::size_t>(1, bars.size())) + 20.0;
  std::string s = Frame(width, title, y_label);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const Bar& b = bars[i];
    const double x = kLeft + kWidthPerBar * static_cast<double>(i) + 15.0;
    const double w = kWidthPerBar - 30.0;
    const double h = kPlotHeight * Clamp01(b.value);
    const double base = kTop + kPlotHeight;
    s += fmt::format(
        "<rect x=\"{0:.1f}\" y=\"{1:.1f}\" width=\"{2:.1f}\" "
        "height=\"{3:.1f}\" fill=\"#4c72b0\"/>\n",
        x, base - h, w, h);
    if (b.error > 0.0) {
      const double cx = x + w / 2.0;
      const double hi = base - kPlotHeight * Clamp01(b.value + b.error);
      const double lo = base - kPlotHeight * Clamp01(b.value - b.error);
      s += fmt::format(
          "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" "
          "stroke=\"black\"/>\n",
          cx, hi, lo);
    }
    s += fmt::format(
        "<text x=\"{0:.1f}\" y=\"{1:.1f}\" text-anchor=\"middle\">{2:.3f}"
        "</text>\n<text x=\"{0:.1f}\" y=\"{3:.1f}\" "
        "text-anchor=\"middle\">{4}</text>\n",
        x + w / 2.0, base - h - 4.0, b.value, base + 16.0, Escape(b.label));
  }
  s += "</svg>\n";
  return s;
}

std::string StackedGapSvg(const std::string& title,
                          const std::vector<GapStack>& stacks) {
  const double width =
      kLeft + kWidthPerBar * static_cast<double>(std::max<std::size_t>(1, stacks.size())) + 120.0;
  std::string s = Frame(width, title, "share of diagnostic facts");
  const char* colors[] = {"#55a868", "#dd8452", "#c44e52"};
  const char* names[] = {"usable", "gap 2", "gap 1"};
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    const GapStack& g = stacks[i];
    const double parts[] = {Clamp01(g.usable), Clamp01(g.gap2),
                            Clamp01(g.gap1)};
    const double x = kLeft + kWidthPerBar * static_cast<double>(i) + 15.0;
    const double w = kWidthPerBar - 30.0;
    double top = kTop + kPlotHeight;
    for (int k = 0; k < 3; ++k) {
      const double h = kPlotHeight * parts[k];
      top -= h;
      s += fmt::format(
          "<rect x=\"{0:.1f}\" y=\"{1:.1f}\" width=\"{2:.1f}\" "
          "height=\"{3:.1f}\" fill=\"{4}\"/>\n",
          x, top, w, h, colors[k]);
    }
    s += fmt::format(
        "<text x=\"{0:.1f}\" y=\"{1:.1f}\" text-anchor=\"middle\">{2}</text>\n",
        x + w / 2.0, kTop + kPlotHeight + 16.0, Escape(g.label));
  }
  const double lx = width - 100.0;
  for (int k = 0; k < 3; ++k) {
    const double ly = kTop + 20.0 * k;
    s += fmt::format(
        "<rect x=\"{0:.1f}\" y=\"{1:.1f}\" width=\"12\" height=\"12\" "
        "fill=\"{2}\"/>\n<text x=\"{3:.1f}\" y=\"{4:.1f}\">{5}</text>\n",
        lx, ly, colors[k], lx + 18.0, ly + 10.0, names[k]);
  }
  s += "</svg>\n";
  return s;
}

std::string CsvTable(const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  auto line = [](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out += ',';
      const std::string& c = cells[i];
      if (c.find_first_of(",\"\n") != std::string::npos) {
        out += '"';
        for (char ch : c) {
          if (ch == '"') out += '"';
          out += ch;
        }
        out += '"';
      } else {
        out += c;
      }
    }
    return out + "\n";
  };
  std::string out = line(header);
  for (const auto& r : rows) out += line(r);
  return out;
}

}  // namespace xteval
