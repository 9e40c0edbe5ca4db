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

// Static SVG charts and CSV tables for reports.

#ifndef XTEVAL_PLOT_H_
#define XTEVAL_PLOT_H_

#include <string>
#include <vector>

namespace xteval {

struct Bar {
  std::string label;
  double value = 0.0;
  double error = 0.0;  // drawn as a +/- whisker when positive
};

// Values are expected in [0, 1].
std::string BarChartSvg(const std::string& title, const std::string& y_label,
                        const std::vector<Bar>& bars);

struct GapStack {
  std::string label;
  double usable = 0.0;
  double gap2 = 0.0;
  double gap1 = 0.0;
};

// One column per entry: usable knowledge at the bottom, then gap 2, then
// gap 1, summing to 1.
std::string StackedGapSvg(const std::string& title,
                          const std::vector<GapStack>& stacks);

std::string CsvTable(const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows);

}  // namespace xteval

#endif  // XTEVAL_PLOT_H_
