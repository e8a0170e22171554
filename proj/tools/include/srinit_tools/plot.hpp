// Copyright 2026 The srinit Authors. All Rights Reserved.
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

#ifndef SRINIT_TOOLS_PLOT_HPP_
#define SRINIT_TOOLS_PLOT_HPP_

#include <filesystem>
#include <optional>
#include <string>

#include "srinit/scoring.hpp"

namespace srinit::tools {

// A bar is highlighted when its unit is eligible and drop < t_err, i.e. when
// select_layers would prune it.
bool highlighted(const DropEntry& entry, std::optional<double> t_err);

// Plotted data, one row per bar in unit order. The first five columns are the
// profile CSV columns; `highlighted` is appended.
std::string chart_csv(const DropProfile& profile, std::optional<double> t_err);

// Bar chart of the drop per unit. Threshold as a solid horizontal line,
// highlighted bars in a light colour, base accuracy as a dotted line.
std::string profile_svg(const DropProfile& profile, std::optional<double> t_err);

// Writes the SVG to `svg_path` and the chart data next to it
// (`<stem>_chart.csv`). Throws InsufficientDataError on an empty profile.
void plot_profile(const DropProfile& profile, std::optional<double> t_err,
                  const std::filesystem::path& svg_path);

std::filesystem::path chart_csv_path(const std::filesystem::path& svg_path);

}  // namespace srinit::tools

#endif  // SRINIT_TOOLS_PLOT_HPP_
