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

#include "srinit_tools/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "srinit/errors.hpp"
#include "srinit/profile_io.hpp"

namespace srinit::tools {
namespace {

constexpr double kLeft = 64, kRight = 24, kTop = 36, kBottom = 48, kHeight = 340;
constexpr const char* kBarColor = "#2b6ca3";
constexpr const char* kHighlightColor = "#9ecae1";
constexpr const char* kIneligibleColor = "#b0b0b0";
constexpr const char* kThresholdColor = "#f28e2b";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * v);
  return buf;
}

}  // namespace

bool highlighted(const DropEntry& entry, std::optional<double> t_err) {
  return t_err && entry.eligible && entry.drop < *t_err;
}

std::string chart_csv(const DropProfile& profile, std::optional<double> t_err) {
  std::string out = "unit_id,stage,eligible,est_accuracy,drop,highlighted\n";
  for (const auto& e : profile.drops) {
    out += std::to_string(e.unit_id) + ',' + std::to_string(e.stage) + ',' + (e.eligible ? '1' : '0') + ',' +
           format_real(e.est_accuracy) + ',' + format_real(e.drop) + ',' + (highlighted(e, t_err) ? '1' : '0') +
           '\n';
  }
  return out;
}

std::string profile_svg(const DropProfile& profile, std::optional<double> t_err) {
  if (profile.drops.empty()) throw InsufficientDataError("cannot plot an empty drop profile");
  const auto n = static_cast<double>(profile.drops.size());
  const double step = std::clamp(640.0 / n, 10.0, 36.0);
  const double plot_w = step * n;
  const double width = kLeft + plot_w + kRight, height = kTop + kHeight + kBottom;

  double lo = 0.0, hi = profile.base_accuracy;
  for (const auto& e : profile.drops) {
    lo = std::min(lo, e.drop);
    hi = std::max(hi, e.drop);
  }
  if (t_err) {
    lo = std::min(lo, *t_err);
    hi = std::max(hi, *t_err);
  }
  hi = hi <= lo ? lo + 1.0 : hi + 0.05 * (hi - lo);
  auto y_of = [&](double v) { return kTop + kHeight * (hi - v) / (hi - lo); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << num(kLeft) << "\" y=\"20\" font-size=\"13\">accuracy drop per unit (" << profile.drops.size()
    << " units, base " << pct(profile.base_accuracy) << ")</text>\n";

  // y axis with five ticks
  for (int k = 0; k <= 5; ++k) {
    const double v = lo + (hi - lo) * k / 5.0, y = y_of(v);
    s << "<line x1=\"" << num(kLeft - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kLeft + plot_w)
      << "\" y2=\"" << num(y) << "\" stroke=\"#eeeeee\"/>\n";
    s << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << pct(v)
      << "</text>\n";
  }
  const double y0 = y_of(0.0);
  s << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(kLeft + plot_w) << "\" y2=\""
    << num(y0) << "\" stroke=\"black\"/>\n";

  for (std::size_t i = 0; i < profile.drops.size(); ++i) {
    const auto& e = profile.drops[i];
    const double x = kLeft + step * static_cast<double>(i) + step * 0.15, w = step * 0.7;
    const double y = std::min(y_of(e.drop), y0), h = std::abs(y_of(e.drop) - y0);
    const bool hl = highlighted(e, t_err);
    const char* fill = !e.eligible ? kIneligibleColor : (hl ? kHighlightColor : kBarColor);
    s << "<rect class=\"bar" << (hl ? " highlighted" : "") << (e.eligible ? "" : " ineligible")
      << "\" data-unit=\"" << e.unit_id << "\" x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
      << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\"><title>unit " << e.unit_id << " (stage "
      << e.stage << (e.eligible ? "" : ", projection") << "): drop " << pct(e.drop) << "</title></rect>\n";
    s << "<text x=\"" << num(x + w / 2) << "\" y=\"" << num(kTop + kHeight + 14)
      << "\" text-anchor=\"middle\" font-size=\"9\">" << e.unit_id << "</text>\n";
  }

  const double yb = y_of(profile.base_accuracy);
  s << "<line class=\"base\" x1=\"" << num(kLeft) << "\" y1=\"" << num(yb) << "\" x2=\"" << num(kLeft + plot_w)
    << "\" y2=\"" << num(yb) << "\" stroke=\"#444444\" stroke-dasharray=\"2,3\"/>\n";
  s << "<text x=\"" << num(kLeft + plot_w) << "\" y=\"" << num(yb - 4) << "\" text-anchor=\"end\">base accuracy "
    << pct(profile.base_accuracy) << "</text>\n";
  if (t_err) {
    const double yt = y_of(*t_err);
    s << "<line class=\"threshold\" x1=\"" << num(kLeft) << "\" y1=\"" << num(yt) << "\" x2=\""
      << num(kLeft + plot_w) << "\" y2=\"" << num(yt) << "\" stroke=\"" << kThresholdColor
      << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << num(kLeft + 4) << "\" y=\"" << num(yt - 4) << "\" fill=\"" << kThresholdColor
      << "\">t_err " << pct(*t_err) << "</text>\n";
  }
  s << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(height - 10)
    << "\" text-anchor=\"middle\">unit id</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::filesystem::path chart_csv_path(const std::filesystem::path& svg_path) {
  return svg_path.parent_path() / (svg_path.stem().string() + "_chart.csv");
}

void plot_profile(const DropProfile& profile, std::optional<double> t_err, const std::filesystem::path& svg_path) {
  const std::string svg = profile_svg(profile, t_err);
  write_text(svg_path, svg);
  write_text(chart_csv_path(svg_path), chart_csv(profile, t_err));
}

}  // namespace srinit::tools
