/*
 * Copyright 2026 The trustplane authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "trustplane/stats.hpp"

#include <algorithm>
#include <cmath>

namespace trustplane::stats {

double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0;
  if (p <= 0) return sorted.front();
  if (p >= 1) return sorted.back();
  double h = (static_cast<double>(sorted.size()) - 1) * p;
  size_t lo = static_cast<size_t>(h);
  double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

Summary summarize(std::vector<double> samples) {
  Summary s;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  s.count = samples.size();
  s.min = samples.front();
  s.max = samples.back();

  double sum = 0;
  for (double v : samples) sum += v;
  s.mean = sum / static_cast<double>(s.count);

  if (s.count > 1) {
    double acc = 0;
    for (double v : samples) {
      double d = v - s.mean;
      acc += d * d;
    }
    s.variance = acc / static_cast<double>(s.count - 1);
  }

  s.q1 = quantile(samples, 0.25);
  s.median = quantile(samples, 0.5);
  s.q3 = quantile(samples, 0.75);
  double iqr = s.q3 - s.q1;
  s.whisker_high = std::min(s.max, s.q3 + 1.5 * iqr);
  s.whisker_low = std::max(s.min, s.q1 - 1.5 * iqr);
  return s;
}

std::optional<Regression> fit_line(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) return std::nullopt;
  double n = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : points) {
    sx += x;
    sy += y;
  }
  double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0) return std::nullopt;
  Regression r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double sq = 0;
  for (const auto& [x, y] : points) {
    double e = y - (r.intercept + r.slope * x);
    sq += e * e;
  }
  r.rmse = std::sqrt(sq / n);
  return r;
}

}  // namespace trustplane::stats
