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

#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace trustplane::stats {

/// p-th quantile (0..1) by linear interpolation between closest ranks
/// (h = (n-1)p). `sorted` must be ascending and non-empty.
double quantile(const std::vector<double>& sorted, double p);

struct Summary {
  size_t count = 0;
  double mean = 0;
  double variance = 0;  // sample variance (n-1 denominator); 0 for n == 1
  double min = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double max = 0;
  // Boxplot whiskers: high = min(max, q3 + 1.5*IQR), low = max(min, q1 - 1.5*IQR).
  double whisker_low = 0;
  double whisker_high = 0;
};

/// Summary of a non-empty sample set (order irrelevant).
Summary summarize(std::vector<double> samples);

struct Regression {
  double intercept = 0;
  double slope = 0;
  double rmse = 0;  // root mean squared residual of the fit
};

/// Ordinary least squares fit of y = intercept + slope * x. Requires at
/// least two distinct x values.
std::optional<Regression> fit_line(const std::vector<std::pair<double, double>>& points);

}  // namespace trustplane::stats
