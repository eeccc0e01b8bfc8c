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

#include <doctest.h>

#include <cmath>

#include "trustplane/stats.hpp"

using namespace trustplane;

// Expected values below were computed independently (numpy, linear/R-7
// quantiles, ddof=1 variance, polyfit) and frozen.

namespace {

void check_rel(double actual, double expected) {
  if (expected == 0.0) {
    CHECK(std::abs(actual) <= 1e-9);
  } else {
    CHECK(std::abs(actual - expected) / std::abs(expected) <= 1e-9);
  }
}

void check_summary(const std::vector<double>& data, double mean, double var, double q1,
                   double med, double q3, double wl, double wu) {
  auto s = stats::summarize(data);
  CHECK(s.count == data.size());
  check_rel(s.mean, mean);
  check_rel(s.variance, var);
  check_rel(s.q1, q1);
  check_rel(s.median, med);
  check_rel(s.q3, q3);
  check_rel(s.whisker_low, wl);
  check_rel(s.whisker_high, wu);
}

}  // namespace

TEST_CASE("summary matches hand-computed datasets") {
  check_summary({1, 2, 3, 4},  //
                2.5, 1.6666666666666667, 1.75, 2.5, 3.25, 1.0, 4.0);
  check_summary({5},  //
                5.0, 0.0, 5.0, 5.0, 5.0, 5.0, 5.0);
  check_summary({2, 10},  //
                6.0, 32.0, 4.0, 6.0, 8.0, 2.0, 10.0);
  // Duplicates plus a far outlier; the high whisker clamps to q3 + 1.5*IQR.
  check_summary({1.0, 1.0, 1.5, 2.0, 2.0, 2.5, 100.0},  //
                15.714285714285714, 1381.654761904762, 1.25, 2.0, 2.25, 1.0, 3.75);
  check_summary({3.25, 1.5, 7.75, 2.0, 9.125, 4.5, 6.0, 8.25, 0.5},  //
                4.763888888888889, 10.05642361111111, 2.0, 4.5, 7.75, 0.5, 9.125);
  check_summary({-3.5, 2.25, 0.125, 7.0, 7.0, 7.0, 1.75, -2.0, 4.0, 5.5, 3.125, 2.875},  //
                2.9270833333333335, 12.078006628787879, 1.34375, 3.0, 5.875, -3.5, 7.0);
}

TEST_CASE("quantile interpolates between closest ranks") {
  std::vector<double> sorted{1, 2, 3, 4};
  check_rel(stats::quantile(sorted, 0.25), 1.75);
  check_rel(stats::quantile(sorted, 0.5), 2.5);
  check_rel(stats::quantile(sorted, 0.75), 3.25);
  CHECK(stats::quantile(sorted, 0.0) == 1.0);
  CHECK(stats::quantile(sorted, 1.0) == 4.0);
  std::vector<double> one{7};
  CHECK(stats::quantile(one, 0.31) == 7.0);
}

TEST_CASE("summary ordering does not matter") {
  auto a = stats::summarize({4, 1, 3, 2});
  auto b = stats::summarize({1, 2, 3, 4});
  CHECK(a.median == b.median);
  CHECK(a.q1 == b.q1);
  CHECK(a.variance == b.variance);
}

TEST_CASE("regression matches hand-computed fits") {
  SUBCASE("exact line has zero residual") {
    std::vector<std::pair<double, double>> points;
    for (int s = 64; s <= 1408; s += 64)
      points.emplace_back(s, 100.0 + 0.25 * s);
    auto r = stats::fit_line(points);
    REQUIRE(r);
    check_rel(r->intercept, 100.0);
    check_rel(r->slope, 0.25);
    CHECK(r->rmse <= 1e-9);
  }
  SUBCASE("five point sweep") {
    std::vector<std::pair<double, double>> points{
        {64, 1.650}, {128, 1.6667}, {256, 1.6820}, {512, 1.6852}, {1024, 1.6963}};
    auto r = stats::fit_line(points);
    REQUIRE(r);
    check_rel(r->intercept, 1.66035);
    check_rel(r->slope, 3.954133064516129e-05);
    check_rel(r->rmse, 0.00827372054234993);
  }
  SUBCASE("small integer set") {
    std::vector<std::pair<double, double>> points{{1, 6}, {2, 5}, {3, 7}, {4, 10}};
    auto r = stats::fit_line(points);
    REQUIRE(r);
    check_rel(r->intercept, 3.5);
    check_rel(r->slope, 1.4);
    check_rel(r->rmse, 1.02469507659596);
  }
}

TEST_CASE("regression rejects degenerate inputs") {
  CHECK(!stats::fit_line({}));
  CHECK(!stats::fit_line({{1, 2}}));
  CHECK(!stats::fit_line({{3, 1}, {3, 2}, {3, 9}}));  // vertical
}
