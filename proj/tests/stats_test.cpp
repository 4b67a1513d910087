// Copyright 2026 The dfd Authors. All Rights Reserved.
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

#include "dfd/stats.hpp"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "dfd/rng.hpp"

namespace dfd {
namespace {

TEST(Iqm, FourScores) {
  EXPECT_DOUBLE_EQ(compute_iqm({1.0, 2.0, 3.0, 4.0}), 2.5);
  EXPECT_DOUBLE_EQ(compute_iqm({4.0, 1.0, 3.0, 2.0}), 2.5);  // order-free
}

TEST(Iqm, AllEqualScores) {
  EXPECT_DOUBLE_EQ(compute_iqm(std::vector<double>(7, 3.25)), 3.25);
}

TEST(Iqm, RejectsTooFewScores) {
  EXPECT_THROW(compute_iqm({1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST(Iqm, FractionalTrimHandComputed) {
  // n = 5: boundaries at 1.25 and 3.75; weights (0, .75, 1, .75, 0) / 2.5.
  const std::vector<double> v{10.0, 20.0, 30.0, 40.0, 50.0};
  const double expected = (0.75 * 20.0 + 1.0 * 30.0 + 0.75 * 40.0) / 2.5;
  EXPECT_DOUBLE_EQ(compute_iqm(v), expected);

  // n = 6: boundaries at 1.5 and 4.5; weights (0, .5, 1, 1, .5, 0) / 3.
  const std::vector<double> w{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  EXPECT_DOUBLE_EQ(compute_iqm(w), (0.5 * 2.0 + 3.0 + 4.0 + 0.5 * 5.0) / 3.0);
}

// Brute-force oracle at n divisible by 4: plain mean of the middle half.
TEST(Iqm, MatchesBruteForceTrimmedMean) {
  Rng rng(77);
  std::vector<double> scores(1000);
  for (double& s : scores) s = 100.0 * rng.normal();
  const double got = compute_iqm(scores);
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (std::size_t i = 250; i < 750; ++i) sum += sorted[i];
  EXPECT_NEAR(got, sum / 500.0, 1e-12 * std::abs(sum / 500.0) + 1e-15);
}

TEST(MinMaxNormalize, Endpoints) {
  EXPECT_DOUBLE_EQ(min_max_normalize(2.0, 2.0, 10.0), 0.0);
  EXPECT_DOUBLE_EQ(min_max_normalize(10.0, 2.0, 10.0), 1.0);
  EXPECT_DOUBLE_EQ(min_max_normalize(6.0, 2.0, 10.0), 0.5);
  EXPECT_THROW(min_max_normalize(1.0, 3.0, 3.0), std::invalid_argument);
}

TEST(Percentile, LinearInterpolation) {
  const std::vector<double> v{0.0, 10.0, 20.0, 30.0};
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 1.0), 30.0);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.5), 15.0);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.25), 7.5);
}

TEST(Bootstrap, DeterministicAndBracketsIqm) {
  Rng rng(5);
  std::vector<double> scores(10);
  for (double& s : scores) s = rng.uniform(0.0, 100.0);
  const ConfidenceInterval a = bootstrap_iqm_ci(scores, 2000, 42);
  const ConfidenceInterval b = bootstrap_iqm_ci(scores, 2000, 42);
  EXPECT_EQ(a.lo, b.lo);
  EXPECT_EQ(a.hi, b.hi);
  const double iqm = compute_iqm(scores);
  EXPECT_LE(a.lo, iqm);
  EXPECT_GE(a.hi, iqm);
  EXPECT_LT(a.lo, a.hi);
}

TEST(MedianMeanSd, Basics) {
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_DOUBLE_EQ(mean({1.0, 2.0, 3.0}), 2.0);
  EXPECT_NEAR(sample_sd({1.0, 2.0, 3.0}), 1.0, 1e-15);
  EXPECT_THROW(median({}), std::invalid_argument);
}

}  // namespace
}  // namespace dfd
