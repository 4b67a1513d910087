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

#ifndef DFD_STATS_HPP_
#define DFD_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dfd/rng.hpp"

namespace dfd {

// Inter-quartile mean: the mean of the middle 50% of the sorted scores.
// Pinned trimming convention: with n scores the trim boundaries are at mass
// 0.25*n and 0.75*n; a score index straddling a boundary contributes with the
// fraction of its unit mass inside the window (linear weighting). For n
// divisible by 4 this is the plain mean of the middle half.
inline double compute_iqm(std::vector<double> scores) {
  const std::size_t n = scores.size();
  if (n < 4) throw std::invalid_argument("compute_iqm: need at least 4 scores");
  std::sort(scores.begin(), scores.end());
  const double lo = 0.25 * static_cast<double>(n);
  const double hi = 0.75 * static_cast<double>(n);
  double wsum = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::max(lo, static_cast<double>(i));
    const double b = std::min(hi, static_cast<double>(i + 1));
    const double w = b - a;
    if (w <= 0.0) continue;
    wsum += w;
    sum += w * scores[i];
  }
  return sum / wsum;
}

inline double min_max_normalize(double reward, double lo, double hi) {
  if (!(hi > lo)) {
    throw std::invalid_argument("min_max_normalize: hi must exceed lo");
  }
  return (reward - lo) / (hi - lo);
}

// q-th quantile of sorted data with linear interpolation between order
// statistics (rank = q * (n - 1)).
inline double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile: empty");
  if (sorted.size() == 1) return sorted[0];
  const double rank = q * static_cast<double>(sorted.size() - 1);
  const std::size_t i = static_cast<std::size_t>(rank);
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = rank - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile bootstrap confidence interval for the IQM of `scores`:
// `resamples` draws with replacement (seeded, deterministic), interval at
// [alpha/2, 1-alpha/2].
inline ConfidenceInterval bootstrap_iqm_ci(const std::vector<double>& scores,
                                           std::size_t resamples,
                                           std::uint64_t seed,
                                           double alpha = 0.05) {
  if (scores.size() < 4) {
    throw std::invalid_argument("bootstrap_iqm_ci: need at least 4 scores");
  }
  Rng rng(seed);
  std::vector<double> stats(resamples);
  std::vector<double> sample(scores.size());
  for (std::size_t b = 0; b < resamples; ++b) {
    for (double& s : sample) {
      s = scores[static_cast<std::size_t>(rng.below(scores.size()))];
    }
    stats[b] = compute_iqm(sample);
  }
  std::sort(stats.begin(), stats.end());
  return {percentile_sorted(stats, alpha / 2.0),
          percentile_sorted(stats, 1.0 - alpha / 2.0)};
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean: empty");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double sq = 0.0;
  for (double x : v) sq += (x - m) * (x - m);
  return std::sqrt(sq / static_cast<double>(v.size() - 1));
}

}  // namespace dfd

#endif  // DFD_STATS_HPP_
