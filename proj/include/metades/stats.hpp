#pragma once

// Two-group Kruskal-Wallis test and summary statistics for the report.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "metades/error.hpp"

namespace metades {

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1); zero for fewer than two values.
inline double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Mid-ranks (1-based) of the values; tied values share their average rank.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

struct KruskalWallis {
  double h = 0.0;
  double p = 1.0;
  bool significant = false;  // p < alpha
};

// Tie-corrected H with a chi-squared (1 degree of freedom) p-value.
inline KruskalWallis kruskal_wallis(std::span<const double> a, std::span<const double> b, double alpha = 0.05) {
  if (a.empty() || b.empty()) throw invalid_argument("Kruskal-Wallis needs two non-empty groups");
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  const auto n = static_cast<double>(all.size());
  const std::vector<double> ranks = average_ranks(all);

  double ra = 0.0, rb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ra += ranks[i];
  for (std::size_t i = a.size(); i < all.size(); ++i) rb += ranks[i];

  // Tie correction: 1 - sum(t^3 - t) / (N^3 - N).
  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const auto t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double correction = 1.0 - ties / (n * n * n - n);

  KruskalWallis out;
  if (!(correction > 0.0)) return out;  // every value identical
  const double h_raw = 12.0 / (n * (n + 1.0)) *
                           (ra * ra / static_cast<double>(a.size()) + rb * rb / static_cast<double>(b.size())) -
                       3.0 * (n + 1.0);
  out.h = std::max(0.0, h_raw / correction);
  out.p = std::erfc(std::sqrt(out.h / 2.0));
  out.significant = out.p < alpha;
  return out;
}

}  // namespace metades
