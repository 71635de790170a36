#pragma once

// Bundled two-class generators so benchmarks and tests run without downloads.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>

#include "metades/dataset.hpp"
#include "metades/random.hpp"

namespace metades::synthetic {

// Two overlapping Gaussian classes with unequal, axis-aligned spreads, so the
// Bayes boundary is curved and a single hyperplane is a weak learner.
inline Dataset lithuanian(std::size_t n = 1000, std::uint64_t seed = 1) {
  rng_t rng(seed);
  Dataset ds;
  ds.name = "lithuanian";
  ds.class_names = {"0", "1"};
  ds.features.resize(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = i < n / 2 ? 0 : 1;
    const auto r = static_cast<Eigen::Index>(i);
    if (y == 0) {
      ds.features(r, 0) = 0.0 + 1.0 * standard_normal(rng);
      ds.features(r, 1) = 0.0 + 2.5 * standard_normal(rng);
    } else {
      ds.features(r, 0) = 2.0 + 2.5 * standard_normal(rng);
      ds.features(r, 1) = 1.0 + 0.8 * standard_normal(rng);
    }
    ds.labels.push_back(y);
  }
  return ds;
}

// Two interleaved banana-shaped arcs of radius 5 with Gaussian noise.
inline Dataset banana(std::size_t n = 1000, std::uint64_t seed = 2, double noise = 1.0) {
  constexpr double radius = 5.0;
  constexpr double pi = std::numbers::pi;
  rng_t rng(seed);
  Dataset ds;
  ds.name = "banana";
  ds.class_names = {"0", "1"};
  ds.features.resize(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = i < n / 2 ? 0 : 1;
    const auto r = static_cast<Eigen::Index>(i);
    if (y == 0) {
      const double a = 0.125 * pi + uniform01(rng) * 1.25 * pi;
      ds.features(r, 0) = radius * std::sin(a) + noise * standard_normal(rng);
      ds.features(r, 1) = radius * std::cos(a) + noise * standard_normal(rng);
    } else {
      const double a = 0.375 * pi - uniform01(rng) * 1.25 * pi;
      ds.features(r, 0) = radius * std::sin(a) + noise * standard_normal(rng) - 0.75 * radius;
      ds.features(r, 1) = radius * std::cos(a) + noise * standard_normal(rng) - 0.75 * radius;
    }
    ds.labels.push_back(y);
  }
  return ds;
}

// Named generator lookup; returns false for unknown names.
inline bool generate(const std::string& name, Dataset& out) {
  if (name == "lithuanian") {
    out = lithuanian();
    return true;
  }
  if (name == "banana") {
    out = banana();
    return true;
  }
  return false;
}

}  // namespace metades::synthetic
