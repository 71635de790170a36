#pragma once

// Regions of competence in feature space, output profiles and their
// neighbourhoods in decision space, and pool consensus.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metades/dataset.hpp"
#include "metades/error.hpp"
#include "metades/linear.hpp"

namespace metades {

// K nearest reference samples, nearest first.
struct RegionOfCompetence {
  std::vector<std::size_t> indices;
  std::vector<double> distances;

  std::size_t size() const { return indices.size(); }

  // The k nearest members; regions are nested, so this is a prefix.
  RegionOfCompetence prefix(std::size_t k) const {
    RegionOfCompetence r;
    r.indices.assign(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(k));
    r.distances.assign(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(k));
    return r;
  }
};

namespace detail {

// Selects the k smallest (key, index) pairs; ties go to the lower index.
inline std::vector<std::pair<double, std::size_t>> k_smallest(std::vector<std::pair<double, std::size_t>> keyed,
                                                              std::size_t k) {
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(k), keyed.end());
  keyed.resize(k);
  return keyed;
}

}  // namespace detail

// Brute-force Euclidean KNN. `exclude` drops one reference row (the query
// itself during meta-training).
inline RegionOfCompetence knn_region(FeatureView x, const Matrix& reference, std::size_t k,
                                     std::optional<std::size_t> exclude = std::nullopt) {
  const auto n = static_cast<std::size_t>(reference.rows());
  const std::size_t available = n - (exclude && *exclude < n ? 1 : 0);
  if (k < 1) throw invalid_argument("neighbourhood size must be at least 1");
  if (available < k)
    throw invalid_argument("reference set has " + std::to_string(available) + " usable samples, need " +
                           std::to_string(k));
  if (x.size() != static_cast<std::size_t>(reference.cols())) throw invalid_argument("query dimension mismatch");

  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(available);
  const std::size_t d = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (exclude && *exclude == i) continue;
    const double* r = reference.data() + i * d;
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = r[j] - x[j];
      s += diff * diff;
    }
    keyed.emplace_back(s, i);
  }
  RegionOfCompetence region;
  for (const auto& [d2, i] : detail::k_smallest(std::move(keyed), k)) {
    region.indices.push_back(i);
    region.distances.push_back(std::sqrt(d2));
  }
  return region;
}

inline RegionOfCompetence knn_region(FeatureView x, const Dataset& reference, std::size_t k,
                                     std::optional<std::size_t> exclude = std::nullopt) {
  return knn_region(x, reference.features, k, exclude);
}

// ---------------------------------------------------------------------------
// Output profiles

// One materialised profile: the decision of every pool member for a sample.
struct OutputProfile {
  std::vector<int> entries;
  std::size_t source_index = 0;
  int true_label = 0;
};

// Decisions of every pool member on every sample of a dataset, row-major
// (sample j, classifier i). Immutable after construction.
class ProfileTable {
 public:
  ProfileTable() = default;
  ProfileTable(std::size_t rows, std::size_t classifiers, int num_classes, std::vector<int> decisions,
               std::vector<int> labels)
      : rows_(rows), m_(classifiers), l_(num_classes), decisions_(std::move(decisions)), labels_(std::move(labels)) {
    if (decisions_.size() != rows_ * m_ || labels_.size() != rows_) throw invalid_argument("profile table shape");
  }

  std::size_t rows() const { return rows_; }
  std::size_t classifiers() const { return m_; }
  int num_classes() const { return l_; }

  std::span<const int> profile(std::size_t j) const { return {decisions_.data() + j * m_, m_}; }
  int decision(std::size_t j, std::size_t i) const { return decisions_[j * m_ + i]; }
  int true_label(std::size_t j) const { return labels_[j]; }
  bool correct(std::size_t j, std::size_t i) const { return decision(j, i) == labels_[j]; }

  OutputProfile at(std::size_t j) const {
    const auto p = profile(j);
    return {{p.begin(), p.end()}, j, labels_[j]};
  }

 private:
  std::size_t rows_ = 0, m_ = 0;
  int l_ = 0;
  std::vector<int> decisions_;
  std::vector<int> labels_;
};

inline ProfileTable build_profiles(const Dataset& ds, const Pool& pool) {
  std::vector<int> decisions;
  decisions.reserve(ds.size() * pool.size());
  for (std::size_t j = 0; j < ds.size(); ++j)
    for (std::size_t i = 0; i < pool.size(); ++i) decisions.push_back(pool[i].predict(ds.row(j)));
  return {ds.size(), pool.size(), pool.num_classes(), std::move(decisions), ds.labels};
}

// Squared Euclidean distance between one-hot encodings of two profiles. Each
// disagreeing position differs in exactly two indicator coordinates.
inline double profile_distance_sq(std::span<const int> a, std::span<const int> b) {
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mismatches += a[i] != b[i];
  return 2.0 * static_cast<double>(mismatches);
}

struct ProfileNeighborhood {
  std::vector<std::size_t> indices;
  std::vector<double> distances;

  std::size_t size() const { return indices.size(); }
};

inline ProfileNeighborhood profile_neighbors(std::span<const int> profile, const ProfileTable& table, std::size_t kp,
                                             std::optional<std::size_t> exclude = std::nullopt) {
  const std::size_t n = table.rows();
  const std::size_t available = n - (exclude && *exclude < n ? 1 : 0);
  if (kp < 1) throw invalid_argument("profile neighbourhood size must be at least 1");
  if (available < kp)
    throw invalid_argument("profile table has " + std::to_string(available) + " usable rows, need " +
                           std::to_string(kp));
  if (profile.size() != table.classifiers()) throw invalid_argument("profile length mismatch");

  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(available);
  for (std::size_t j = 0; j < n; ++j) {
    if (exclude && *exclude == j) continue;
    keyed.emplace_back(profile_distance_sq(profile, table.profile(j)), j);
  }
  ProfileNeighborhood out;
  for (const auto& [d2, j] : detail::k_smallest(std::move(keyed), kp)) {
    out.indices.push_back(j);
    out.distances.push_back(std::sqrt(d2));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Consensus

// Share of the pool voting for the plurality class.
inline double consensus(std::span<const int> decisions, int num_classes) {
  if (decisions.empty()) throw invalid_argument("consensus of an empty pool");
  std::vector<std::size_t> votes(static_cast<std::size_t>(num_classes), 0);
  for (int d : decisions) ++votes[static_cast<std::size_t>(d)];
  return static_cast<double>(*std::max_element(votes.begin(), votes.end())) / static_cast<double>(decisions.size());
}

inline double consensus(FeatureView x, const Pool& pool) {
  const auto decisions = pool.predict_all(x);
  return consensus(decisions, pool.num_classes());
}

}  // namespace metades
