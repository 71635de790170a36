#pragma once

// Meta-features describing how competent one base classifier is around one
// query, laid out as
//
//   [ f1 (K) | f2 (K) | f3 (1) | f4 (Kp) | f5 (1) ]     length 2K + Kp + 2
//
//   f1  hit/miss of the classifier on each neighbour of the query, nearest first
//   f2  posterior the classifier gives each neighbour's true class
//   f3  mean of f1 (local accuracy)
//   f4  hit/miss on the sources of the Kp most similar output profiles
//   f5  distance of the query to the classifier's decision boundary, min-max
//       scaled with per-classifier bounds fitted on meta-training queries

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metades/competence.hpp"
#include "metades/dataset.hpp"
#include "metades/error.hpp"
#include "metades/linear.hpp"

namespace metades {

struct MetaLayout {
  std::size_t k = 7;
  std::size_t kp = 5;

  std::size_t size() const { return 2 * k + kp + 2; }
  std::size_t f1() const { return 0; }
  std::size_t f2() const { return k; }
  std::size_t f3() const { return 2 * k; }
  std::size_t f4() const { return 2 * k + 1; }
  std::size_t f5() const { return 2 * k + 1 + kp; }
};

struct MetaSample {
  std::vector<double> features;
  int competent = 0;  // 1 when the classifier labels the query correctly
  std::size_t classifier_index = 0;
  std::size_t query_index = 0;
};

inline std::vector<double> extract_f1(const LinearClassifier& c, const RegionOfCompetence& region,
                                      const Dataset& reference) {
  std::vector<double> f(region.size());
  for (std::size_t k = 0; k < region.size(); ++k) {
    const std::size_t j = region.indices[k];
    f[k] = c.predict(reference.row(j)) == reference.labels[j] ? 1.0 : 0.0;
  }
  return f;
}

inline std::vector<double> extract_f2(const LinearClassifier& c, const RegionOfCompetence& region,
                                      const Dataset& reference) {
  std::vector<double> f(region.size());
  for (std::size_t k = 0; k < region.size(); ++k) {
    const std::size_t j = region.indices[k];
    f[k] = c.posterior(reference.row(j))[reference.labels[j]];
  }
  return f;
}

inline double extract_f3(std::span<const double> f1) {
  if (f1.empty()) throw invalid_argument("f3 of an empty region");
  return std::accumulate(f1.begin(), f1.end(), 0.0) / static_cast<double>(f1.size());
}

// Uses the decisions recorded in `table` for classifier `classifier_index`.
inline std::vector<double> extract_f4(std::size_t classifier_index, const ProfileNeighborhood& nbrs,
                                      const ProfileTable& table) {
  std::vector<double> f(nbrs.size());
  for (std::size_t k = 0; k < nbrs.size(); ++k) f[k] = table.correct(nbrs.indices[k], classifier_index) ? 1.0 : 0.0;
  return f;
}

// Per-classifier min-max bounds of the boundary distance.
class ConfidenceScaler {
 public:
  ConfidenceScaler() = default;
  explicit ConfidenceScaler(std::size_t classifiers)
      : lo_(classifiers, std::numeric_limits<double>::infinity()),
        hi_(classifiers, -std::numeric_limits<double>::infinity()) {}

  void observe(std::size_t classifier, double distance) {
    lo_[classifier] = std::min(lo_[classifier], distance);
    hi_[classifier] = std::max(hi_[classifier], distance);
  }

  bool fitted() const {
    return !lo_.empty() && std::all_of(lo_.begin(), lo_.end(), [](double v) { return std::isfinite(v); });
  }
  std::size_t classifiers() const { return lo_.size(); }
  double lower(std::size_t i) const { return lo_[i]; }
  double upper(std::size_t i) const { return hi_[i]; }

  // Clamped to [0, 1]; a classifier whose fitted range is a single point maps to 0.5.
  double apply(std::size_t classifier, double distance) const {
    if (classifier >= lo_.size() || !std::isfinite(lo_[classifier]))
      throw not_fitted("confidence scaler used before fit");
    const double span = hi_[classifier] - lo_[classifier];
    if (!(span > 0.0)) return 0.5;
    return std::clamp((distance - lo_[classifier]) / span, 0.0, 1.0);
  }

  nlohmann::json to_json() const { return {{"min", lo_}, {"max", hi_}}; }
  static ConfidenceScaler from_json(const nlohmann::json& j) {
    ConfidenceScaler s;
    s.lo_ = j.at("min").get<std::vector<double>>();
    s.hi_ = j.at("max").get<std::vector<double>>();
    if (s.lo_.size() != s.hi_.size()) throw invalid_argument("confidence scaler bounds mismatch");
    return s;
  }

 private:
  std::vector<double> lo_, hi_;
};

inline double extract_f5(const LinearClassifier& c, FeatureView x, const ConfidenceScaler& scaler,
                         std::size_t classifier_index) {
  return scaler.apply(classifier_index, c.decision_distance(x));
}

inline MetaSample assemble(std::span<const double> f1, std::span<const double> f2, double f3,
                           std::span<const double> f4, double f5, int competent) {
  if (f1.empty() || f4.empty()) throw invalid_argument("meta-feature groups must be non-empty");
  if (f1.size() != f2.size())
    throw invalid_argument("f1 and f2 lengths differ (" + std::to_string(f1.size()) + " vs " +
                           std::to_string(f2.size()) + ")");
  MetaSample s;
  s.features.reserve(2 * f1.size() + f4.size() + 2);
  s.features.insert(s.features.end(), f1.begin(), f1.end());
  s.features.insert(s.features.end(), f2.begin(), f2.end());
  s.features.push_back(f3);
  s.features.insert(s.features.end(), f4.begin(), f4.end());
  s.features.push_back(f5);
  s.competent = competent ? 1 : 0;
  return s;
}

// ---------------------------------------------------------------------------
// Precomputed per-reference data so extraction reads tables instead of
// re-running the pool.

struct ReferenceTables {
  ProfileTable profiles;                // decision of classifier i on sample j
  std::vector<double> true_posteriors;  // posterior of sample j's true class under classifier i

  double true_posterior(std::size_t j, std::size_t i) const {
    return true_posteriors[j * profiles.classifiers() + i];
  }
};

inline ReferenceTables build_reference_tables(const Dataset& ref, const Pool& pool) {
  ReferenceTables t{build_profiles(ref, pool), {}};
  t.true_posteriors.resize(ref.size() * pool.size());
  for (std::size_t j = 0; j < ref.size(); ++j)
    for (std::size_t i = 0; i < pool.size(); ++i)
      t.true_posteriors[j * pool.size() + i] = pool[i].posterior(ref.row(j))[ref.labels[j]];
  return t;
}

// Writes f1..f4 from the reference tables and the raw (unscaled) boundary
// distance into the f5 slot of `out`, which must have layout.size() entries.
inline void extract_unscaled(std::size_t classifier_index, const RegionOfCompetence& region,
                             const ProfileNeighborhood& nbrs, const ReferenceTables& ref, double distance,
                             const MetaLayout& layout, std::span<double> out) {
  double hits = 0.0;
  for (std::size_t k = 0; k < layout.k; ++k) {
    const std::size_t j = region.indices[k];
    const double hit = ref.profiles.correct(j, classifier_index) ? 1.0 : 0.0;
    out[layout.f1() + k] = hit;
    out[layout.f2() + k] = ref.true_posterior(j, classifier_index);
    hits += hit;
  }
  out[layout.f3()] = hits / static_cast<double>(layout.k);
  for (std::size_t k = 0; k < layout.kp; ++k)
    out[layout.f4() + k] = ref.profiles.correct(nbrs.indices[k], classifier_index) ? 1.0 : 0.0;
  out[layout.f5()] = distance;
}

// CSV with one row per meta-sample: feature columns, alpha, classifier and
// query indices.
inline void write_meta_csv(std::span<const MetaSample> samples, const MetaLayout& layout,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot write '" + path.string() + "'");
  for (std::size_t k = 0; k < layout.k; ++k) out << "f1_" << k << ',';
  for (std::size_t k = 0; k < layout.k; ++k) out << "f2_" << k << ',';
  out << "f3,";
  for (std::size_t k = 0; k < layout.kp; ++k) out << "f4_" << k << ',';
  out << "f5,alpha,classifier_index,query_index\n";
  char buf[32];
  for (const auto& s : samples) {
    if (s.features.size() != layout.size()) throw invalid_argument("meta-sample length mismatch");
    for (double v : s.features) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << s.competent << ',' << s.classifier_index << ',' << s.query_index << '\n';
  }
}

}  // namespace metades
