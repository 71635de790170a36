#pragma once

// META-DES: dynamic ensemble selection where a meta-classifier decides, per
// query, which pool members are competent.
//
// Meta-training: every meta-training sample on which the pool's consensus is
// below h_C contributes one meta-sample per pool member, built from its
// neighbourhood in the meta-training set (itself excluded). The selector is
// fitted on those samples.
//
// Classification: neighbourhoods come from DSEL; members the selector deems
// competent vote, and an empty selection falls back to the member with the
// highest selector output.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metades/competence.hpp"
#include "metades/dataset.hpp"
#include "metades/error.hpp"
#include "metades/linear.hpp"
#include "metades/meta_features.hpp"
#include "metades/mlp.hpp"
#include "metades/voting.hpp"

namespace metades {

struct MetaDesParams {
  std::size_t k = 7;           // region of competence size
  std::size_t kp = 5;          // output-profile neighbourhood size
  double consensus_threshold = 0.70;  // h_C
  MetaClassifierOptions selector;

  MetaLayout layout() const { return {k, kp}; }

  void validate() const {
    if (k < 1 || kp < 1) throw invalid_argument("K and Kp must be at least 1");
    if (!(consensus_threshold > 0.0)) throw invalid_argument("consensus threshold must be positive");
  }
};

struct MetaSet {
  MetaLayout layout;
  std::vector<MetaSample> samples;
  ConfidenceScaler confidence;
  std::vector<std::size_t> admitted;  // meta-training rows that passed the consensus filter
};

// Sample selection and meta-feature extraction over the meta-training set.
inline MetaSet build_meta_set(const Pool& pool, const Dataset& meta_train, const MetaDesParams& params) {
  params.validate();
  pool.validate();
  const MetaLayout layout = params.layout();
  const ReferenceTables tables = build_reference_tables(meta_train, pool);
  MetaSet out{layout, {}, ConfidenceScaler(pool.size()), {}};

  for (std::size_t j = 0; j < meta_train.size(); ++j) {
    const auto profile = tables.profiles.profile(j);
    if (!(consensus(profile, pool.num_classes()) < params.consensus_threshold)) continue;
    out.admitted.push_back(j);
    const FeatureView x = meta_train.row(j);
    const RegionOfCompetence region = knn_region(x, meta_train, layout.k, j);
    const ProfileNeighborhood nbrs = profile_neighbors(profile, tables.profiles, layout.kp, j);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      MetaSample s;
      s.features.resize(layout.size());
      const double distance = pool[i].decision_distance(x);
      out.confidence.observe(i, distance);
      extract_unscaled(i, region, nbrs, tables, distance, layout, s.features);
      s.competent = tables.profiles.correct(j, i) ? 1 : 0;
      s.classifier_index = i;
      s.query_index = j;
      out.samples.push_back(std::move(s));
    }
  }
  if (out.admitted.empty())
    throw invalid_argument("no meta-training sample has consensus below h_C = " +
                           std::to_string(params.consensus_threshold) + "; increase the consensus threshold");
  // f5 scaling needs the bounds over every admitted query first.
  for (auto& s : out.samples)
    s.features[layout.f5()] = out.confidence.apply(s.classifier_index, s.features[layout.f5()]);
  return out;
}

// Outcome of one dynamic selection.
struct Decision {
  int label = 0;
  std::vector<std::size_t> selected;  // members that voted
  std::vector<double> votes;          // per-class tally
  bool fallback = false;              // selection was empty; single best member used
};

// Selector concept: callable with a meta-feature vector, returning Competence.
template <typename S>
concept CompetenceSelector = requires(const S& s, std::span<const double> v) {
  { s(v) } -> std::convertible_to<Competence>;
};

struct QueryRecord {
  std::size_t query_index = 0;
  std::size_t selected = 0;
  int predicted = 0;
  int truth = 0;
};

struct Evaluation {
  double accuracy = 0.0;
  double mean_selected = 0.0;
  std::vector<QueryRecord> records;
};

inline void write_diagnostics_csv(const Evaluation& ev, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot write '" + path.string() + "'");
  out << "query_index,selected,predicted,true\n";
  for (const auto& r : ev.records)
    out << r.query_index << ',' << r.selected << ',' << r.predicted << ',' << r.truth << '\n';
}

class MetaDes {
 public:
  MetaDes() = default;

  MetaDes(Pool pool, MetaClassifier selector, ConfidenceScaler confidence, Dataset dsel, MetaDesParams params)
      : pool_(std::move(pool)),
        selector_(std::move(selector)),
        confidence_(std::move(confidence)),
        dsel_(std::move(dsel)),
        params_(std::move(params)) {
    params_.validate();
    pool_.validate();
    if (selector_.input_dim() != params_.layout().size()) throw invalid_argument("selector input size != 2K+Kp+2");
    if (confidence_.classifiers() != pool_.size()) throw invalid_argument("confidence scaler size != pool size");
    if (dsel_.size() < std::max(params_.k, params_.kp)) throw invalid_argument("DSEL smaller than K or Kp");
    tables_ = build_reference_tables(dsel_, pool_);
  }

  // Meta-trains on `meta_train` (disjoint from the pool's training data) and
  // keeps `dsel` for generalisation.
  static MetaDes fit(Pool pool, const Dataset& meta_train, Dataset dsel, const MetaDesParams& params,
                     std::uint64_t seed) {
    MetaSet ms = build_meta_set(pool, meta_train, params);
    MetaClassifier selector = MetaClassifier::train(ms.samples, seed, params.selector);
    return MetaDes(std::move(pool), std::move(selector), std::move(ms.confidence), std::move(dsel), params);
  }

  const Pool& pool() const { return pool_; }
  const MetaClassifier& selector() const { return selector_; }
  const ConfidenceScaler& confidence() const { return confidence_; }
  const Dataset& dsel() const { return dsel_; }
  const MetaDesParams& params() const { return params_; }
  const ReferenceTables& dsel_tables() const { return tables_; }

  // Classifies x with an arbitrary selector (the trained one, or a stub in
  // tests). `exclude` drops one DSEL row (leave-one-out evaluation on DSEL).
  template <CompetenceSelector Selector>
  Decision classify_with(const Selector& selector, FeatureView x,
                         std::optional<std::size_t> exclude = std::nullopt) const {
    const MetaLayout layout = params_.layout();
    const RegionOfCompetence region = knn_region(x, dsel_, layout.k, exclude);
    const std::vector<int> decisions = pool_.predict_all(x);
    const ProfileNeighborhood nbrs = profile_neighbors(decisions, tables_.profiles, layout.kp, exclude);

    Decision d;
    std::vector<double> v(layout.size());
    std::size_t best = 0;
    double best_conf = -1.0;
    for (std::size_t i = 0; i < pool_.size(); ++i) {
      extract_unscaled(i, region, nbrs, tables_, pool_[i].decision_distance(x), layout, v);
      v[layout.f5()] = confidence_.apply(i, v[layout.f5()]);
      const Competence c = selector(std::span<const double>(v));
      if (c.competent) d.selected.push_back(i);
      if (c.confidence > best_conf) {
        best_conf = c.confidence;
        best = i;
      }
    }
    if (d.selected.empty()) {
      d.fallback = true;
      d.selected.push_back(best);
    }
    VoteResult vr = majority_vote(pool_, d.selected, decisions, x);
    d.label = vr.label;
    d.votes = std::move(vr.votes);
    return d;
  }

  Decision classify(FeatureView x, std::optional<std::size_t> exclude = std::nullopt) const {
    return classify_with(selector_, x, exclude);
  }

  Evaluation evaluate(const Dataset& test) const {
    if (test.empty()) throw invalid_argument("cannot evaluate on an empty test set");
    Evaluation ev;
    std::size_t correct = 0, selected = 0;
    for (std::size_t j = 0; j < test.size(); ++j) {
      const Decision d = classify(test.row(j));
      correct += d.label == test.labels[j];
      selected += d.selected.size();
      ev.records.push_back({j, d.selected.size(), d.label, test.labels[j]});
    }
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    ev.mean_selected = static_cast<double>(selected) / static_cast<double>(test.size());
    return ev;
  }

  // Leave-one-out accuracy over DSEL itself (parameter tuning).
  double dsel_accuracy() const {
    std::size_t correct = 0;
    for (std::size_t j = 0; j < dsel_.size(); ++j) correct += classify(dsel_.row(j), j).label == dsel_.labels[j];
    return static_cast<double>(correct) / static_cast<double>(dsel_.size());
  }

  // Bundle: pool, selector and scalers inline; DSEL by relative path + hash.
  nlohmann::json to_json(const std::string& dsel_path) const {
    return {{"format", "metades-model/1"},
            {"params", {{"k", params_.k}, {"kp", params_.kp}, {"consensus_threshold", params_.consensus_threshold}}},
            {"pool", pool_.to_json()},
            {"selector", selector_.to_json()},
            {"confidence_scaler", confidence_.to_json()},
            {"dsel", {{"path", dsel_path}, {"hash", content_hash(dsel_)}}}};
  }

  // Writes the model JSON and DSEL CSV side by side.
  void save(const std::filesystem::path& model_path, const nlohmann::json& extra = {}) const {
    const auto dsel_file = model_path.stem().string() + ".dsel.csv";
    save_csv(dsel_, model_path.parent_path() / dsel_file);
    nlohmann::json j = to_json(dsel_file);
    if (!extra.is_null()) j["extra"] = extra;
    std::ofstream out(model_path);
    if (!out) throw error("cannot write '" + model_path.string() + "'");
    out << j.dump(1) << '\n';
  }

  static MetaDes load(const std::filesystem::path& model_path, nlohmann::json* extra = nullptr) {
    std::ifstream in(model_path);
    if (!in) throw error("cannot open '" + model_path.string() + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw error("bad model file: " + std::string(e.what()));
    }
    if (j.value("format", "") != "metades-model/1") throw error("unknown model format");
    MetaDesParams params;
    params.k = j.at("params").at("k").get<std::size_t>();
    params.kp = j.at("params").at("kp").get<std::size_t>();
    params.consensus_threshold = j.at("params").at("consensus_threshold").get<double>();
    CsvOptions csv;
    csv.header = HeaderMode::present;
    Dataset dsel = load_csv(model_path.parent_path() / j.at("dsel").at("path").get<std::string>(), csv);
    if (content_hash(dsel) != j.at("dsel").at("hash").get<std::uint64_t>())
      throw error("DSEL file does not match the hash recorded in the model");
    if (extra && j.contains("extra")) *extra = j.at("extra");
    return MetaDes(Pool::from_json(j.at("pool")), MetaClassifier::from_json(j.at("selector")),
                   ConfidenceScaler::from_json(j.at("confidence_scaler")), std::move(dsel), params);
  }

 private:
  Pool pool_;
  MetaClassifier selector_;
  ConfidenceScaler confidence_;
  Dataset dsel_;
  MetaDesParams params_;
  ReferenceTables tables_;
};

}  // namespace metades
