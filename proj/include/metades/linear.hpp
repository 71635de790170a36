#pragma once

// Base classifiers: multi-class perceptrons, bagged pools of them, and the
// AdaBoost.M1 baseline built from the same learner.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "metades/dataset.hpp"
#include "metades/error.hpp"
#include "metades/random.hpp"

namespace metades {

struct PerceptronOptions {
  std::size_t epochs = 100;
  double learning_rate = 1.0;
  // Initial weights are uniform in [-init_scale, init_scale].
  double init_scale = 0.05;
};

// One hyperplane per class: row l of the L x (d+1) weight matrix holds the
// feature weights of class l followed by its bias.
class LinearClassifier {
 public:
  LinearClassifier() = default;
  explicit LinearClassifier(Matrix weights, std::uint64_t trained_on = 0)
      : w_(std::move(weights)), trained_on_(trained_on) {
    if (w_.rows() < 2 || w_.cols() < 2) throw invalid_argument("classifier needs L >= 2 rows and d >= 1");
  }

  int num_classes() const { return static_cast<int>(w_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(w_.cols() - 1); }
  const Matrix& weights() const { return w_; }
  Matrix& weights() { return w_; }
  std::uint64_t trained_on() const { return trained_on_; }

  double score(int cls, FeatureView x) const {
    const auto r = static_cast<Eigen::Index>(cls);
    const std::size_t d = dim();
    double s = w_(r, static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) s += w_(r, static_cast<Eigen::Index>(j)) * x[j];
    return s;
  }

  Eigen::VectorXd scores(FeatureView x) const {
    check_dim(x);
    Eigen::VectorXd s(w_.rows());
    for (int l = 0; l < num_classes(); ++l) s[l] = score(l, x);
    return s;
  }

  // argmax of the class scores; ties go to the lowest class index.
  int predict(FeatureView x) const {
    check_dim(x);
    int best = 0;
    double best_s = score(0, x);
    for (int l = 1; l < num_classes(); ++l) {
      const double s = score(l, x);
      if (s > best_s) {
        best_s = s;
        best = l;
      }
    }
    return best;
  }

  // Softmax of the scores divided by the largest feature-weight row norm.
  // A single shared scale keeps argmax(posterior) == predict.
  Eigen::VectorXd posterior(FeatureView x) const {
    Eigen::VectorXd z = scores(x);
    const double scale = max_row_norm();
    if (scale > 0.0)
      z /= scale;
    else
      z.setZero();
    z.array() -= z.maxCoeff();
    Eigen::VectorXd p = z.array().exp();
    return p / p.sum();
  }

  // Euclidean distance from x to the boundary between the two highest
  // scoring classes: |s1 - s2| / ||w_l1 - w_l2||. Degenerate boundary -> 0.
  double decision_distance(FeatureView x) const {
    check_dim(x);
    int first = 0, second = 1;
    double s1 = score(0, x), s2 = score(1, x);
    if (s2 > s1) {
      std::swap(first, second);
      std::swap(s1, s2);
    }
    for (int l = 2; l < num_classes(); ++l) {
      const double s = score(l, x);
      if (s > s1) {
        second = first;
        s2 = s1;
        first = l;
        s1 = s;
      } else if (s > s2) {
        second = l;
        s2 = s;
      }
    }
    const auto d = static_cast<Eigen::Index>(dim());
    const double denom = (w_.row(first).head(d) - w_.row(second).head(d)).norm();
    if (!(denom > 0.0)) return 0.0;
    return std::abs(s1 - s2) / denom;
  }

  double max_row_norm() const {
    const auto d = static_cast<Eigen::Index>(dim());
    return w_.leftCols(d).rowwise().norm().maxCoeff();
  }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < w_.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(w_.cols()));
      for (Eigen::Index c = 0; c < w_.cols(); ++c) row[static_cast<std::size_t>(c)] = w_(r, c);
      rows.push_back(row);
    }
    return {{"trained_on", trained_on_}, {"weights", rows}};
  }

  static LinearClassifier from_json(const nlohmann::json& j) {
    const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw invalid_argument("classifier without weights");
    Matrix w(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows.front().size()) throw invalid_argument("ragged weight matrix");
      for (std::size_t c = 0; c < rows[r].size(); ++c)
        w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return LinearClassifier(std::move(w), j.value("trained_on", std::uint64_t{0}));
  }

 private:
  void check_dim(FeatureView x) const {
    if (x.size() != dim())
      throw invalid_argument("feature vector has " + std::to_string(x.size()) + " entries, classifier expects " +
                             std::to_string(dim()));
  }

  Matrix w_;
  std::uint64_t trained_on_ = 0;
};

// Online multi-class perceptron over the given sample positions (repeats
// allowed, as in a bootstrap). Fixed epoch budget; the visiting order is
// reshuffled every epoch from `seed`.
inline LinearClassifier train_perceptron(const Dataset& ds, std::span<const std::size_t> sample,
                                         const PerceptronOptions& opts, std::uint64_t seed) {
  if (sample.empty()) throw invalid_argument("perceptron needs at least one training sample");
  if (opts.epochs < 1) throw invalid_argument("perceptron needs at least one epoch");
  const auto d = static_cast<Eigen::Index>(ds.dim());
  rng_t rng(seed);
  Matrix w(ds.num_classes(), d + 1);
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c <= d; ++c) w(r, c) = uniform(rng, -opts.init_scale, opts.init_scale);
  LinearClassifier clf(std::move(w), seed);

  std::vector<std::size_t> order(sample.begin(), sample.end());
  for (std::size_t e = 0; e < opts.epochs; ++e) {
    shuffle(std::span<std::size_t>(order), rng);
    for (std::size_t i : order) {
      const FeatureView x = ds.row(i);
      const int y = ds.labels[i];
      const int p = clf.predict(x);
      if (p == y) continue;
      auto& wm = clf.weights();
      for (Eigen::Index c = 0; c < d; ++c) {
        wm(y, c) += opts.learning_rate * x[static_cast<std::size_t>(c)];
        wm(p, c) -= opts.learning_rate * x[static_cast<std::size_t>(c)];
      }
      wm(y, d) += opts.learning_rate;
      wm(p, d) -= opts.learning_rate;
    }
  }
  return clf;
}

inline LinearClassifier train_perceptron(const Dataset& ds, const PerceptronOptions& opts, std::uint64_t seed) {
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return train_perceptron(ds, all, opts, seed);
}

inline double accuracy(const LinearClassifier& c, const Dataset& ds) {
  if (ds.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) ok += c.predict(ds.row(i)) == ds.labels[i];
  return static_cast<double>(ok) / static_cast<double>(ds.size());
}

// ---------------------------------------------------------------------------
// Pool

struct Pool {
  std::vector<LinearClassifier> members;

  std::size_t size() const { return members.size(); }
  const LinearClassifier& operator[](std::size_t i) const { return members[i]; }
  std::size_t dim() const { return members.empty() ? 0 : members.front().dim(); }
  int num_classes() const { return members.empty() ? 0 : members.front().num_classes(); }

  void validate() const {
    if (members.size() < 2) throw invalid_argument("a pool needs at least two classifiers");
    for (const auto& m : members)
      if (m.dim() != dim() || m.num_classes() != num_classes())
        throw invalid_argument("pool members disagree on dimension or class count");
  }

  std::vector<int> predict_all(FeatureView x) const {
    std::vector<int> out(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) out[i] = members[i].predict(x);
    return out;
  }

  // Hash of every weight; equal hashes identify the same pool.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& m : members) {
      const auto& w = m.weights();
      h = fnv1a({reinterpret_cast<const char*>(w.data()), static_cast<std::size_t>(w.size()) * sizeof(double)}, h);
    }
    return h;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["dim"] = dim();
    j["num_classes"] = num_classes();
    j["members"] = nlohmann::json::array();
    for (const auto& m : members) j["members"].push_back(m.to_json());
    return j;
  }

  static Pool from_json(const nlohmann::json& j) {
    Pool p;
    for (const auto& m : j.at("members")) p.members.push_back(LinearClassifier::from_json(m));
    p.validate();
    return p;
  }
};

// Bagging: M bootstrap replicates of `train` (size N, with replacement), one
// perceptron per replicate. Replicates missing a class are redrawn.
inline Pool bagging_generate(const Dataset& train, std::size_t pool_size, std::uint64_t seed,
                             const PerceptronOptions& opts = {}, std::size_t max_redraws = 100) {
  if (pool_size < 2) throw invalid_argument("pool size must be at least 2");
  if (train.empty()) throw invalid_argument("cannot bag an empty dataset");
  const std::size_t n = train.size();
  const auto num_classes = static_cast<std::size_t>(train.num_classes());
  Pool pool;
  pool.members.reserve(pool_size);
  std::vector<std::size_t> sample(n);
  std::vector<char> seen(num_classes);
  for (std::size_t m = 0; m < pool_size; ++m) {
    const std::uint64_t member_seed = derive_seed(seed, m);
    rng_t rng(member_seed);
    bool complete = false;
    for (std::size_t attempt = 0; attempt <= max_redraws && !complete; ++attempt) {
      std::fill(seen.begin(), seen.end(), 0);
      for (auto& s : sample) {
        s = uniform_index(rng, n);
        seen[static_cast<std::size_t>(train.labels[s])] = 1;
      }
      complete = std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    }
    if (!complete)
      throw error("bootstrap for pool member " + std::to_string(m) + " missed a class after " +
                  std::to_string(max_redraws) + " redraws");
    pool.members.push_back(train_perceptron(train, sample, opts, derive_seed(member_seed, 1)));
  }
  return pool;
}

// ---------------------------------------------------------------------------
// AdaBoost.M1 with weighted resampling

struct AdaBoostModel {
  std::vector<LinearClassifier> learners;
  std::vector<double> alphas;
  int num_classes = 0;

  std::size_t size() const { return learners.size(); }

  int predict(FeatureView x) const {
    std::vector<double> votes(static_cast<std::size_t>(num_classes), 0.0);
    for (std::size_t t = 0; t < learners.size(); ++t)
      votes[static_cast<std::size_t>(learners[t].predict(x))] += alphas[t];
    return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
};

inline AdaBoostModel adaboost_train(const Dataset& train, std::size_t rounds, std::uint64_t seed,
                                    const PerceptronOptions& opts = {}) {
  if (rounds < 1) throw invalid_argument("AdaBoost needs at least one round");
  if (train.empty()) throw invalid_argument("cannot boost an empty dataset");
  const std::size_t n = train.size();
  AdaBoostModel model;
  model.num_classes = train.num_classes();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<double> cdf(n);
  std::vector<std::size_t> sample(n);
  std::vector<char> correct(n);
  rng_t rng(seed);

  for (std::size_t t = 0; t < rounds; ++t) {
    std::partial_sum(w.begin(), w.end(), cdf.begin());
    for (auto& s : sample) {
      const double u = uniform01(rng) * cdf.back();
      s = std::min<std::size_t>(static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()),
                                n - 1);
    }
    LinearClassifier h = train_perceptron(train, sample, opts, derive_seed(seed, t));

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      correct[i] = h.predict(train.row(i)) == train.labels[i];
      if (!correct[i]) err += w[i];
    }
    if (err >= 0.5) {
      // An empty ensemble cannot predict; keep the first learner unweighted.
      if (model.learners.empty()) {
        model.learners.push_back(std::move(h));
        model.alphas.push_back(1.0);
      }
      break;
    }
    if (err <= 0.0) {
      model.learners.push_back(std::move(h));
      model.alphas.push_back(std::log(1e10));
      break;
    }
    const double beta = err / (1.0 - err);
    model.learners.push_back(std::move(h));
    model.alphas.push_back(std::log(1.0 / beta));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (correct[i]) w[i] *= beta;
      total += w[i];
    }
    for (auto& wi : w) wi /= total;
  }
  return model;
}

}  // namespace metades
