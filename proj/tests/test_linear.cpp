#include <gtest/gtest.h>

#include <cmath>

#include "metades/linear.hpp"
#include "metades/synthetic.hpp"

using namespace metades;

namespace {

Dataset make(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels, int num_classes = 2) {
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  ds.labels = labels;
  for (int l = 0; l < num_classes; ++l) ds.class_names.push_back(std::to_string(l));
  return ds;
}

// Classifier whose scores at x = e_1 .. are given directly by the bias column.
LinearClassifier constant_scores(const std::vector<double>& s) {
  Matrix w = Matrix::Zero(static_cast<Eigen::Index>(s.size()), 2);
  for (std::size_t l = 0; l < s.size(); ++l) w(static_cast<Eigen::Index>(l), 1) = s[l];
  w(0, 0) = 1e-3;  // nonzero feature weights; x = 0 below, so scores are the biases
  return LinearClassifier(w);
}

const std::vector<double> kZero{0.0};

}  // namespace

TEST(Predict, ScoreExamples) {
  EXPECT_EQ(constant_scores({2.0, -1.0}).predict(kZero), 0);
  EXPECT_EQ(constant_scores({1.0, 1.0}).predict(kZero), 0);
  EXPECT_EQ(constant_scores({-3.0, 0.5, 0.1}).predict(kZero), 1);
}

TEST(Predict, DimensionMismatch) {
  const auto c = constant_scores({1.0, 0.0});
  const std::vector<double> x{1.0, 2.0};
  EXPECT_THROW(c.predict(x), invalid_argument);
  EXPECT_THROW(c.posterior(x), invalid_argument);
}

TEST(Posterior, Examples) {
  const auto eq = constant_scores({0.3, 0.3}).posterior(kZero);
  EXPECT_NEAR(eq[0], 0.5, 1e-12);
  EXPECT_NEAR(eq[1], 0.5, 1e-12);

  Matrix w(2, 3);
  w << 1, 0, 0, 0, 1, 0;  // unit-norm rows
  const LinearClassifier c(w);
  const std::vector<double> x{1.0, 0.0};
  const auto p = c.posterior(x);  // softmax(1, 0)
  const double oracle = std::exp(1.0) / (std::exp(1.0) + 1.0);
  EXPECT_NEAR(p[0], oracle, 1e-12);
  EXPECT_NEAR(p[0], 0.731, 1e-3);
  EXPECT_NEAR(p[1], 0.269, 1e-3);

  const std::vector<double> far{1e6, 0.0};
  EXPECT_GT(c.posterior(far)[0], 1.0 - 1e-12);
}

TEST(Posterior, ArgmaxMatchesPredictAndSumsToOne) {
  rng_t rng(9);
  for (int trial = 0; trial < 2000; ++trial) {
    const Eigen::Index l = 2 + static_cast<Eigen::Index>(uniform_index(rng, 4));
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(uniform_index(rng, 5));
    Matrix w(l, d + 1);
    for (Eigen::Index r = 0; r < l; ++r)
      for (Eigen::Index c = 0; c <= d; ++c) w(r, c) = uniform(rng, -3, 3);
    if (trial % 7 == 0) w.row(1) = w.row(0);  // exact ties
    const LinearClassifier clf(w);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (auto& v : x) v = uniform(rng, -2, 2);
    const auto p = clf.posterior(x);
    EXPECT_NEAR(p.sum(), 1.0, 1e-9);
    for (Eigen::Index k = 0; k < l; ++k) {
      EXPECT_GT(p[k], 0.0);
      EXPECT_LE(p[k], 1.0);
    }
    Eigen::Index arg = 0;
    for (Eigen::Index k = 1; k < l; ++k)
      if (p[k] > p[arg]) arg = k;
    EXPECT_EQ(static_cast<int>(arg), clf.predict(x));
  }
}

TEST(DecisionDistance, Examples) {
  // Binary hyperplane w = (1, 0), bias 0, exposed as two rows (w/2, -w/2).
  Matrix w(2, 3);
  w << 0.5, 0, 0, -0.5, 0, 0;
  const LinearClassifier c(w);
  EXPECT_NEAR(c.decision_distance(std::vector<double>{2.0, 5.0}), 2.0, 1e-12);
  EXPECT_NEAR(c.decision_distance(std::vector<double>{0.0, 5.0}), 0.0, 1e-12);
  EXPECT_EQ(LinearClassifier(Matrix::Zero(2, 3)).decision_distance(std::vector<double>{1.0, 1.0}), 0.0);
}

TEST(DecisionDistance, MultiClassUsesTopTwo) {
  Matrix w(3, 2);
  w << 1, 0,   // s = x
      -1, 0,   // s = -x
      0, 0.5;  // s = 0.5
  const LinearClassifier c(w);
  // x = 2: scores (2, -2, 0.5); top two are classes 0 and 2, boundary x = 0.5.
  EXPECT_NEAR(c.decision_distance(std::vector<double>{2.0}), 1.5, 1e-12);
}

TEST(Perceptron, SeparableReachesFullTrainingAccuracy) {
  rng_t rng(4);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 80; ++i) {
    const double a = uniform(rng, -1, 1), b = uniform(rng, -1, 1);
    if (std::abs(a + b - 0.2) < 0.1) continue;  // margin
    rows.push_back({a, b});
    labels.push_back(a + b > 0.2 ? 1 : 0);
  }
  const Dataset ds = make(rows, labels);
  const LinearClassifier c = train_perceptron(ds, PerceptronOptions{}, 17);
  EXPECT_DOUBLE_EQ(accuracy(c, ds), 1.0);
  EXPECT_GT(c.weights().leftCols(2).norm(), 0.0);
  EXPECT_TRUE(c.weights().allFinite());
}

TEST(Perceptron, SingleSamplePredictsItsClassNearby) {
  const Dataset ds = make({{0.3, 0.7}}, {0});
  const LinearClassifier c = train_perceptron(ds, PerceptronOptions{}, 3);
  EXPECT_EQ(c.predict(std::vector<double>{0.3, 0.7}), 0);
  EXPECT_EQ(c.predict(std::vector<double>{0.3 + 1e-6, 0.7 - 1e-6}), 0);
}

TEST(Perceptron, XorIsNotSeparable) {
  const Dataset ds = make({{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {0, 0, 1, 1});
  for (std::uint64_t seed = 0; seed < 20; ++seed) EXPECT_LE(accuracy(train_perceptron(ds, {}, seed), ds), 0.75);
}

TEST(Perceptron, Preconditions) {
  const Dataset ds = make({{0, 0}, {1, 1}}, {0, 1});
  EXPECT_THROW(train_perceptron(ds, std::vector<std::size_t>{}, {}, 1), invalid_argument);
  PerceptronOptions o;
  o.epochs = 0;
  EXPECT_THROW(train_perceptron(ds, o, 1), invalid_argument);
}

TEST(Bagging, DeterministicPool) {
  const Dataset ds = synthetic::banana(200, 5);
  const Pool a = bagging_generate(ds, 10, 42);
  const Pool b = bagging_generate(ds, 10, 42);
  ASSERT_EQ(a.size(), 10u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i].weights() == b[i].weights());
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), bagging_generate(ds, 10, 43).hash());
  EXPECT_THROW(bagging_generate(ds, 1, 42), invalid_argument);
}

TEST(Bagging, TwoSampleSetRedrawsUntilBothClassesPresent) {
  // Each bootstrap of 2 from {0, 1} misses a class with probability 1/2; the
  // pool can only be built if every member saw both classes, which for a
  // 2-point set means it fits both points.
  const Dataset ds = make({{0.0, 0.0}, {1.0, 1.0}}, {0, 1});
  const Pool pool = bagging_generate(ds, 3, 8);
  ASSERT_EQ(pool.size(), 3u);
  for (std::size_t i = 0; i < pool.size(); ++i) EXPECT_DOUBLE_EQ(accuracy(pool[i], ds), 1.0);
}

TEST(Bagging, RetryCapExceeded) {
  std::vector<std::vector<double>> rows(200, {0.0});
  std::vector<int> labels(200, 0);
  labels[0] = 1;
  const Dataset ds = make(rows, labels);
  EXPECT_THROW(bagging_generate(ds, 50, 1, {}, 0), error);
}

TEST(Pool, JsonRoundTrip) {
  const Pool p = bagging_generate(synthetic::lithuanian(100, 2), 4, 7);
  const Pool q = Pool::from_json(nlohmann::json::parse(p.to_json().dump()));
  EXPECT_EQ(p.hash(), q.hash());
}

TEST(AdaBoost, SeparableStopsAfterFirstRound) {
  const Dataset ds = make({{0.0}, {0.1}, {0.2}, {0.8}, {0.9}, {1.0}}, {0, 0, 0, 1, 1, 1});
  const AdaBoostModel m = adaboost_train(ds, 100, 2);
  EXPECT_EQ(m.size(), 1u);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(m.predict(ds.row(i)), ds.labels[i]);
}

TEST(AdaBoost, WeakDataBuildsWeightedEnsemble) {
  const Dataset ds = synthetic::banana(300, 6);
  const AdaBoostModel m = adaboost_train(ds, 20, 3);
  EXPECT_GE(m.size(), 1u);
  EXPECT_LE(m.size(), 20u);
  for (double a : m.alphas) EXPECT_GT(a, 0.0);
}

TEST(AdaBoost, HalfErrorRoundStopsTraining) {
  // Identical inputs with alternating labels: any learner predicts one class
  // everywhere, so the first round has error exactly 0.5 and training stops.
  // The discarded learner is kept unweighted so the model can still predict.
  const Dataset ds = make({{0.5}, {0.5}, {0.5}, {0.5}}, {0, 1, 0, 1});
  const AdaBoostModel m = adaboost_train(ds, 50, 5);
  EXPECT_EQ(m.size(), 1u);
  EXPECT_DOUBLE_EQ(m.alphas[0], 1.0);
}
