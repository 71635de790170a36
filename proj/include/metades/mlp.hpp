#pragma once

// The competence selector: a one-hidden-layer sigmoid MLP with a single
// sigmoid output, trained on sum-of-squared errors with Levenberg-Marquardt
// and validation-based early stopping.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "metades/error.hpp"
#include "metades/meta_features.hpp"
#include "metades/random.hpp"

namespace metades {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Parameters are one flat vector laid out as
//   [ W1 (hidden x inputs, row-major) | b1 (hidden) | w2 (hidden) | b2 ].
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::size_t inputs, std::size_t hidden)
      : inputs_(inputs), hidden_(hidden), params_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(param_count(inputs, hidden)))) {}

  static std::size_t param_count(std::size_t inputs, std::size_t hidden) { return hidden * (inputs + 1) + hidden + 1; }

  std::size_t inputs() const { return inputs_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t size() const { return static_cast<std::size_t>(params_.size()); }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& params() { return params_; }

  // Uniform in [-0.5, 0.5] scaled by 1/sqrt(fan-in).
  void randomize(rng_t& rng) {
    const double s1 = 1.0 / std::sqrt(static_cast<double>(inputs_ + 1));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_ + 1));
    const std::size_t first_layer = hidden_ * (inputs_ + 1);
    for (std::size_t p = 0; p < size(); ++p)
      params_[static_cast<Eigen::Index>(p)] = uniform(rng, -0.5, 0.5) * (p < first_layer ? s1 : s2);
  }

  double forward(std::span<const double> x) const { return forward(x, params_); }

  double forward(std::span<const double> x, const Eigen::VectorXd& theta) const {
    const double* w1 = theta.data();
    const double* b1 = w1 + hidden_ * inputs_;
    const double* w2 = b1 + hidden_;
    double z = w2[hidden_];
    for (std::size_t k = 0; k < hidden_; ++k) {
      double a = b1[k];
      const double* row = w1 + k * inputs_;
      for (std::size_t j = 0; j < inputs_; ++j) a += row[j] * x[j];
      z += w2[k] * sigmoid(a);
    }
    return sigmoid(z);
  }

  // Output and d(output)/d(theta) for one input.
  double gradient(std::span<const double> x, const Eigen::VectorXd& theta, std::span<double> grad) const {
    const double* w1 = theta.data();
    const double* b1 = w1 + hidden_ * inputs_;
    const double* w2 = b1 + hidden_;
    thread_local std::vector<double> h;
    h.resize(hidden_);
    double z = w2[hidden_];
    for (std::size_t k = 0; k < hidden_; ++k) {
      double a = b1[k];
      const double* row = w1 + k * inputs_;
      for (std::size_t j = 0; j < inputs_; ++j) a += row[j] * x[j];
      h[k] = sigmoid(a);
      z += w2[k] * h[k];
    }
    const double y = sigmoid(z);
    const double dy = y * (1.0 - y);
    double* g_w1 = grad.data();
    double* g_b1 = g_w1 + hidden_ * inputs_;
    double* g_w2 = g_b1 + hidden_;
    for (std::size_t k = 0; k < hidden_; ++k) {
      const double dh = dy * w2[k] * h[k] * (1.0 - h[k]);
      double* row = g_w1 + k * inputs_;
      for (std::size_t j = 0; j < inputs_; ++j) row[j] = dh * x[j];
      g_b1[k] = dh;
      g_w2[k] = dy * h[k];
    }
    g_w2[hidden_] = dy;
    return y;
  }

  nlohmann::json to_json() const {
    return {{"inputs", inputs_}, {"hidden", hidden_}, {"params", std::vector<double>(params_.begin(), params_.end())}};
  }

  static Mlp from_json(const nlohmann::json& j) {
    Mlp m(j.at("inputs").get<std::size_t>(), j.at("hidden").get<std::size_t>());
    const auto p = j.at("params").get<std::vector<double>>();
    if (p.size() != m.size()) throw invalid_argument("MLP parameter count mismatch");
    m.params_ = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    return m;
  }

 private:
  std::size_t inputs_ = 0, hidden_ = 0;
  Eigen::VectorXd params_;
};

// Rows of (inputs, 0/1 target) used for LM fitting.
struct RegressionSet {
  Matrix x;
  Eigen::VectorXd t;

  std::size_t size() const { return static_cast<std::size_t>(t.size()); }
  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(x.cols())};
  }
};

struct LmOptions {
  std::size_t max_epochs = 100;
  std::size_t patience = 5;  // epochs without validation improvement before stopping
  double mu_initial = 1e-3;
  double mu_decrease = 0.1;
  double mu_increase = 10.0;
  double mu_max = 1e10;
  double min_gradient = 1e-10;
  std::size_t chunk_rows = 512;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_sse = 0.0;
  double validation_mse = 0.0;
  double mu = 0.0;
};

enum class StopReason { max_epochs, early_stop, mu_limit, small_gradient };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::max_epochs: return "max_epochs";
    case StopReason::early_stop: return "early_stop";
    case StopReason::mu_limit: return "mu_limit";
    case StopReason::small_gradient: return "small_gradient";
  }
  return "?";
}

struct LmResult {
  std::vector<EpochLog> log;  // entry 0 is the initial network
  std::size_t best_epoch = 0;
  StopReason stop = StopReason::max_epochs;
};

inline double sum_squared_error(const Mlp& net, const Eigen::VectorXd& theta, const RegressionSet& data) {
  double sse = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const double r = net.forward(data.row(s), theta) - data.t[static_cast<Eigen::Index>(s)];
    sse += r * r;
  }
  return sse;
}

// Accumulates J^T J and J^T r over the data in row chunks, where J is the
// Jacobian of the residuals r = y - t with respect to theta.
inline void gauss_newton_terms(const Mlp& net, const Eigen::VectorXd& theta, const RegressionSet& data,
                               std::size_t chunk_rows, Eigen::MatrixXd& jtj, Eigen::VectorXd& jtr) {
  const auto p = static_cast<Eigen::Index>(net.size());
  jtj.setZero(p, p);
  jtr.setZero(p);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> jac;
  Eigen::VectorXd res;
  for (std::size_t start = 0; start < data.size(); start += chunk_rows) {
    const std::size_t rows = std::min(chunk_rows, data.size() - start);
    jac.resize(static_cast<Eigen::Index>(rows), p);
    res.resize(static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
      const auto rr = static_cast<Eigen::Index>(r);
      const double y = net.gradient(data.row(start + r), theta, {jac.data() + r * static_cast<std::size_t>(p), static_cast<std::size_t>(p)});
      res[rr] = y - data.t[static_cast<Eigen::Index>(start + r)];
    }
    jtj.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
    jtr.noalias() += jac.transpose() * res;
  }
  jtj.triangularView<Eigen::StrictlyUpper>() = jtj.transpose();
}

// Levenberg-Marquardt on SSE. mu shrinks after an accepted step and grows
// after a rejected one; training stops after `patience` epochs without a
// validation improvement and the best-validation parameters are restored.
inline LmResult train_lm(Mlp& net, const RegressionSet& train, const RegressionSet& validation,
                         const LmOptions& opts = {}) {
  LmResult result;
  auto validation_mse = [&](const Eigen::VectorXd& theta) {
    if (validation.size() == 0) return 0.0;
    return sum_squared_error(net, theta, validation) / static_cast<double>(validation.size());
  };

  Eigen::VectorXd theta = net.params();
  double sse = sum_squared_error(net, theta, train);
  double mu = opts.mu_initial;
  double best_val = validation_mse(theta);
  Eigen::VectorXd best_theta = theta;
  result.log.push_back({0, sse, best_val, mu});
  std::size_t stale = 0;

  Eigen::MatrixXd jtj, a;
  Eigen::VectorXd jtr;
  for (std::size_t epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    gauss_newton_terms(net, theta, train, opts.chunk_rows, jtj, jtr);
    if (jtr.lpNorm<Eigen::Infinity>() < opts.min_gradient) {
      result.stop = StopReason::small_gradient;
      break;
    }
    bool accepted = false;
    while (mu <= opts.mu_max) {
      a = jtj;
      a.diagonal().array() += mu;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
      if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd step = ldlt.solve(-jtr);
        if (step.allFinite()) {
          Eigen::VectorXd candidate = theta + step;
          const double cand_sse = sum_squared_error(net, candidate, train);
          if (cand_sse < sse) {
            theta = std::move(candidate);
            sse = cand_sse;
            mu *= opts.mu_decrease;
            accepted = true;
            break;
          }
        }
      }
      mu *= opts.mu_increase;
    }
    if (!accepted) {
      result.stop = StopReason::mu_limit;
      break;
    }
    const double val = validation_mse(theta);
    result.log.push_back({epoch, sse, val, mu});
    if (val < best_val) {
      best_val = val;
      best_theta = theta;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= opts.patience) {
      result.stop = StopReason::early_stop;
      break;
    }
  }
  net.params() = best_theta;
  return result;
}

// ---------------------------------------------------------------------------

struct Competence {
  bool competent = false;
  double confidence = 0.0;  // raw network output in (0, 1)
};

struct MetaClassifierOptions {
  std::size_t hidden = 10;
  double validation_fraction = 0.25;
  std::size_t min_samples = 40;
  // Hold out whole meta-training queries instead of individual meta-samples,
  // so validation never sees a query whose other meta-samples were trained on.
  bool split_by_query = false;
  LmOptions lm;
};

class MetaClassifier {
 public:
  MetaClassifier() = default;
  explicit MetaClassifier(Mlp net) : net_(std::move(net)) {}

  std::size_t input_dim() const { return net_.inputs(); }
  const Mlp& network() const { return net_; }
  const LmResult& training() const { return training_; }

  // Competent iff the output is at least 0.5.
  Competence operator()(std::span<const double> v) const {
    if (v.size() != net_.inputs())
      throw invalid_argument("meta-feature vector has " + std::to_string(v.size()) + " entries, selector expects " +
                             std::to_string(net_.inputs()));
    const double y = net_.forward(v);
    return {y >= 0.5, y};
  }

  Competence is_competent(std::span<const double> v) const { return (*this)(v); }

  static MetaClassifier train(std::span<const MetaSample> samples, std::uint64_t seed,
                              const MetaClassifierOptions& opts = {}) {
    if (samples.size() < opts.min_samples)
      throw invalid_argument("meta-training set has " + std::to_string(samples.size()) + " samples, need " +
                             std::to_string(opts.min_samples));
    const std::size_t dim = samples.front().features.size();
    std::vector<std::size_t> by_class[2];
    for (std::size_t s = 0; s < samples.size(); ++s) {
      if (samples[s].features.size() != dim) throw invalid_argument("meta-samples of different lengths");
      by_class[samples[s].competent ? 1 : 0].push_back(s);
    }
    if (by_class[0].empty() || by_class[1].empty())
      throw invalid_argument("meta-training set contains a single competence class");

    rng_t rng(seed);
    std::vector<std::size_t> train_idx, val_idx;
    if (opts.split_by_query) {
      std::vector<std::size_t> queries;
      for (const auto& sm : samples) queries.push_back(sm.query_index);
      std::sort(queries.begin(), queries.end());
      queries.erase(std::unique(queries.begin(), queries.end()), queries.end());
      shuffle(std::span<std::size_t>(queries), rng);
      const auto n_val = static_cast<std::size_t>(std::floor(opts.validation_fraction * static_cast<double>(queries.size()) + 0.5));
      std::vector<std::size_t> held(queries.begin(), queries.begin() + static_cast<std::ptrdiff_t>(n_val));
      std::sort(held.begin(), held.end());
      for (std::size_t s = 0; s < samples.size(); ++s)
        (std::binary_search(held.begin(), held.end(), samples[s].query_index) ? val_idx : train_idx).push_back(s);
    } else {
      // Stratified train/validation split on the competence label.
      for (auto& cls : by_class) {
        shuffle(std::span<std::size_t>(cls), rng);
        const auto n_val = static_cast<std::size_t>(std::floor(opts.validation_fraction * static_cast<double>(cls.size()) + 0.5));
        val_idx.insert(val_idx.end(), cls.begin(), cls.begin() + static_cast<std::ptrdiff_t>(n_val));
        train_idx.insert(train_idx.end(), cls.begin() + static_cast<std::ptrdiff_t>(n_val), cls.end());
      }
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    auto pack = [&](const std::vector<std::size_t>& idx) {
      RegressionSet r;
      r.x.resize(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(dim));
      r.t.resize(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& f = samples[idx[k]].features;
        for (std::size_t c = 0; c < dim; ++c) r.x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = f[c];
        r.t[static_cast<Eigen::Index>(k)] = samples[idx[k]].competent;
      }
      return r;
    };
    const RegressionSet train_set = pack(train_idx);
    const RegressionSet val_set = pack(val_idx);

    Mlp net(dim, opts.hidden);
    net.randomize(rng);
    MetaClassifier mc(std::move(net));
    mc.training_ = train_lm(mc.net_, train_set, val_set, opts.lm);
    return mc;
  }

  nlohmann::json to_json() const {
    nlohmann::json log = nlohmann::json::array();
    for (const auto& e : training_.log)
      log.push_back({{"epoch", e.epoch}, {"train_sse", e.train_sse}, {"validation_mse", e.validation_mse}, {"mu", e.mu}});
    return {{"network", net_.to_json()},
            {"training_log", log},
            {"best_epoch", training_.best_epoch},
            {"stop", to_string(training_.stop)}};
  }

  static MetaClassifier from_json(const nlohmann::json& j) {
    MetaClassifier mc(Mlp::from_json(j.at("network")));
    if (j.contains("training_log"))
      for (const auto& e : j.at("training_log"))
        mc.training_.log.push_back({e.at("epoch").get<std::size_t>(), e.at("train_sse").get<double>(),
                                    e.at("validation_mse").get<double>(), e.at("mu").get<double>()});
    mc.training_.best_epoch = j.value("best_epoch", std::size_t{0});
    return mc;
  }

 private:
  Mlp net_;
  LmResult training_;
};

}  // namespace metades
