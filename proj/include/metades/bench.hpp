#pragma once

// Benchmark harness: replicated protocol runs, parameter sweeps, significance
// tests and report tables.
//
// A cell is one (dataset, replication). Each cell gets its own seed, split,
// scaler and pool, and every technique in the cell is evaluated on that same
// pool and test partition.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "metades/baselines.hpp"
#include "metades/dataset.hpp"
#include "metades/error.hpp"
#include "metades/linear.hpp"
#include "metades/metades.hpp"
#include "metades/random.hpp"
#include "metades/stats.hpp"
#include "metades/synthetic.hpp"

namespace metades::bench {

inline const std::vector<std::string>& known_techniques() {
  static const std::vector<std::string> names = {"metades", "knora-e",     "knora-u", "ola",
                                                 "lca",     "mla",         "mcb",     "knop",
                                                 "single-best", "bagging", "adaboost", "static-selection",
                                                 "oracle"};
  return names;
}

struct RunParams {
  std::size_t k = 7;
  std::size_t kp = 5;
  double h_c = 0.70;
  std::size_t pool_size = 100;        // M
  std::size_t epochs = 100;           // perceptron epochs
  std::size_t adaboost_rounds = 100;
  bool selector_split_by_query = false;
  baselines::Options baselines;
};

struct RunConfig {
  std::vector<std::string> datasets;
  std::vector<std::string> techniques = known_techniques();
  std::size_t replications = 20;
  RunParams params;
  std::uint64_t seed_base = 1;
  std::filesystem::path output_dir = "results";
  std::filesystem::path data_dir = "data";
  std::size_t threads = 1;
  bool resume = true;

  void validate() const {
    if (datasets.empty()) throw invalid_argument("config lists no datasets");
    if (techniques.empty()) throw invalid_argument("config lists no techniques");
    if (replications < 1) throw invalid_argument("replications must be at least 1");
    const auto& known = known_techniques();
    for (const auto& t : techniques)
      if (std::find(known.begin(), known.end(), t) == known.end())
        throw invalid_argument("unknown technique '" + t + "'");
    if (params.k < 1 || params.kp < 1 || params.pool_size < 2) throw invalid_argument("bad K, Kp or M");
  }

  // Fields that determine the records (used to guard resumed runs).
  nlohmann::json fingerprint() const {
    return {{"datasets", datasets},
            {"techniques", techniques},
            {"replications", replications},
            {"seed_base", seed_base},
            {"params",
             {{"K", params.k},
              {"Kp", params.kp},
              {"h_C", params.h_c},
              {"M", params.pool_size},
              {"epochs", params.epochs},
              {"adaboost_rounds", params.adaboost_rounds},
              {"selector_split_by_query", params.selector_split_by_query},
              {"knop_kp", params.baselines.kp},
              {"mcb_similarity", params.baselines.mcb_similarity},
              {"mcb_threshold", params.baselines.mcb_threshold}}}};
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
      c.datasets = j.at("datasets").get<std::vector<std::string>>();
      if (j.contains("techniques")) c.techniques = j.at("techniques").get<std::vector<std::string>>();
      c.replications = j.value("replications", c.replications);
      c.seed_base = j.value("seed_base", c.seed_base);
      if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
      if (j.contains("data_dir")) c.data_dir = j.at("data_dir").get<std::string>();
      c.threads = j.value("threads", c.threads);
      c.resume = j.value("resume", c.resume);
      if (j.contains("params")) {
        const auto& p = j.at("params");
        c.params.k = p.value("K", c.params.k);
        c.params.kp = p.value("Kp", c.params.kp);
        c.params.h_c = p.value("h_C", c.params.h_c);
        c.params.pool_size = p.value("M", c.params.pool_size);
        c.params.epochs = p.value("epochs", c.params.epochs);
        c.params.adaboost_rounds = p.value("adaboost_rounds", c.params.adaboost_rounds);
        c.params.selector_split_by_query = p.value("selector_split_by_query", c.params.selector_split_by_query);
        c.params.baselines.k = c.params.k;
        c.params.baselines.kp = p.value("knop_kp", c.params.baselines.kp);
        c.params.baselines.mcb_similarity = p.value("mcb_similarity", c.params.baselines.mcb_similarity);
        c.params.baselines.mcb_threshold = p.value("mcb_threshold", c.params.baselines.mcb_threshold);
      }
    } catch (const nlohmann::json::exception& e) {
      throw invalid_argument(std::string("bad run config: ") + e.what());
    }
    c.validate();
    return c;
  }

  static RunConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open config '" + path.string() + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw invalid_argument("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    RunConfig c = from_json(j);
    // Relative paths in the config are taken relative to the config file.
    const auto base = path.parent_path();
    if (c.output_dir.is_relative() && j.contains("output_dir")) c.output_dir = base / c.output_dir;
    if (c.data_dir.is_relative() && j.contains("data_dir")) c.data_dir = base / c.data_dir;
    return c;
  }
};

struct RunRecord {
  std::string dataset;
  std::string technique;
  std::size_t replication = 0;
  double accuracy = 0.0;
  double ensemble_size_mean = 0.0;
  double wall_time = 0.0;  // seconds
  std::uint64_t pool_hash = 0;
};

inline constexpr const char* kRecordHeader = "dataset,technique,replication,accuracy,ensemble_size_mean,wall_time,pool_hash";

inline std::string format_record(const RunRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, ",%zu,%.17g,%.17g,%.6f,%016llx", r.replication, r.accuracy, r.ensemble_size_mean,
                r.wall_time, static_cast<unsigned long long>(r.pool_hash));
  return r.dataset + ',' + r.technique + buf;
}

inline std::vector<RunRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open records '" + path.string() + "'");
  std::vector<RunRecord> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (row == 1 && line.rfind("dataset,", 0) == 0)) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw parse_error(row, "expected 7 fields, found " + std::to_string(f.size()));
    try {
      RunRecord r;
      r.dataset = f[0];
      r.technique = f[1];
      r.replication = std::stoul(f[2]);
      r.accuracy = std::stod(f[3]);
      r.ensemble_size_mean = std::stod(f[4]);
      r.wall_time = std::stod(f[5]);
      r.pool_hash = std::stoull(f[6], nullptr, 16);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw parse_error(row, "malformed numeric field");
    }
  }
  return out;
}

inline void log_line(const std::string& msg) {
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << msg << std::endl;
}

// ---------------------------------------------------------------------------
// Cell preparation

inline Dataset load_dataset(const std::string& name, const std::filesystem::path& data_dir) {
  if (std::filesystem::exists(data_dir / "manifest.json")) {
    Registry reg(data_dir);
    if (reg.contains(name)) {
      Dataset ds = reg.load(name);
      ds.name = name;
      return ds;
    }
  }
  Dataset ds;
  if (synthetic::generate(name, ds)) return ds;
  throw error("dataset '" + name + "' is neither in the registry at '" + data_dir.string() +
              "' nor a synthetic generator");
}

inline std::uint64_t cell_seed(std::uint64_t seed_base, const std::string& dataset, std::size_t replication) {
  return derive_seed(derive_seed(seed_base, fnv1a(dataset)), replication);
}

struct Cell {
  Split split;  // scaled
  Pool pool;
  MinMaxScaler scaler;
  std::uint64_t seed = 0;
};

// Seeded split, min-max scaling fitted on the two training partitions, and a
// bagged pool trained on the pool-training partition.
inline Cell prepare_cell(const Dataset& ds, const RunParams& params, std::uint64_t seed) {
  Cell c;
  c.seed = seed;
  SplitSpec spec;
  spec.seed = derive_seed(seed, 0);
  c.split = stratified_split(ds, spec);
  Matrix fit_rows(static_cast<Eigen::Index>(c.split.train.size() + c.split.meta_train.size()),
                  static_cast<Eigen::Index>(ds.dim()));
  fit_rows << c.split.train.features, c.split.meta_train.features;
  c.scaler.fit(fit_rows);
  for (Dataset* part : {&c.split.train, &c.split.meta_train, &c.split.dsel, &c.split.test})
    c.scaler.transform_in_place(part->features);
  PerceptronOptions popts;
  popts.epochs = params.epochs;
  c.pool = bagging_generate(c.split.train, params.pool_size, derive_seed(seed, 1), popts);
  return c;
}

inline MetaDesParams metades_params(const RunParams& p) {
  MetaDesParams m;
  m.k = p.k;
  m.kp = p.kp;
  m.consensus_threshold = p.h_c;
  m.selector.split_by_query = p.selector_split_by_query;
  return m;
}

struct Score {
  double accuracy = 0.0;
  double ensemble_size_mean = 0.0;
};

// Evaluates every requested technique on one prepared cell, in the order given.
inline std::vector<RunRecord> evaluate_cell(const Cell& cell, const std::string& dataset, std::size_t replication,
                                            const std::vector<std::string>& techniques, const RunParams& params) {
  using clock = std::chrono::steady_clock;
  const Split& s = cell.split;
  const Pool& pool = cell.pool;
  const std::uint64_t pool_hash = pool.hash();
  const double n_test = static_cast<double>(s.test.size());

  // Shared DES state, built lazily.
  std::optional<ReferenceTables> tables;
  std::vector<baselines::Query> queries;
  baselines::Options bopts = params.baselines;
  bopts.k = params.k;
  auto des_context = [&]() -> baselines::Context {
    if (!tables) {
      tables = build_reference_tables(s.dsel, pool);
      baselines::Context ctx{pool, s.dsel, *tables, bopts};
      for (std::size_t j = 0; j < s.test.size(); ++j) queries.push_back(baselines::make_query(ctx, s.test.row(j)));
    }
    return {pool, s.dsel, *tables, bopts};
  };
  std::optional<baselines::StaticEnsembles> statics;
  auto static_fit = [&]() -> const baselines::StaticEnsembles& {
    if (!statics) statics = baselines::fit_static(pool, s.dsel);
    return *statics;
  };
  auto vote_accuracy = [&](const std::vector<std::size_t>& members) {
    std::size_t ok = 0;
    for (std::size_t j = 0; j < s.test.size(); ++j) {
      const auto x = s.test.row(j);
      ok += majority_vote(pool, members, pool.predict_all(x), x).label == s.test.labels[j];
    }
    return static_cast<double>(ok) / n_test;
  };

  std::vector<RunRecord> out;
  for (const auto& name : techniques) {
    const auto t0 = clock::now();
    Score score;
    if (name == "metades") {
      const MetaDes model = MetaDes::fit(pool, s.meta_train, s.dsel, metades_params(params), derive_seed(cell.seed, 2));
      const Evaluation ev = model.evaluate(s.test);
      score = {ev.accuracy, ev.mean_selected};
    } else if (auto t = baselines::technique_from_name(name)) {
      const baselines::Context ctx = des_context();
      std::size_t ok = 0, selected = 0;
      for (std::size_t j = 0; j < queries.size(); ++j) {
        const baselines::Selection sel = baselines::run(*t, ctx, queries[j]);
        ok += sel.label == s.test.labels[j];
        selected += sel.selected.size();
      }
      score = {static_cast<double>(ok) / n_test, static_cast<double>(selected) / n_test};
    } else if (name == "single-best") {
      const std::size_t best = static_fit().single_best;
      score = {accuracy(pool[best], s.test), 1.0};
    } else if (name == "bagging") {
      std::vector<std::size_t> all(pool.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      score = {vote_accuracy(all), static_cast<double>(pool.size())};
    } else if (name == "static-selection") {
      const auto& members = static_fit().static_selection;
      score = {vote_accuracy(members), static_cast<double>(members.size())};
    } else if (name == "adaboost") {
      PerceptronOptions popts;
      popts.epochs = params.epochs;
      const AdaBoostModel ada = adaboost_train(s.train, params.adaboost_rounds, derive_seed(cell.seed, 3), popts);
      std::size_t ok = 0;
      for (std::size_t j = 0; j < s.test.size(); ++j) ok += ada.predict(s.test.row(j)) == s.test.labels[j];
      score = {static_cast<double>(ok) / n_test, static_cast<double>(ada.size())};
    } else if (name == "oracle") {
      score = {baselines::oracle_accuracy(pool, s.test), 1.0};
    } else {
      throw invalid_argument("unknown technique '" + name + "'");
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    out.push_back({dataset, name, replication, score.accuracy, score.ensemble_size_mean, secs, pool_hash});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Protocol run

struct RunSummary {
  std::size_t cells = 0;
  std::size_t skipped = 0;  // already present when resuming
  std::size_t failed = 0;
  std::filesystem::path records;
};

// Runs every cell, appending each completed cell's records to
// <output_dir>/records.csv in cell order. Failed cells are logged to
// failures.log and skipped. With resume on, cells already in records.csv are
// not recomputed.
inline RunSummary run_protocol(const RunConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const fs::path records_path = cfg.output_dir / "records.csv";
  const fs::path snapshot_path = cfg.output_dir / "config.json";

  std::set<std::pair<std::string, std::size_t>> done;
  const bool resuming = cfg.resume && fs::exists(records_path);
  if (resuming) {
    if (fs::exists(snapshot_path)) {
      std::ifstream in(snapshot_path);
      nlohmann::json prev;
      in >> prev;
      if (prev != cfg.fingerprint())
        throw error("'" + cfg.output_dir.string() +
                    "' holds records from a different configuration; choose another output_dir or set resume=false");
    }
    std::map<std::pair<std::string, std::size_t>, std::set<std::string>> seen;
    for (const auto& r : read_records(records_path)) seen[{r.dataset, r.replication}].insert(r.technique);
    for (const auto& [key, techs] : seen)
      if (std::all_of(cfg.techniques.begin(), cfg.techniques.end(), [&](const auto& t) { return techs.count(t); }))
        done.insert(key);
  } else {
    std::ofstream(records_path) << kRecordHeader << '\n';
  }
  std::ofstream(snapshot_path) << cfg.fingerprint().dump(1) << '\n';

  std::vector<Dataset> data;
  for (const auto& name : cfg.datasets) data.push_back(load_dataset(name, cfg.data_dir));

  struct Job {
    std::size_t dataset, replication;
  };
  std::vector<Job> jobs;
  RunSummary summary;
  summary.records = records_path;
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d)
    for (std::size_t r = 0; r < cfg.replications; ++r) {
      if (done.count({cfg.datasets[d], r})) {
        ++summary.skipped;
        continue;
      }
      jobs.push_back({d, r});
    }

  // Results are parked until every earlier job has finished, so the file order
  // does not depend on scheduling.
  std::mutex mu;
  std::vector<std::optional<std::vector<RunRecord>>> results(jobs.size());
  std::vector<char> finished(jobs.size(), 0);
  std::size_t next_to_write = 0;
  std::ofstream records(records_path, std::ios::app);
  std::ofstream failures;

  auto complete = [&](std::size_t idx, std::optional<std::vector<RunRecord>> recs, const std::string& err) {
    std::lock_guard lock(mu);
    results[idx] = std::move(recs);
    finished[idx] = 1;
    if (!err.empty()) {
      if (!failures.is_open()) failures.open(cfg.output_dir / "failures.log", std::ios::app);
      failures << cfg.datasets[jobs[idx].dataset] << ',' << jobs[idx].replication << ',' << err << '\n';
      failures.flush();
      ++summary.failed;
    }
    while (next_to_write < jobs.size() && finished[next_to_write]) {
      if (results[next_to_write]) {
        for (const auto& r : *results[next_to_write]) records << format_record(r) << '\n';
        records.flush();
        results[next_to_write].reset();
        ++summary.cells;
      }
      ++next_to_write;
    }
  };

  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t idx; (idx = cursor.fetch_add(1)) < jobs.size();) {
      const Job job = jobs[idx];
      const std::string& name = cfg.datasets[job.dataset];
      try {
        const Cell cell = prepare_cell(data[job.dataset], cfg.params, cell_seed(cfg.seed_base, name, job.replication));
        auto recs = evaluate_cell(cell, name, job.replication, cfg.techniques, cfg.params);
        log_line(name + " replication " + std::to_string(job.replication) + " done");
        complete(idx, std::move(recs), "");
      } catch (const std::exception& e) {
        log_line(name + " replication " + std::to_string(job.replication) + " failed: " + e.what());
        complete(idx, std::nullopt, e.what());
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(cfg.threads, jobs.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Parameter sweeps (evaluated leave-one-out on DSEL)

enum class SweepParam { h_c, kp };

inline SweepParam sweep_param_from_name(const std::string& s) {
  if (s == "h_c" || s == "hc" || s == "h_C") return SweepParam::h_c;
  if (s == "kp" || s == "Kp") return SweepParam::kp;
  throw invalid_argument("unknown sweep parameter '" + s + "' (expected h_c or kp)");
}

inline std::vector<double> sweep_grid(SweepParam p) {
  if (p == SweepParam::h_c) return {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> g;
  for (int v = 1; v <= 10; ++v) g.push_back(v);
  return g;
}

struct SweepPoint {
  std::string dataset;
  double value = 0.0;
  std::vector<double> accuracies;  // one per replication that produced a model
  std::vector<std::string> failures;
};

// The h_C sweep runs with Kp = 1; the Kp sweep uses the configured h_C.
inline std::vector<SweepPoint> sweep(const RunConfig& cfg, SweepParam param) {
  cfg.validate();
  const std::vector<double> grid = sweep_grid(param);
  std::vector<SweepPoint> out;
  for (const auto& name : cfg.datasets) {
    const Dataset ds = load_dataset(name, cfg.data_dir);
    const std::size_t first = out.size();
    for (double v : grid) out.push_back({name, v, {}, {}});

    std::mutex mu;
    std::vector<std::vector<std::optional<double>>> acc(cfg.replications,
                                                        std::vector<std::optional<double>>(grid.size()));
    std::vector<std::vector<std::string>> errs(cfg.replications, std::vector<std::string>(grid.size()));
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
      for (std::size_t r; (r = cursor.fetch_add(1)) < cfg.replications;) {
        try {
          const Cell cell = prepare_cell(ds, cfg.params, cell_seed(cfg.seed_base, name, r));
          for (std::size_t g = 0; g < grid.size(); ++g) {
            MetaDesParams mp = metades_params(cfg.params);
            if (param == SweepParam::h_c) {
              mp.consensus_threshold = grid[g];
              mp.kp = 1;
            } else {
              mp.kp = static_cast<std::size_t>(grid[g]);
            }
            try {
              const MetaDes model =
                  MetaDes::fit(cell.pool, cell.split.meta_train, cell.split.dsel, mp, derive_seed(cell.seed, 2));
              acc[r][g] = model.dsel_accuracy();
            } catch (const std::exception& e) {
              errs[r][g] = e.what();
            }
          }
          log_line(name + " sweep replication " + std::to_string(r) + " done");
        } catch (const std::exception& e) {
          std::lock_guard lock(mu);
          for (auto& s : errs[r]) s = e.what();
        }
      }
    };
    const std::size_t n_threads = std::max<std::size_t>(1, std::min(cfg.threads, cfg.replications));
    std::vector<std::thread> workers;
    for (std::size_t t = 1; t < n_threads; ++t) workers.emplace_back(worker);
    worker();
    for (auto& t : workers) t.join();

    for (std::size_t r = 0; r < cfg.replications; ++r)
      for (std::size_t g = 0; g < grid.size(); ++g) {
        if (acc[r][g]) out[first + g].accuracies.push_back(*acc[r][g]);
        if (!errs[r][g].empty()) out[first + g].failures.push_back(errs[r][g]);
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report

// "85.00(7.07)": percent mean and sample std, two decimals.
inline std::string format_mean_std(double mean_value, double std_value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f(%.2f)", 100.0 * mean_value, 100.0 * std_value);
  return buf;
}

struct CellStats {
  std::vector<double> accuracies;
  double mean = 0.0;
  double std = 0.0;
};

struct Summary {
  std::vector<std::string> datasets;    // first-appearance order
  std::vector<std::string> techniques;  // first-appearance order
  std::map<std::pair<std::string, std::string>, CellStats> cells;

  const CellStats* find(const std::string& d, const std::string& t) const {
    const auto it = cells.find({d, t});
    return it == cells.end() ? nullptr : &it->second;
  }

  // Techniques whose mean equals the row maximum.
  std::vector<std::string> best(const std::string& d) const {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& t : techniques)
      if (const auto* c = find(d, t)) top = std::max(top, c->mean);
    std::vector<std::string> out;
    for (const auto& t : techniques)
      if (const auto* c = find(d, t); c && c->mean == top) out.push_back(t);
    return out;
  }
};

inline Summary summarize(const std::vector<RunRecord>& records) {
  Summary s;
  for (const auto& r : records) {
    if (std::find(s.datasets.begin(), s.datasets.end(), r.dataset) == s.datasets.end()) s.datasets.push_back(r.dataset);
    if (std::find(s.techniques.begin(), s.techniques.end(), r.technique) == s.techniques.end())
      s.techniques.push_back(r.technique);
    s.cells[{r.dataset, r.technique}].accuracies.push_back(r.accuracy);
  }
  for (auto& [key, c] : s.cells) {
    c.mean = mean(c.accuracies);
    c.std = sample_std(c.accuracies);
  }
  return s;
}

struct Comparison {
  KruskalWallis test;
  std::size_t n_a = 0, n_b = 0;
  double mean_a = 0.0, mean_b = 0.0;
};

// Kruskal-Wallis between two techniques' replication accuracies on one dataset.
inline Comparison significance(const std::vector<RunRecord>& records, const std::string& a, const std::string& b,
                               const std::string& dataset, double alpha = 0.05) {
  std::vector<double> xa, xb;
  for (const auto& r : records) {
    if (r.dataset != dataset) continue;
    if (r.technique == a) xa.push_back(r.accuracy);
    if (r.technique == b) xb.push_back(r.accuracy);
  }
  if (xa.size() < 3 || xb.size() < 3)
    throw invalid_argument("significance on '" + dataset + "' needs at least 3 records per technique (" + a + ": " +
                           std::to_string(xa.size()) + ", " + b + ": " + std::to_string(xb.size()) + ")");
  return {kruskal_wallis(xa, xb, alpha), xa.size(), xb.size(), mean(xa), mean(xb)};
}

// Writes summary.csv (full precision) and summary.txt (formatted table).
// Best-in-row cells are wrapped in brackets. When `reference` is present, the
// other cells carry "+" / "-" if significantly better / worse than it.
inline void write_report(const Summary& s, const std::filesystem::path& dir, const std::string& reference = "metades",
                         double alpha = 0.05) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "summary.csv");
    if (!csv) throw error("cannot write summary.csv in '" + dir.string() + "'");
    csv << "dataset,technique,n,mean,std\n";
    char buf[96];
    for (const auto& d : s.datasets)
      for (const auto& t : s.techniques)
        if (const auto* c = s.find(d, t)) {
          std::snprintf(buf, sizeof buf, ",%zu,%.17g,%.17g", c->accuracies.size(), c->mean, c->std);
          csv << d << ',' << t << buf << '\n';
        }
  }

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"dataset"});
  for (const auto& t : s.techniques) rows[0].push_back(t);
  const bool has_ref = std::find(s.techniques.begin(), s.techniques.end(), reference) != s.techniques.end();
  for (const auto& d : s.datasets) {
    std::vector<std::string> row{d};
    const auto best = s.best(d);
    const auto* ref = has_ref ? s.find(d, reference) : nullptr;
    for (const auto& t : s.techniques) {
      const auto* c = s.find(d, t);
      if (!c) {
        row.push_back("-");
        continue;
      }
      std::string cell = format_mean_std(c->mean, c->std);
      if (std::find(best.begin(), best.end(), t) != best.end()) cell = "[" + cell + "]";
      if (ref && t != reference && c->accuracies.size() >= 3 && ref->accuracies.size() >= 3) {
        const KruskalWallis kw = kruskal_wallis(c->accuracies, ref->accuracies, alpha);
        if (kw.significant) cell += c->mean > ref->mean ? "+" : "-";
      }
      row.push_back(std::move(cell));
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());

  std::ofstream txt(dir / "summary.txt");
  if (!txt) throw error("cannot write summary.txt in '" + dir.string() + "'");
  txt << "Accuracy, mean(std) in percent over replications (sample std)\n\n";
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      txt << r[c] << std::string(width[c] - r[c].size(), ' ');
      txt << (c + 1 < r.size() ? "  " : "\n");
    }
  }
  txt << "\n[x] best mean in row.\n";
  if (has_ref)
    txt << "+ / - significantly better / worse than " << reference << " (two-group Kruskal-Wallis, p < " << alpha
        << ", at least 3 replications per group).\n";
  txt << "No multiple-comparison correction is applied.\n";
}

}  // namespace metades::bench
