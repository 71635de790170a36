// Command-line front end: protocol runs, sweeps, reports, significance tests,
// and single-model train/classify.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "metades/bench.hpp"
#include "metades/dataset.hpp"
#include "metades/metades.hpp"

namespace fs = std::filesystem;
using namespace metades;

namespace {

CsvOptions csv_options(const std::string& label_column) {
  CsvOptions o;
  if (!label_column.empty()) {
    try {
      std::size_t used = 0;
      const long idx = std::stol(label_column, &used);
      if (used == label_column.size())
        o.label_column = idx;
      else
        o.label_column = label_column;
    } catch (const std::logic_error&) {
      o.label_column = label_column;
    }
  }
  return o;
}

int cmd_run(const std::string& config_path, int threads) {
  bench::RunConfig cfg = bench::RunConfig::load(config_path);
  if (threads > 0) cfg.threads = static_cast<std::size_t>(threads);
  const auto s = bench::run_protocol(cfg);
  std::cout << "cells written: " << s.cells << ", resumed (skipped): " << s.skipped << ", failed: " << s.failed
            << "\nrecords: " << s.records.string() << '\n';
  const auto records = bench::read_records(s.records);
  bench::write_report(bench::summarize(records), cfg.output_dir);
  std::cout << "report: " << (cfg.output_dir / "summary.txt").string() << '\n';
  return s.failed == 0 ? 0 : 2;
}

int cmd_sweep(const std::string& config_path, const std::string& param, int threads) {
  bench::RunConfig cfg = bench::RunConfig::load(config_path);
  if (threads > 0) cfg.threads = static_cast<std::size_t>(threads);
  const auto which = bench::sweep_param_from_name(param);
  const auto points = bench::sweep(cfg, which);
  const std::string tag = which == bench::SweepParam::h_c ? "h_c" : "kp";
  fs::create_directories(cfg.output_dir);
  const fs::path out = cfg.output_dir / ("sweep_" + tag + ".csv");
  std::ofstream csv(out);
  csv << "dataset," << tag << ",n,mean,std,failures\n";
  std::printf("%-14s %6s  %s\n", "dataset", tag.c_str(), "DSEL accuracy mean(std)");
  for (const auto& p : points) {
    const double m = mean(p.accuracies), sd = sample_std(p.accuracies);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%g,%zu,%.17g,%.17g,%zu", p.value, p.accuracies.size(), m, sd, p.failures.size());
    csv << p.dataset << ',' << buf << '\n';
    const std::string cell =
        p.accuracies.empty() ? "n/a (" + (p.failures.empty() ? std::string("no runs") : p.failures.front()) + ")"
                             : bench::format_mean_std(m, sd);
    std::printf("%-14s %6g  %s\n", p.dataset.c_str(), p.value, cell.c_str());
  }
  std::cout << "table: " << out.string() << '\n';
  return 0;
}

int cmd_report(const std::string& in, const std::string& out_dir) {
  const auto records = bench::read_records(in);
  const fs::path dir = out_dir.empty() ? fs::path(in).parent_path() : fs::path(out_dir);
  bench::write_report(bench::summarize(records), dir.empty() ? fs::path(".") : dir);
  std::ifstream txt((dir.empty() ? fs::path(".") : dir) / "summary.txt");
  std::cout << txt.rdbuf();
  return 0;
}

int cmd_significance(const std::string& in, const std::string& a, const std::string& b, const std::string& dataset) {
  const auto records = bench::read_records(in);
  const auto summary = bench::summarize(records);
  std::vector<std::string> datasets = dataset.empty() ? summary.datasets : std::vector<std::string>{dataset};
  for (const auto& d : datasets) {
    const auto c = bench::significance(records, a, b, d);
    std::printf("%s: %s %.2f vs %s %.2f  H=%.6g p=%.6g  %s at 95%%\n", d.c_str(), a.c_str(), 100 * c.mean_a,
                b.c_str(), 100 * c.mean_b, c.test.h, c.test.p, c.test.significant ? "significant" : "not significant");
  }
  return 0;
}

struct TrainArgs {
  std::string data, label_column, model, meta_out;
  std::uint64_t seed = 1;
  std::size_t k = 7, kp = 5, pool_size = 100, epochs = 100;
  double h_c = 0.7;
};

int cmd_train(const TrainArgs& a) {
  const Dataset ds = load_csv(a.data, csv_options(a.label_column));
  bench::RunParams p;
  p.k = a.k;
  p.kp = a.kp;
  p.h_c = a.h_c;
  p.pool_size = a.pool_size;
  p.epochs = a.epochs;

  // Same seeded split, scaling and pool as one protocol cell.
  bench::Cell cell = bench::prepare_cell(ds, p, a.seed);

  const MetaDesParams mp = bench::metades_params(p);
  MetaSet ms = build_meta_set(cell.pool, cell.split.meta_train, mp);
  if (!a.meta_out.empty()) write_meta_csv(ms.samples, ms.layout, a.meta_out);
  MetaClassifier selector = MetaClassifier::train(ms.samples, derive_seed(a.seed, 2), mp.selector);
  const MetaDes model(std::move(cell.pool), std::move(selector), std::move(ms.confidence), cell.split.dsel, mp);
  const Evaluation ev = model.evaluate(cell.split.test);

  nlohmann::json extra = {{"scaler", cell.scaler.to_json()},
                          {"class_names", ds.class_names},
                          {"seed", a.seed},
                          {"meta_samples", ms.samples.size()},
                          {"held_out_accuracy", ev.accuracy}};
  model.save(a.model, extra);
  std::printf("meta-samples: %zu (from %zu admitted queries)\nheld-out test accuracy: %.2f%%, mean ensemble size %.2f\n",
              ms.samples.size(), ms.admitted.size(), 100 * ev.accuracy, ev.mean_selected);
  std::cout << "model: " << a.model << '\n';
  return 0;
}

int cmd_classify(const std::string& model_path, const std::string& data, const std::string& label_column,
                 const std::string& out) {
  nlohmann::json extra;
  const MetaDes model = MetaDes::load(model_path, &extra);
  Dataset ds = load_csv(data, csv_options(label_column));
  if (extra.contains("scaler")) ds = MinMaxScaler::from_json(extra.at("scaler")).transform(std::move(ds));
  // Map the file's labels onto the model's class vocabulary.
  if (extra.contains("class_names")) {
    const auto names = extra.at("class_names").get<std::vector<std::string>>();
    for (auto& y : ds.labels) {
      const auto& nm = ds.class_names[static_cast<std::size_t>(y)];
      const auto it = std::find(names.begin(), names.end(), nm);
      if (it == names.end()) throw invalid_argument("label '" + nm + "' unknown to the model");
      y = static_cast<int>(it - names.begin());
    }
    ds.class_names = names;
  }
  const Evaluation ev = model.evaluate(ds);
  if (!out.empty()) write_diagnostics_csv(ev, out);
  std::printf("accuracy: %.2f%%  mean ensemble size: %.2f\n", 100 * ev.accuracy, ev.mean_selected);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"META-DES dynamic ensemble selection benchmark"};
  app.require_subcommand(1);

  std::string config, param, in, out, a, b, dataset, model, data, label_column;
  int threads = 0;

  auto* run = app.add_subcommand("run", "run the replicated protocol and write records.csv + summary");
  run->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--threads", threads, "worker threads (overrides config)");

  auto* sw = app.add_subcommand("sweep", "h_C or Kp sweep evaluated on DSEL");
  sw->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  sw->add_option("--param", param, "h_c | kp")->required();
  sw->add_option("--threads", threads, "worker threads (overrides config)");

  auto* rep = app.add_subcommand("report", "summary tables from records.csv");
  rep->add_option("--in", in, "records.csv")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", out, "output directory (default: next to records)");

  auto* sig = app.add_subcommand("significance", "two-group Kruskal-Wallis between two techniques");
  sig->add_option("--in", in, "records.csv")->required()->check(CLI::ExistingFile);
  sig->add_option("--a", a, "technique A")->required();
  sig->add_option("--b", b, "technique B")->required();
  sig->add_option("--dataset", dataset, "restrict to one dataset");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "fit one META-DES model on a CSV and save it");
  tr->add_option("--data", ta.data, "CSV file")->required()->check(CLI::ExistingFile);
  tr->add_option("--label-column", ta.label_column, "label column index or name (default: last)");
  tr->add_option("--model", ta.model, "output model JSON")->required();
  tr->add_option("--meta-out", ta.meta_out, "also write the meta-training set as CSV");
  tr->add_option("--seed", ta.seed);
  tr->add_option("--k", ta.k);
  tr->add_option("--kp", ta.kp);
  tr->add_option("--hc", ta.h_c);
  tr->add_option("--pool-size", ta.pool_size);
  tr->add_option("--epochs", ta.epochs);

  auto* cl = app.add_subcommand("classify", "classify a CSV with a saved model");
  cl->add_option("--model", model, "model JSON")->required()->check(CLI::ExistingFile);
  cl->add_option("--data", data, "CSV file")->required()->check(CLI::ExistingFile);
  cl->add_option("--label-column", label_column, "label column index or name (default: last)");
  cl->add_option("--out", out, "per-query diagnostics CSV");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config, threads);
    if (*sw) return cmd_sweep(config, param, threads);
    if (*rep) return cmd_report(in, out);
    if (*sig) return cmd_significance(in, a, b, dataset);
    if (*tr) return cmd_train(ta);
    if (*cl) return cmd_classify(model, data, label_column, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
