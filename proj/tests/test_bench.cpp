#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "metades/bench.hpp"

using namespace metades;
using namespace metades::bench;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("metades_bench_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small, fast protocol: tiny pool, short training.
RunConfig small_config(const fs::path& out, std::vector<std::string> techniques, std::size_t reps) {
  RunConfig c;
  c.datasets = {"lithuanian"};
  c.techniques = std::move(techniques);
  c.replications = reps;
  c.params.pool_size = 6;
  c.params.epochs = 5;
  c.params.adaboost_rounds = 5;
  c.output_dir = out;
  c.data_dir = out / "no-data";
  return c;
}

std::vector<std::string> lines_without_wall_time(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    f.erase(f.begin() + 5);
    std::string joined;
    for (const auto& x : f) joined += x + ',';
    out.push_back(joined);
  }
  return out;
}

RunRecord rec(const std::string& d, const std::string& t, std::size_t r, double acc) {
  return {d, t, r, acc, 1.0, 0.0, 0};
}

}  // namespace

TEST(Report, FormatMeanStd) {
  const std::vector<double> v{0.8, 0.9};
  EXPECT_EQ(format_mean_std(mean(v), sample_std(v)), "85.00(7.07)");
}

TEST(Report, EmptyRecordsDoNotCrash) {
  const auto dir = fresh_dir("empty_report");
  EXPECT_NO_THROW(write_report(summarize({}), dir));
  EXPECT_TRUE(fs::exists(dir / "summary.txt"));
  std::ifstream in(dir / "summary.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "dataset,technique,n,mean,std");
}

TEST(Report, BestInRowAndSignificanceMarks) {
  std::vector<RunRecord> r;
  for (std::size_t i = 0; i < 10; ++i) {
    r.push_back(rec("d", "metades", i, 0.80 + 0.001 * static_cast<double>(i)));
    r.push_back(rec("d", "bagging", i, 0.70 + 0.001 * static_cast<double>(i)));
    r.push_back(rec("d", "ola", i, 0.805 - 0.001 * static_cast<double>(i % 3)));
  }
  const Summary s = summarize(r);
  EXPECT_EQ(s.best("d"), (std::vector<std::string>{"metades"}));
  const auto dir = fresh_dir("marks");
  write_report(s, dir);
  std::ifstream in(dir / "summary.txt");
  std::stringstream text;
  text << in.rdbuf();
  const std::string t = text.str();
  EXPECT_NE(t.find("[80.45(0.30)]"), std::string::npos);
  EXPECT_NE(t.find("70.45(0.30)-"), std::string::npos);
  EXPECT_NE(t.find("No multiple-comparison correction"), std::string::npos);
}

TEST(Records, RoundTrip) {
  const auto dir = fresh_dir("records");
  const RunRecord a{"pima", "knora-e", 3, 0.1 + 0.2, 12.5, 0.25, 0xdeadbeefcafe1234ULL};
  {
    std::ofstream out(dir / "r.csv");
    out << kRecordHeader << '\n' << format_record(a) << '\n';
  }
  const auto back = read_records(dir / "r.csv");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].dataset, "pima");
  EXPECT_EQ(back[0].technique, "knora-e");
  EXPECT_EQ(back[0].replication, 3u);
  EXPECT_EQ(back[0].accuracy, a.accuracy);  // bit-exact through %.17g
  EXPECT_EQ(back[0].ensemble_size_mean, 12.5);
  EXPECT_EQ(back[0].pool_hash, a.pool_hash);
}

TEST(Config, Validation) {
  EXPECT_THROW(RunConfig::from_json(nlohmann::json::parse(R"({"datasets": []})")), invalid_argument);
  EXPECT_THROW(RunConfig::from_json(nlohmann::json::parse(R"({"datasets": ["a"], "techniques": ["nope"]})")),
               invalid_argument);
  EXPECT_THROW(RunConfig::from_json(nlohmann::json::parse(R"({"datasets": ["a"], "replications": 0})")),
               invalid_argument);
  EXPECT_THROW(RunConfig::from_json(nlohmann::json::parse(R"({"datasets": "a"})")), invalid_argument);
  const RunConfig c = RunConfig::from_json(
      nlohmann::json::parse(R"({"datasets": ["a"], "params": {"K": 5, "Kp": 3, "h_C": 0.8, "M": 10}})"));
  EXPECT_EQ(c.params.k, 5u);
  EXPECT_EQ(c.params.baselines.k, 5u);
  EXPECT_EQ(c.params.kp, 3u);
  EXPECT_EQ(c.params.h_c, 0.8);
  EXPECT_EQ(c.params.pool_size, 10u);
  EXPECT_EQ(c.techniques, known_techniques());

  const auto dir = fresh_dir("config");
  std::ofstream(dir / "c.json") << R"({"datasets": ["a"], "output_dir": "out"})";
  EXPECT_EQ(RunConfig::load(dir / "c.json").output_dir, dir / "out");
  EXPECT_THROW(RunConfig::load(dir / "missing.json"), error);
}

TEST(Seeds, CellSeedsDiffer) {
  EXPECT_EQ(cell_seed(1, "pima", 0), cell_seed(1, "pima", 0));
  EXPECT_NE(cell_seed(1, "pima", 0), cell_seed(1, "pima", 1));
  EXPECT_NE(cell_seed(1, "pima", 0), cell_seed(1, "liver", 0));
  EXPECT_NE(cell_seed(1, "pima", 0), cell_seed(2, "pima", 0));
}

TEST(Protocol, OneDatasetTwoTechniquesTwentyReplications) {
  const auto dir = fresh_dir("protocol");
  const RunConfig cfg = small_config(dir, {"bagging", "single-best"}, 20);
  const RunSummary s = run_protocol(cfg);
  EXPECT_EQ(s.cells, 20u);
  EXPECT_EQ(s.failed, 0u);
  const auto recs = read_records(s.records);
  ASSERT_EQ(recs.size(), 40u);
  for (std::size_t i = 0; i < recs.size(); i += 2) {
    EXPECT_EQ(recs[i].replication, i / 2);
    EXPECT_EQ(recs[i].technique, "bagging");
    EXPECT_EQ(recs[i + 1].technique, "single-best");
    EXPECT_EQ(recs[i].pool_hash, recs[i + 1].pool_hash);  // paired
    if (i > 0) EXPECT_NE(recs[i].pool_hash, recs[i - 2].pool_hash);
  }
  const Comparison c = significance(recs, "bagging", "single-best", "lithuanian");
  EXPECT_EQ(c.n_a, 20u);
  EXPECT_GE(c.test.p, 0.0);
  EXPECT_LE(c.test.p, 1.0);
}

TEST(Protocol, DeterministicAcrossThreadCounts) {
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  RunConfig ca = small_config(a, {"metades", "knora-e", "bagging", "oracle"}, 3);
  ca.datasets = {"lithuanian", "banana"};
  RunConfig cb = ca;
  cb.output_dir = b;
  cb.threads = 3;
  run_protocol(ca);
  run_protocol(cb);
  EXPECT_EQ(lines_without_wall_time(a / "records.csv"), lines_without_wall_time(b / "records.csv"));
}

TEST(Protocol, ResumeSkipsCompletedCells) {
  const auto dir = fresh_dir("resume");
  RunConfig cfg = small_config(dir, {"bagging", "oracle"}, 4);
  run_protocol(cfg);
  const auto full = lines_without_wall_time(dir / "records.csv");

  // Drop the last cell (two records) and rerun.
  {
    std::vector<std::string> raw;
    std::ifstream in(dir / "records.csv");
    for (std::string line; std::getline(in, line);) raw.push_back(line);
    raw.resize(raw.size() - 2);
    std::ofstream out(dir / "records.csv");
    for (const auto& l : raw) out << l << '\n';
  }
  const RunSummary s = run_protocol(cfg);
  EXPECT_EQ(s.skipped, 3u);
  EXPECT_EQ(s.cells, 1u);
  EXPECT_EQ(lines_without_wall_time(dir / "records.csv"), full);

  // A changed configuration must not be mixed into the same directory.
  cfg.params.pool_size = 7;
  EXPECT_THROW(run_protocol(cfg), error);
  cfg.resume = false;
  EXPECT_NO_THROW(run_protocol(cfg));
}

TEST(Protocol, FailedCellsAreLogged) {
  const auto dir = fresh_dir("fail");
  RunConfig cfg = small_config(dir, {"metades"}, 2);
  cfg.params.h_c = 0.5;  // binary data: nothing admitted, META-DES cannot be trained
  const RunSummary s = run_protocol(cfg);
  EXPECT_EQ(s.failed, 2u);
  EXPECT_EQ(s.cells, 0u);
  EXPECT_TRUE(fs::exists(dir / "failures.log"));
}

TEST(Significance, NeedsThreeRecordsPerGroup) {
  std::vector<RunRecord> r;
  for (std::size_t i = 0; i < 2; ++i) r.push_back(rec("d", "a", i, 0.5)), r.push_back(rec("d", "b", i, 0.6));
  EXPECT_THROW(significance(r, "a", "b", "d"), invalid_argument);
}

TEST(Sweep, GridsAndUnreachablePoint) {
  EXPECT_EQ(sweep_grid(SweepParam::h_c).size(), 6u);
  EXPECT_EQ(sweep_grid(SweepParam::kp).size(), 10u);
  EXPECT_EQ(sweep_param_from_name("kp"), SweepParam::kp);
  EXPECT_THROW(sweep_param_from_name("K"), invalid_argument);

  const auto dir = fresh_dir("sweep");
  const RunConfig cfg = small_config(dir, {"metades"}, 2);
  const auto points = sweep(cfg, SweepParam::h_c);
  ASSERT_EQ(points.size(), 6u);
  EXPECT_TRUE(points[0].accuracies.empty());  // h_C = 0.5 admits nothing on binary data
  EXPECT_EQ(points[0].failures.size(), 2u);
  for (std::size_t g = 2; g < points.size(); ++g) EXPECT_EQ(points[g].accuracies.size(), 2u);
}
