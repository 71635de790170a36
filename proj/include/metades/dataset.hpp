#pragma once

// Labelled datasets: CSV ingestion, a named registry of CSV files,
// class-stratified partitioning for the train / meta-train / DSEL / test
// protocol, and min-max feature scaling.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "metades/error.hpp"
#include "metades/random.hpp"

namespace metades {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using FeatureView = std::span<const double>;

struct Dataset {
  std::string name;
  Matrix features;                       // N x d
  std::vector<int> labels;               // dense class indices in [0, L)
  std::vector<std::string> class_names;  // L entries

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  bool empty() const { return labels.empty(); }

  FeatureView row(std::size_t i) const {
    return {features.data() + i * dim(), dim()};
  }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (int y : labels) ++counts[static_cast<std::size_t>(y)];
    return counts;
  }

  // Rows in the given order; keeps the full label vocabulary.
  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.name = name;
    out.class_names = class_names;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
    out.labels.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
      out.features.row(static_cast<Eigen::Index>(r)) =
          features.row(static_cast<Eigen::Index>(indices[r]));
      out.labels.push_back(labels[indices[r]]);
    }
    return out;
  }

  // Checks the structural invariants; throws invalid_argument on violation.
  void validate() const {
    if (labels.empty()) throw invalid_argument("dataset '" + name + "' is empty");
    if (features.cols() < 1) throw invalid_argument("dataset '" + name + "' has no features");
    if (static_cast<std::size_t>(features.rows()) != labels.size())
      throw invalid_argument("feature/label row count mismatch");
    if (class_names.size() < 2)
      throw invalid_argument("dataset '" + name + "' needs at least two classes");
    for (int y : labels)
      if (y < 0 || y >= num_classes()) throw invalid_argument("label index out of range");
    if (!features.allFinite()) throw invalid_argument("non-finite feature value");
  }
};

// 64-bit hash of features and labels (not the name); identifies a reference set.
inline std::uint64_t content_hash(const Dataset& ds) {
  const auto* bytes = reinterpret_cast<const char*>(ds.features.data());
  std::uint64_t h = fnv1a({bytes, static_cast<std::size_t>(ds.features.size()) * sizeof(double)});
  h = fnv1a({reinterpret_cast<const char*>(ds.labels.data()), ds.labels.size() * sizeof(int)}, h);
  return h;
}

// ---------------------------------------------------------------------------
// CSV

enum class HeaderMode { detect, present, absent };

struct CsvOptions {
  // Column index (negative counts from the end) or column name from the header.
  std::variant<long, std::string> label_column = -1L;
  HeaderMode header = HeaderMode::detect;
  std::string name;  // dataset name; defaults to the file stem
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Dense remap of raw label strings. Numeric labels sort numerically, others
// lexicographically.
inline std::vector<std::string> label_vocabulary(const std::vector<std::string>& raw) {
  std::vector<std::string> vocab(raw);
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  const bool numeric = std::all_of(vocab.begin(), vocab.end(),
                                   [](const std::string& s) { return parse_number(s).has_value(); });
  if (numeric) {
    std::stable_sort(vocab.begin(), vocab.end(), [](const std::string& a, const std::string& b) {
      return *parse_number(a) < *parse_number(b);
    });
  }
  return vocab;
}

}  // namespace detail

inline Dataset parse_csv(std::istream& in, const CsvOptions& opts) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_numbers;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> cells;
    for (auto f : detail::split_fields(line)) cells.emplace_back(f);
    rows.push_back(std::move(cells));
    row_numbers.push_back(lineno);
  }
  if (rows.empty()) throw parse_error(1, "empty file");

  const std::size_t arity = rows.front().size();
  if (arity < 2) throw parse_error(row_numbers.front(), "need at least one feature and a label column");
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (rows[r].size() != arity)
      throw parse_error(row_numbers[r], "expected " + std::to_string(arity) + " fields, found " +
                                            std::to_string(rows[r].size()));

  // Resolve the label column; names require a header.
  std::optional<std::size_t> label_col;
  if (const auto* idx = std::get_if<long>(&opts.label_column)) {
    const long a = static_cast<long>(arity);
    const long c = *idx < 0 ? a + *idx : *idx;
    if (c < 0 || c >= a) throw invalid_argument("label column index out of range");
    label_col = static_cast<std::size_t>(c);
  }

  bool has_header = opts.header == HeaderMode::present;
  if (opts.header == HeaderMode::detect) {
    if (!label_col) {
      has_header = true;
    } else {
      std::size_t non_numeric = 0;
      for (std::size_t c = 0; c < arity; ++c)
        if (c != *label_col && !detail::parse_number(rows.front()[c])) ++non_numeric;
      has_header = non_numeric == arity - 1;
    }
  }
  if (const auto* nm = std::get_if<std::string>(&opts.label_column)) {
    if (!has_header) throw invalid_argument("label column given by name but the file has no header");
    const auto& hdr = rows.front();
    const auto it = std::find(hdr.begin(), hdr.end(), *nm);
    if (it == hdr.end()) throw invalid_argument("no column named '" + *nm + "'");
    label_col = static_cast<std::size_t>(it - hdr.begin());
  }

  const std::size_t first = has_header ? 1 : 0;
  const std::size_t n = rows.size() - first;
  if (n == 0) throw parse_error(row_numbers.front(), "empty file (header only)");

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(arity - 1));
  std::vector<std::string> raw_labels;
  raw_labels.reserve(n);
  for (std::size_t r = first; r < rows.size(); ++r) {
    std::size_t out_c = 0;
    for (std::size_t c = 0; c < arity; ++c) {
      const std::string& cell = rows[r][c];
      if (c == *label_col) {
        if (cell.empty()) throw parse_error(row_numbers[r], "missing label");
        raw_labels.push_back(cell);
        continue;
      }
      const auto v = detail::parse_number(cell);
      if (!v)
        throw parse_error(row_numbers[r], cell.empty() ? "missing value in column " + std::to_string(c)
                                                       : "non-numeric value '" + cell + "' in column " +
                                                             std::to_string(c));
      ds.features(static_cast<Eigen::Index>(r - first), static_cast<Eigen::Index>(out_c++)) = *v;
    }
  }

  ds.class_names = detail::label_vocabulary(raw_labels);
  if (ds.class_names.size() < 2) throw parse_error(row_numbers.front(), "single-class file");
  std::map<std::string, int> index;
  for (std::size_t l = 0; l < ds.class_names.size(); ++l) index.emplace(ds.class_names[l], static_cast<int>(l));
  ds.labels.reserve(n);
  for (const auto& s : raw_labels) ds.labels.push_back(index.at(s));
  ds.name = opts.name;
  return ds;
}

inline Dataset load_csv(const std::filesystem::path& path, CsvOptions opts = {}) {
  std::ifstream in(path);
  if (!in) throw error("cannot open '" + path.string() + "'");
  if (opts.name.empty()) opts.name = path.stem().string();
  return parse_csv(in, opts);
}

// Writes a header row (x0..x{d-1},label) and one row per sample; labels are
// written by class name. Round-trips exactly through load_csv.
inline void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot write '" + path.string() + "'");
  for (std::size_t c = 0; c < ds.dim(); ++c) out << 'x' << c << ',';
  out << "label\n";
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << ds.class_names[static_cast<std::size_t>(ds.labels[i])] << '\n';
  }
}

// ---------------------------------------------------------------------------
// Registry: <dir>/manifest.json maps dataset name to its label column, e.g.
//   { "pima": 8, "liver": {"file": "bupa.csv", "label_column": "selector"} }

struct RegistryEntry {
  std::filesystem::path file;
  CsvOptions csv;
};

class Registry {
 public:
  Registry() = default;

  explicit Registry(const std::filesystem::path& dir) : dir_(dir) {
    const auto manifest = dir / "manifest.json";
    std::ifstream in(manifest);
    if (!in) throw error("cannot open registry manifest '" + manifest.string() + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw error("bad manifest '" + manifest.string() + "': " + e.what());
    }
    for (const auto& [name, v] : j.items()) {
      RegistryEntry e;
      e.file = dir / (name + ".csv");
      e.csv.name = name;
      const nlohmann::json& col = v.is_object() ? v.at("label_column") : v;
      if (col.is_number_integer())
        e.csv.label_column = col.get<long>();
      else
        e.csv.label_column = col.get<std::string>();
      if (v.is_object()) {
        if (v.contains("file")) e.file = dir / v.at("file").get<std::string>();
        if (v.contains("header")) e.csv.header = v.at("header").get<bool>() ? HeaderMode::present : HeaderMode::absent;
      }
      entries_.emplace(name, std::move(e));
    }
  }

  bool contains(const std::string& name) const {
    const auto it = entries_.find(name);
    return it != entries_.end() && std::filesystem::exists(it->second.file);
  }

  Dataset load(const std::string& name) const {
    const auto it = entries_.find(name);
    if (it == entries_.end()) throw invalid_argument("dataset '" + name + "' not in registry");
    return load_csv(it->second.file, it->second.csv);
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : entries_) out.push_back(k);
    return out;
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, RegistryEntry> entries_;
};

// ---------------------------------------------------------------------------
// Stratified partitioning

struct SplitSpec {
  double train = 0.50;
  double dsel = 0.25;
  double test = 0.25;
  double meta_split = 0.50;  // share of train routed to meta-training
  std::uint64_t seed = 0;

  void validate() const {
    if (!(train > 0 && dsel > 0 && test > 0)) throw invalid_argument("split fractions must be positive");
    if (std::abs(train + dsel + test - 1.0) > 1e-9) throw invalid_argument("split fractions must sum to 1");
    if (!(meta_split > 0 && meta_split < 1)) throw invalid_argument("meta_split must lie in (0, 1)");
  }

  // Order: pool training, meta-training, DSEL, test.
  std::array<double, 4> partition_fractions() const {
    return {train * (1.0 - meta_split), train * meta_split, dsel, test};
  }
};

struct Split {
  Dataset train;       // pool generation set
  Dataset meta_train;  // meta-training set
  Dataset dsel;
  Dataset test;
};

namespace detail {

// Largest-remainder apportionment of n across the fractions. Remainder ties go
// to the larger fraction, then to the lower index.
inline std::array<std::size_t, 4> apportion(std::size_t n, const std::array<double, 4>& f) {
  std::array<std::size_t, 4> out{};
  std::array<double, 4> rem{};
  std::size_t used = 0;
  for (std::size_t p = 0; p < 4; ++p) {
    const double q = static_cast<double>(n) * f[p];
    out[p] = static_cast<std::size_t>(std::floor(q + 1e-12));
    rem[p] = q - static_cast<double>(out[p]);
    used += out[p];
  }
  std::array<std::size_t, 4> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rem[a] != rem[b]) return rem[a] > rem[b];
    return f[a] > f[b];
  });
  for (std::size_t k = 0; used < n; ++k, ++used) ++out[order[k % 4]];
  return out;
}

// Integer class-by-partition count table whose row sums are the class sizes,
// column sums the partition sizes, and every cell the floor or ceiling of its
// proportional quota. Built as a bipartite max-flow over the fractional cells.
// Cells whose quota is below one are filled first so that every class reaches
// every partition whenever that is feasible.
class ControlledRounding {
 public:
  ControlledRounding(const std::vector<std::size_t>& class_sizes, const std::array<std::size_t, 4>& part_sizes)
      : rows_(class_sizes.size()) {
    const double n = static_cast<double>(std::accumulate(class_sizes.begin(), class_sizes.end(), std::size_t{0}));
    counts_.assign(rows_, {});
    frac_.assign(rows_, {});
    row_need_.assign(rows_, 0);
    col_need_ = part_sizes;
    for (std::size_t l = 0; l < rows_; ++l) {
      std::size_t s = 0;
      for (std::size_t p = 0; p < 4; ++p) {
        const double q = static_cast<double>(class_sizes[l]) * static_cast<double>(part_sizes[p]) / n;
        counts_[l][p] = static_cast<std::size_t>(std::floor(q + 1e-12));
        frac_[l][p] = q - static_cast<double>(counts_[l][p]) > 1e-12;
        s += counts_[l][p];
        col_need_[p] -= counts_[l][p];
      }
      row_need_[l] = class_sizes[l] - s;
    }
  }

  std::vector<std::array<std::size_t, 4>> solve() {
    const auto base = counts_;
    const auto row0 = row_need_;
    const auto col0 = col_need_;
    flow_.assign(rows_, {});
    // Phase 1: only cells with a zero floor. Phase 2: all fractional cells,
    // without undoing phase-1 assignments.
    augment_all(/*zero_floor_only=*/true, /*locked=*/false);
    locked_ = flow_;
    augment_all(false, true);
    if (!saturated()) {
      flow_.assign(rows_, {});
      locked_.assign(rows_, {});
      row_need_ = row0;
      col_need_ = col0;
      augment_all(false, false);
    }
    auto out = base;
    for (std::size_t l = 0; l < rows_; ++l)
      for (std::size_t p = 0; p < 4; ++p) out[l][p] += flow_[l][p];
    return out;
  }

 private:
  bool saturated() const {
    return std::all_of(row_need_.begin(), row_need_.end(), [](std::size_t r) { return r == 0; });
  }

  void augment_all(bool zero_floor_only, bool locked) {
    for (std::size_t l = 0; l < rows_; ++l) {
      while (row_need_[l] > 0) {
        std::vector<char> seen_row(rows_, 0);
        if (!augment(l, seen_row, zero_floor_only, locked)) break;
        --row_need_[l];
      }
    }
  }

  bool edge_ok(std::size_t l, std::size_t p, bool zero_floor_only) const {
    return frac_[l][p] && flow_[l][p] == 0 && (!zero_floor_only || counts_[l][p] == 0);
  }

  // DFS for an augmenting path from row l to a column with spare capacity.
  bool augment(std::size_t l, std::vector<char>& seen_row, bool zero_floor_only, bool locked) {
    seen_row[l] = 1;
    for (std::size_t p = 0; p < 4; ++p) {
      if (!edge_ok(l, p, zero_floor_only)) continue;
      if (col_need_[p] > 0) {
        flow_[l][p] = 1;
        --col_need_[p];
        return true;
      }
      // Column full: try to reroute another row's unit out of p.
      for (std::size_t o = 0; o < rows_; ++o) {
        if (seen_row[o] || flow_[o][p] == 0) continue;
        if (locked && locked_[o][p]) continue;
        flow_[o][p] = 0;
        if (augment(o, seen_row, zero_floor_only, locked)) {
          flow_[l][p] = 1;
          return true;
        }
        flow_[o][p] = 1;
      }
    }
    return false;
  }

  std::size_t rows_;
  std::vector<std::array<std::size_t, 4>> counts_;
  std::vector<std::array<bool, 4>> frac_;
  std::vector<std::array<std::size_t, 4>> flow_;
  std::vector<std::array<std::size_t, 4>> locked_;
  std::vector<std::size_t> row_need_;
  std::array<std::size_t, 4> col_need_{};
};

}  // namespace detail

// Index sets of the four partitions (pool train, meta-train, DSEL, test),
// each sorted ascending. Deterministic in spec.seed.
inline std::array<std::vector<std::size_t>, 4> stratified_partition(std::span<const int> labels, int num_classes,
                                                                    const SplitSpec& spec) {
  spec.validate();
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);

  std::vector<std::size_t> class_sizes;
  for (std::size_t l = 0; l < by_class.size(); ++l) {
    if (by_class[l].size() < 4)
      throw invalid_argument("class " + std::to_string(l) + " has " + std::to_string(by_class[l].size()) +
                             " samples; stratification needs at least 4");
    class_sizes.push_back(by_class[l].size());
  }

  const auto fractions = spec.partition_fractions();
  const auto part_sizes = detail::apportion(labels.size(), fractions);
  const auto table = detail::ControlledRounding(class_sizes, part_sizes).solve();

  rng_t rng(spec.seed);
  std::array<std::vector<std::size_t>, 4> parts;
  for (std::size_t l = 0; l < by_class.size(); ++l) {
    shuffle(std::span<std::size_t>(by_class[l]), rng);
    std::size_t pos = 0;
    for (std::size_t p = 0; p < 4; ++p) {
      if (table[l][p] == 0) throw invalid_argument("class " + std::to_string(l) + " cannot reach every partition");
      for (std::size_t k = 0; k < table[l][p]; ++k) parts[p].push_back(by_class[l][pos++]);
    }
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return parts;
}

inline Split stratified_split(const Dataset& ds, const SplitSpec& spec) {
  const auto parts = stratified_partition(ds.labels, ds.num_classes(), spec);
  return {ds.subset(parts[0]), ds.subset(parts[1]), ds.subset(parts[2]), ds.subset(parts[3])};
}

// ---------------------------------------------------------------------------
// Min-max scaling

class MinMaxScaler {
 public:
  void fit(const Matrix& x) {
    if (x.rows() == 0) throw invalid_argument("cannot fit scaler on an empty matrix");
    lo_ = x.colwise().minCoeff().transpose();
    hi_ = x.colwise().maxCoeff().transpose();
  }
  void fit(const Dataset& ds) { fit(ds.features); }

  bool fitted() const { return lo_.size() > 0; }
  const Eigen::VectorXd& lower() const { return lo_; }
  const Eigen::VectorXd& upper() const { return hi_; }

  // Maps into [0, 1] with clamping; constant features map to 0.5.
  void transform_in_place(Matrix& x) const {
    if (!fitted()) throw not_fitted("min-max scaler used before fit");
    if (x.cols() != lo_.size()) throw invalid_argument("scaler dimension mismatch");
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double span = hi_[c] - lo_[c];
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        double& v = x(r, c);
        v = span > 0.0 ? std::clamp((v - lo_[c]) / span, 0.0, 1.0) : 0.5;
      }
    }
  }

  Dataset transform(Dataset ds) const {
    transform_in_place(ds.features);
    return ds;
  }

  nlohmann::json to_json() const {
    return {{"min", std::vector<double>(lo_.begin(), lo_.end())},
            {"max", std::vector<double>(hi_.begin(), hi_.end())}};
  }

  static MinMaxScaler from_json(const nlohmann::json& j) {
    MinMaxScaler s;
    const auto lo = j.at("min").get<std::vector<double>>();
    const auto hi = j.at("max").get<std::vector<double>>();
    s.lo_ = Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
    s.hi_ = Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
    return s;
  }

 private:
  Eigen::VectorXd lo_, hi_;
};

}  // namespace metades
