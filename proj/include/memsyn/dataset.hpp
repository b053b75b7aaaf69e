#pragma once

// UCI dataset ingestion, stratified splitting, rate-count spike encoding and
// spike-count class decoding.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memsyn/errors.hpp"
#include "memsyn/network.hpp"
#include "memsyn/rng.hpp"
#include "memsyn/simulator.hpp"

#ifndef MEMSYN_DATA_DIR
#define MEMSYN_DATA_DIR "data"
#endif

namespace memsyn {

/// Row-major feature matrix plus integer labels in [0, num_classes).
struct Dataset {
  std::string name;
  std::size_t d = 0;
  int num_classes = 0;
  std::vector<double> features;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features).subspan(i * d, d);
  }
  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> c(static_cast<std::size_t>(num_classes), 0);
    for (int l : labels) ++c[static_cast<std::size_t>(l)];
    return c;
  }
};

/// Iris: 4 floats + class string. Wine: class int (1..3) + 13 floats.
/// Wdbc: id, diagnosis (B/M), 30 floats. Canonical: features..., label_int.
enum class DatasetFormat { Iris, Wine, Wdbc, Canonical };

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_real(std::string_view tok, std::size_t line_no) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end || tok.empty() || !std::isfinite(v))
    throw ParseError("line " + std::to_string(line_no) + ": bad number '" + std::string(tok) + "'");
  return v;
}

inline long parse_integer(std::string_view tok, std::size_t line_no) {
  long v = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end || tok.empty())
    throw ParseError("line " + std::to_string(line_no) + ": bad integer '" + std::string(tok) + "'");
  return v;
}

struct Schema {
  std::size_t columns;
  std::size_t d;
  std::vector<std::string> classes;
};

inline Schema schema_of(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::Iris: return {5, 4, {"Iris-setosa", "Iris-versicolor", "Iris-virginica"}};
    case DatasetFormat::Wine: return {14, 13, {"1", "2", "3"}};
    case DatasetFormat::Wdbc: return {32, 30, {"B", "M"}};
    case DatasetFormat::Canonical: return {0, 0, {}};
  }
  return {};
}

}  // namespace detail

/// Parses one of the supported layouts. Blank lines are skipped; row order
/// is preserved.
inline Dataset parse_dataset(std::istream& in, DatasetFormat format, std::string name) {
  using namespace detail;
  const Schema schema = schema_of(format);
  Dataset ds;
  ds.name = std::move(name);
  ds.d = schema.d;
  ds.class_names = schema.classes;
  ds.num_classes = static_cast<int>(schema.classes.size());

  auto class_index = [&](std::string_view tok, std::size_t line_no) {
    for (std::size_t c = 0; c < schema.classes.size(); ++c)
      if (schema.classes[c] == tok) return static_cast<int>(c);
    throw SchemaError("line " + std::to_string(line_no) + ": unknown class label '" +
                      std::string(tok) + "'");
  };

  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = schema.columns;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty()) continue;
    const auto tok = split_csv(view);
    if (format == DatasetFormat::Canonical) {
      if (columns == 0) {
        if (tok.size() < 2)
          throw ParseError("line " + std::to_string(line_no) + ": need at least one feature and a label");
        columns = tok.size();
        ds.d = columns - 1;
        if (tok.front() == "x0") continue;  // header
      }
    }
    if (tok.size() != columns)
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                       " fields, got " + std::to_string(tok.size()));
    switch (format) {
      case DatasetFormat::Iris:
        for (std::size_t j = 0; j < 4; ++j) ds.features.push_back(parse_real(tok[j], line_no));
        ds.labels.push_back(class_index(tok[4], line_no));
        break;
      case DatasetFormat::Wine:
        parse_integer(tok[0], line_no);
        ds.labels.push_back(class_index(tok[0], line_no));
        for (std::size_t j = 1; j < 14; ++j) ds.features.push_back(parse_real(tok[j], line_no));
        break;
      case DatasetFormat::Wdbc:
        parse_integer(tok[0], line_no);
        ds.labels.push_back(class_index(tok[1], line_no));
        for (std::size_t j = 2; j < 32; ++j) ds.features.push_back(parse_real(tok[j], line_no));
        break;
      case DatasetFormat::Canonical: {
        for (std::size_t j = 0; j + 1 < columns; ++j) ds.features.push_back(parse_real(tok[j], line_no));
        const long label = parse_integer(tok.back(), line_no);
        if (label < 0)
          throw SchemaError("line " + std::to_string(line_no) + ": negative label");
        ds.labels.push_back(static_cast<int>(label));
        max_label = std::max(max_label, static_cast<int>(label));
        break;
      }
    }
  }
  if (format == DatasetFormat::Canonical) {
    ds.num_classes = max_label + 1;
    for (int c = 0; c < ds.num_classes; ++c) ds.class_names.push_back(std::to_string(c));
  }
  if (ds.labels.empty()) throw ParseError("dataset '" + ds.name + "' has no rows");
  return ds;
}

inline std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("MEMSYN_DATA_DIR"); env && *env) return env;
  return MEMSYN_DATA_DIR;
}

inline std::string normalize_dataset_name(std::string_view name) {
  if (name == "breast_cancer" || name == "breast-cancer" || name == "wdbc") return "wdbc";
  return std::string(name);
}

/// Loads a dataset by name ("iris", "wine", "wdbc"/"breast_cancer") from the
/// data directory, or by path. Paths whose file name mentions iris, wine or
/// wdbc use that UCI layout; anything else is read as canonical CSV.
inline Dataset load_dataset(std::string_view name_or_path,
                            const std::filesystem::path& data_dir = default_data_dir()) {
  const std::string key = normalize_dataset_name(name_or_path);
  std::filesystem::path path;
  if (key == "iris" || key == "wine" || key == "wdbc")
    path = data_dir / (key + ".data");
  else
    path = std::filesystem::path(name_or_path);

  const std::string file = path.filename().string();
  DatasetFormat format = DatasetFormat::Canonical;
  std::string name = path.stem().string();
  if (file.find("iris") != std::string::npos) format = DatasetFormat::Iris, name = "iris";
  else if (file.find("wine") != std::string::npos) format = DatasetFormat::Wine, name = "wine";
  else if (file.find("wdbc") != std::string::npos) format = DatasetFormat::Wdbc, name = "wdbc";

  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file " + path.string());
  try {
    return parse_dataset(in, format, name);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

inline void write_canonical_csv(std::ostream& os, const Dataset& ds) {
  for (std::size_t j = 0; j < ds.d; ++j) os << 'x' << j << ',';
  os << "label\n";
  char buf[40];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.row(i)) {
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
      os << std::string_view(buf, static_cast<std::size_t>(p - buf)) << ',';
    }
    os << ds.labels[i] << '\n';
  }
}

inline Dataset subset(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.name = ds.name;
  out.d = ds.d;
  out.num_classes = ds.num_classes;
  out.class_names = ds.class_names;
  out.features.reserve(rows.size() * ds.d);
  out.labels.reserve(rows.size());
  for (auto r : rows) {
    const auto row = ds.row(r);
    out.features.insert(out.features.end(), row.begin(), row.end());
    out.labels.push_back(ds.labels[r]);
  }
  return out;
}

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_index;  ///< ascending
  std::vector<std::size_t> test_index;   ///< ascending
};

/// Stratified split: each class contributes round(fraction * n_c) rows
/// (at least one to each side) to the training set.
inline Split split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw SplitError("train fraction must lie in (0, 1)");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.num_classes));
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);

  Rng rng = make_rng(seed);
  Split out;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) continue;
    if (idx.size() < 2)
      throw SplitError("class " + std::to_string(c) + " of '" + ds.name + "' has fewer than 2 samples");
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    out.train_index.insert(out.train_index.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test_index.insert(out.test_index.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(out.train_index.begin(), out.train_index.end());
  std::sort(out.test_index.begin(), out.test_index.end());
  out.train = subset(ds, out.train_index);
  out.test = subset(ds, out.test_index);
  return out;
}

/// Rate-count encoder: feature j, min/max normalized (clamped to [0, 1]),
/// becomes round(x * window) spikes on input j at steps 0..n-1. The
/// normalization is fitted on the training split only.
class Encoder {
 public:
  explicit Encoder(int window = 10) : window_(window) {
    if (window < 1) throw DomainError("encoder window must be >= 1");
  }

  void fit(const Dataset& train) {
    lo_.assign(train.d, 0.0);
    hi_.assign(train.d, 0.0);
    for (std::size_t j = 0; j < train.d; ++j) {
      double lo = train.row(0)[j], hi = lo;
      for (std::size_t i = 1; i < train.size(); ++i) {
        lo = std::min(lo, train.row(i)[j]);
        hi = std::max(hi, train.row(i)[j]);
      }
      lo_[j] = lo;
      hi_[j] = hi;
    }
    fitted_ = true;
  }

  bool fitted() const { return fitted_; }
  int window() const { return window_; }
  std::size_t dims() const { return lo_.size(); }

  /// Simulation horizon covering the encoding window and two maximal hops.
  int horizon() const { return window_ + 2 * kMaxDelay + 5; }

  double normalize(std::size_t j, double x) const {
    require();
    const double span = hi_[j] - lo_[j];
    if (span <= 0.0) return 0.0;
    return std::clamp((x - lo_[j]) / span, 0.0, 1.0);
  }

  int spike_count(std::size_t j, double x) const {
    return static_cast<int>(std::lround(normalize(j, x) * window_));
  }

  /// Schedule fragment for one sample; input j drives neuron `input_ids[j]`.
  std::vector<ExternalSpike> encode(std::span<const double> sample,
                                    std::span<const int> input_ids) const {
    require();
    if (sample.size() != lo_.size() || input_ids.size() != sample.size())
      throw ConfigurationError("sample/input arity mismatch in encoder");
    std::vector<ExternalSpike> out;
    for (std::size_t j = 0; j < sample.size(); ++j) {
      const int n = spike_count(j, sample[j]);
      for (int t = 0; t < n; ++t) out.push_back({input_ids[j], t});
    }
    return out;
  }

  std::vector<ExternalSpike> encode(std::span<const double> sample) const {
    std::vector<int> ids(sample.size());
    std::iota(ids.begin(), ids.end(), 0);
    return encode(sample, ids);
  }

 private:
  void require() const {
    if (!fitted_) throw StateError("encoder used before fit()");
  }

  int window_;
  std::vector<double> lo_, hi_;
  bool fitted_ = false;
};

/// Argmax of output spike counts; ties go to the lowest index.
inline int decode(std::span<const int> counts) {
  int best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i)
    if (counts[i] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

}  // namespace memsyn
