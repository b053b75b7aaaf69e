#pragma once

// Experiment runner: protocol grids over datasets x read-error probability x
// bit width, trained with the evolutionary optimizer, emitted as CSV.
//
// Every (cell, run) job draws its seeds from the master seed and its own
// coordinates, and results are stored by job index, so output is identical
// for any worker count.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "memsyn/dataset.hpp"
#include "memsyn/device_model.hpp"
#include "memsyn/eons.hpp"
#include "memsyn/synapse_fault.hpp"

namespace memsyn {

enum class ExperimentKind { ReadErrorTrainTest, TrainCleanTestNoisy, PrecisionSweep, DeviceTable, DeviceLink };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::ReadErrorTrainTest: return "read_error_train_test";
    case ExperimentKind::TrainCleanTestNoisy: return "train_clean_test_noisy";
    case ExperimentKind::PrecisionSweep: return "precision_sweep";
    case ExperimentKind::DeviceTable: return "device_table";
    case ExperimentKind::DeviceLink: return "device_link";
  }
  return "?";
}

struct ExperimentPlan {
  ExperimentKind experiment = ExperimentKind::ReadErrorTrainTest;
  std::vector<std::string> datasets{"iris", "wine", "wdbc"};
  std::vector<double> error_probabilities{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<int> bit_widths{4};
  int networks_per_cell = 10;
  EvoParams evo{};
  EpochPolicy epoch = EpochPolicy::PerInference;
  std::uint64_t master_seed = 1;
  int workers = 1;
  double train_fraction = 0.7;
  int encoder_window = 10;
  std::filesystem::path data_dir = default_data_dir();

  void check() const {
    if (datasets.empty()) throw ConfigurationError("plan lists no datasets");
    if (error_probabilities.empty()) throw ConfigurationError("plan has an empty probability grid");
    for (double p : error_probabilities)
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigurationError("probability " + std::to_string(p) + " outside [0, 1]");
    if (bit_widths.empty()) throw ConfigurationError("plan lists no bit widths");
    for (int b : bit_widths) check_bit_width(b);
    if (networks_per_cell < 1) throw ConfigurationError("networks_per_cell must be >= 1");
    if (workers < 1) throw ConfigurationError("workers must be >= 1");
    evo.check();
  }
};

struct RunRecord {
  std::string dataset;
  double p_train = 0.0;
  double p_test = 0.0;
  int bit_width = kDefaultBitWidth;
  int run = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  int generations = 0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
};

struct CellAggregate {
  std::string dataset;
  double p_train = 0.0;
  double p_test = 0.0;
  int bit_width = kDefaultBitWidth;
  std::size_t n = 0;
  double mean_train = 0.0;
  double std_train = 0.0;
  double mean_test = 0.0;
  double std_test = 0.0;
};

struct DeviceLinkInfo {
  PresetName preset = PresetName::BaseSizing;
  double sigma = 0.0;
  double derived_p = 0.0;
};

struct ExperimentResult {
  ExperimentKind kind = ExperimentKind::ReadErrorTrainTest;
  std::vector<RunRecord> records;  ///< canonical order: dataset, cell, run
  std::vector<CellAggregate> aggregates;
  std::optional<DeviceLinkInfo> link;

  /// Aggregate for a cell, or nullptr.
  const CellAggregate* cell(std::string_view dataset, double p_train, double p_test, int bits) const {
    for (const auto& a : aggregates)
      if (a.dataset == dataset && a.p_train == p_train && a.p_test == p_test && a.bit_width == bits) return &a;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Statistics

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< unbiased; 0 for a single value
};

inline MeanStd mean_std(std::span<const double> v) {
  MeanStd out;
  if (v.empty()) return out;
  double sum = 0.0;
  for (double x : v) sum += x;
  out.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

/// Groups records by (dataset, p_train, p_test, bit_width) in first-seen order.
inline std::vector<CellAggregate> aggregate(const std::vector<RunRecord>& records) {
  std::vector<CellAggregate> cells;
  std::vector<std::vector<double>> tr, te;
  for (const auto& r : records) {
    std::size_t k = 0;
    for (; k < cells.size(); ++k) {
      const auto& c = cells[k];
      if (c.dataset == r.dataset && c.p_train == r.p_train && c.p_test == r.p_test && c.bit_width == r.bit_width)
        break;
    }
    if (k == cells.size()) {
      cells.push_back({r.dataset, r.p_train, r.p_test, r.bit_width});
      tr.emplace_back();
      te.emplace_back();
    }
    tr[k].push_back(r.train_accuracy);
    te[k].push_back(r.test_accuracy);
  }
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto a = mean_std(tr[k]);
    const auto b = mean_std(te[k]);
    cells[k].n = tr[k].size();
    cells[k].mean_train = a.mean;
    cells[k].std_train = a.std;
    cells[k].mean_test = b.mean;
    cells[k].std_test = b.std;
  }
  return cells;
}

// ---------------------------------------------------------------------------
// Job execution

/// Runs `fn(i)` for i in [0, n) on `workers` threads. The first exception
/// (by index) is rethrown after all threads finish.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto count = static_cast<std::size_t>(std::max(1, workers));
  if (count == 1 || n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(count, n); ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::uint64_t probability_key(double p) { return static_cast<std::uint64_t>(std::llround(p * 1e9)); }

/// One training run: which data, which cell, which replicate.
struct TrainJob {
  std::size_t dataset = 0;
  double p_train = 0.0;
  int bit_width = kDefaultBitWidth;
  int run = 0;
};

struct TrainOutcome {
  Network best;
  double train_accuracy = 0.0;
  std::vector<double> test_accuracy;  ///< one per requested p_test
  int generations = 0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
};

/// Split seed depends on (dataset, run) only, so cells that differ in p or
/// bit width compare networks trained on the same split.
inline std::uint64_t split_seed(std::uint64_t master, std::string_view dataset, int run) {
  return derive_seed(master, hash_name("split"), hash_name(dataset), static_cast<std::uint64_t>(run));
}

inline std::uint64_t job_seed(std::uint64_t master, std::string_view dataset, const TrainJob& j) {
  return derive_seed(master, hash_name("job"), hash_name(dataset), probability_key(j.p_train),
                     static_cast<std::uint64_t>(j.bit_width), static_cast<std::uint64_t>(j.run));
}

class ExperimentRunner {
 public:
  explicit ExperimentRunner(ExperimentPlan plan) : plan_(std::move(plan)) {
    plan_.check();
    for (const auto& name : plan_.datasets) {
      data_.push_back(load_dataset(name, plan_.data_dir));
      data_.back().name = normalize_dataset_name(name);
    }
  }

  const ExperimentPlan& plan() const { return plan_; }
  const std::vector<Dataset>& datasets() const { return data_; }

  /// Trains one network per job and tests each at every p in `test_grid`.
  std::vector<TrainOutcome> train_and_test(const std::vector<TrainJob>& jobs,
                                           const std::vector<std::vector<double>>& test_grid) const {
    std::vector<TrainOutcome> out(jobs.size());
    parallel_for(jobs.size(), plan_.workers, [&](std::size_t i) { out[i] = run_job(jobs[i], test_grid[i]); });
    return out;
  }

  TrainOutcome run_job(const TrainJob& job, const std::vector<double>& p_tests) const {
    const auto start = std::chrono::steady_clock::now();
    const Dataset& ds = data_[job.dataset];
    const std::uint64_t seed = job_seed(plan_.master_seed, ds.name, job);
    const Split parts = split(ds, plan_.train_fraction, split_seed(plan_.master_seed, ds.name, job.run));
    Encoder enc(plan_.encoder_window);
    enc.fit(parts.train);
    const EncodedSet train = encode_set(parts.train, enc);
    const EncodedSet test = encode_set(parts.test, enc);

    EvoParams evo = plan_.evo;
    evo.master_seed = derive_seed(seed, hash_name("evolve"));
    const ReadErrorModel train_model{job.p_train, plan_.epoch};
    auto evolved = evolve(train, evo, train_model, job.bit_width);

    TrainOutcome o;
    o.seed = seed;
    o.generations = evo.generations;
    o.train_accuracy = evolved.best_fitness;
    for (double p : p_tests) {
      Rng rng = make_rng(derive_seed(seed, hash_name("test"), probability_key(p)));
      o.test_accuracy.push_back(evaluate_fitness(evolved.best, test, ReadErrorModel{p, plan_.epoch}, rng));
    }
    o.best = std::move(evolved.best);
    o.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return o;
  }

  /// Trains and tests at the same p for every p in the grid.
  ExperimentResult read_error_train_test() const {
    std::vector<TrainJob> jobs;
    std::vector<std::vector<double>> grid;
    for (std::size_t d = 0; d < data_.size(); ++d)
      for (double p : plan_.error_probabilities)
        for (int b : plan_.bit_widths)
          for (int r = 0; r < plan_.networks_per_cell; ++r) {
            jobs.push_back({d, p, b, r});
            grid.push_back({p});
          }
    return collect(ExperimentKind::ReadErrorTrainTest, jobs, grid);
  }

  /// Trains at p = 0 and tests every network at each p in `test_grid`
  /// (default: the plan's grid).
  ExperimentResult train_clean_test_noisy(std::optional<std::vector<double>> test_grid = {}) const {
    const auto ps = test_grid.value_or(plan_.error_probabilities);
    std::vector<TrainJob> jobs;
    std::vector<std::vector<double>> grid;
    for (std::size_t d = 0; d < data_.size(); ++d)
      for (int b : plan_.bit_widths)
        for (int r = 0; r < plan_.networks_per_cell; ++r) {
          jobs.push_back({d, 0.0, b, r});
          grid.push_back(ps);
        }
    return collect(ExperimentKind::TrainCleanTestNoisy, jobs, grid);
  }

  /// Independent training per bit width at p = 0.
  ExperimentResult precision_sweep() const {
    for (int b : plan_.bit_widths)
      if (b < 2 || b > 4) throw ConfigurationError("precision sweep widths must lie in {2, 3, 4}");
    std::vector<TrainJob> jobs;
    std::vector<std::vector<double>> grid;
    for (std::size_t d = 0; d < data_.size(); ++d)
      for (int b : plan_.bit_widths)
        for (int r = 0; r < plan_.networks_per_cell; ++r) {
          jobs.push_back({d, 0.0, b, r});
          grid.push_back({0.0});
        }
    return collect(ExperimentKind::PrecisionSweep, jobs, grid);
  }

  /// Error probability implied by a preset's resolution at noise `sigma`,
  /// then train-clean/test-noisy at {0, p} ({0} when p is 0).
  ExperimentResult device_link(PresetName preset_name, double sigma) const {
    if (!(sigma >= 0.0)) throw DomainError("sigma must be >= 0");
    const double p = error_rate_from_device(preset(preset_name), sigma);
    std::vector<double> grid{0.0};
    if (p != 0.0) grid.push_back(p);
    auto res = train_clean_test_noisy(grid);
    res.kind = ExperimentKind::DeviceLink;
    res.link = DeviceLinkInfo{preset_name, sigma, p};
    return res;
  }

 private:
  ExperimentResult collect(ExperimentKind kind, const std::vector<TrainJob>& jobs,
                           const std::vector<std::vector<double>>& grid) const {
    const auto outcomes = train_and_test(jobs, grid);
    ExperimentResult res;
    res.kind = kind;
    // Canonical order: dataset, bit width, p_train, p_test, run.
    struct Row {
      RunRecord rec;
      std::size_t dataset, p_train_pos, p_test_pos;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const auto& j = jobs[i];
      const auto& o = outcomes[i];
      for (std::size_t k = 0; k < grid[i].size(); ++k) {
        RunRecord r;
        r.dataset = data_[j.dataset].name;
        r.p_train = j.p_train;
        r.p_test = grid[i][k];
        r.bit_width = j.bit_width;
        r.run = j.run;
        r.train_accuracy = o.train_accuracy;
        r.test_accuracy = o.test_accuracy[k];
        r.generations = o.generations;
        r.wall_time_s = o.wall_time_s;
        r.seed = o.seed;
        rows.push_back({r, j.dataset, position(j.p_train), k});
      }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return std::tie(a.dataset, a.rec.bit_width, a.p_train_pos, a.p_test_pos, a.rec.run) <
             std::tie(b.dataset, b.rec.bit_width, b.p_train_pos, b.p_test_pos, b.rec.run);
    });
    for (auto& r : rows) res.records.push_back(std::move(r.rec));
    res.aggregates = aggregate(res.records);
    return res;
  }

  std::size_t position(double p) const {
    const auto& g = plan_.error_probabilities;
    return static_cast<std::size_t>(std::find(g.begin(), g.end(), p) - g.begin());
  }

  ExperimentPlan plan_;
  std::vector<Dataset> data_;
};

// ---------------------------------------------------------------------------
// CSV output

/// Shortest representation that round-trips.
inline std::string csv_number(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

/// One row per (cell, run) with kind=run, then one kind=mean row per cell.
/// Wall time is only written when `with_timing` is set, since it breaks
/// byte-identical reruns.
inline void write_result_csv(std::ostream& os, const ExperimentResult& res, bool with_timing = false) {
  os << "kind,experiment,dataset,p_train,p_test,bit_width,run,seed,generations,"
        "train_accuracy,test_accuracy,train_std,test_std,n";
  if (res.link) os << ",preset,sigma,derived_p";
  if (with_timing) os << ",wall_time_s";
  os << '\n';
  auto link_cols = [&] {
    if (!res.link) return std::string();
    return "," + std::string(to_string(res.link->preset)) + "," + csv_number(res.link->sigma) + "," +
           csv_number(res.link->derived_p);
  };
  const std::string exp(to_string(res.kind));
  for (const auto& r : res.records) {
    os << "run," << exp << ',' << r.dataset << ',' << csv_number(r.p_train) << ',' << csv_number(r.p_test)
       << ',' << r.bit_width << ',' << r.run << ',' << r.seed << ',' << r.generations << ','
       << csv_number(r.train_accuracy) << ',' << csv_number(r.test_accuracy) << ",,," << link_cols();
    if (with_timing) os << ',' << csv_number(r.wall_time_s);
    os << '\n';
  }
  for (const auto& a : res.aggregates) {
    os << "mean," << exp << ',' << a.dataset << ',' << csv_number(a.p_train) << ',' << csv_number(a.p_test)
       << ',' << a.bit_width << ",,,," << csv_number(a.mean_train) << ',' << csv_number(a.mean_test) << ','
       << csv_number(a.std_train) << ',' << csv_number(a.std_test) << ',' << a.n << link_cols();
    if (with_timing) os << ',';
    os << '\n';
  }
}

inline std::string result_csv(const ExperimentResult& res) {
  std::ostringstream os;
  write_result_csv(os, res);
  return os.str();
}

inline void write_history_csv(std::ostream& os, const std::vector<GenerationStats>& history) {
  os << "generation,best_fitness,mean_fitness\n";
  for (const auto& h : history)
    os << h.generation << ',' << csv_number(h.best_fitness) << ',' << csv_number(h.mean_fitness) << '\n';
}

/// Improvement of a preset's resolution over the base sizing, two decimals.
inline std::string improvement_vs_base(const ReadConfiguration& cfg) {
  const auto& base = preset(PresetName::BaseSizing);
  if (cfg.name == PresetName::BaseSizing) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", cfg.resolution_nA / base.resolution_nA);
  return buf;
}

/// Presets with resolutions, improvement ratios over base sizing and max
/// READ power.
inline void write_device_table(std::ostream& os) {
  os << "name,mp1_w,mp1_l,mn1_w,mn1_l,mn2_w,mn2_l,v_read,body_bias,resolution_nA,"
        "improvement_vs_base,anchor_uA,power_uW\n";
  for (const auto& c : preset_table()) {
    os << to_string(c.name) << ',' << format_number(c.mp1.w_um) << ',' << format_number(c.mp1.l_um) << ','
       << format_number(c.mn1.w_um) << ',' << format_number(c.mn1.l_um) << ',' << format_number(c.mn2.w_um)
       << ',' << format_number(c.mn2.l_um) << ',' << format_number(c.v_read_v) << ','
       << format_number(c.body_bias_v) << ',' << format_number(c.resolution_nA) << ','
       << improvement_vs_base(c) << ',' << format_number(c.anchor_5k_uA) << ','
       << format_number(c.max_read_power_uW) << '\n';
  }
}

inline std::string device_table_csv() {
  std::ostringstream os;
  write_device_table(os);
  return os.str();
}

}  // namespace memsyn
