// memsyn: command-line runner for the synapse READ model and the
// read-error / bit-precision experiments.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "memsyn/device_model.hpp"
#include "memsyn/eons.hpp"
#include "memsyn/experiment.hpp"
#include "memsyn/serialization.hpp"

namespace {

using namespace memsyn;

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write " + path);
  out << text;
}

/// Options shared by `train`, `experiment *` and `link`. Values given on the
/// command line win over the --config file.
struct RunOptions {
  std::vector<std::string> datasets{"iris", "wine", "wdbc"};
  std::vector<double> p_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<int> bits{4};
  int nets = 10;
  std::size_t pop = 100;
  int gens = 50;
  std::uint64_t seed = 1;
  std::string epoch_policy = "per_inference";
  int workers = 1;
  std::string out;
  std::string config;
  double train_fraction = 0.7;
  int window = 10;
  std::string data_dir;
  bool timing = false;
  bool grid_thresholds = false;

  std::vector<std::function<void(const nlohmann::json&)>> from_config;

  template <typename T>
  CLI::Option* add(CLI::App& app, const std::string& flag, const std::string& key, T& target,
                   const std::string& help) {
    auto* opt = app.add_option(flag, target, help)->capture_default_str();
    from_config.push_back([opt, key, &target](const nlohmann::json& doc) {
      if (opt->count() == 0 && doc.contains(key)) target = doc.at(key).get<T>();
    });
    return opt;
  }

  void attach(CLI::App& app, bool single_run) {
    add(app, "--dataset", "dataset", datasets, "dataset names or paths (iris, wine, wdbc)")->delimiter(',');
    add(app, "--p-grid", "p_grid", p_grid, "read-error probabilities")->delimiter(',');
    add(app, "--bits", "bits", bits, "synapse bit widths")->delimiter(',');
    add(app, "--pop", "pop", pop, "population size");
    add(app, "--gens", "gens", gens, "generations");
    add(app, "--seed", "seed", seed, "master seed");
    add(app, "--epoch-policy", "epoch_policy", epoch_policy, "per_inference | per_evaluation | per_read");
    add(app, "--out", "out", out, "output CSV (default stdout)");
    add(app, "--train-fraction", "train_fraction", train_fraction, "stratified train fraction");
    add(app, "--window", "window", window, "encoder window (timesteps)");
    add(app, "--data-dir", "data_dir", data_dir, "directory holding iris.data, wine.data, wdbc.data");
    auto* grid = app.add_flag("--grid-thresholds", grid_thresholds, "keep thresholds on the weight-step grid");
    from_config.push_back([grid, this](const nlohmann::json& doc) {
      if (grid->count() == 0 && doc.contains("grid_thresholds")) grid_thresholds = doc.at("grid_thresholds").get<bool>();
    });
    if (!single_run) {
      add(app, "--nets", "nets", nets, "networks per cell");
      add(app, "--workers", "workers", workers, "parallel training jobs");
      app.add_flag("--timing", timing, "append wall_time_s column (not reproducible)");
    }
    app.add_option("--config", config, "JSON file whose keys mirror the flags");
  }

  void resolve() {
    if (config.empty()) return;
    std::ifstream in(config);
    if (!in) throw ConfigurationError("cannot open config " + config);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(config + ": " + e.what());
    }
    try {
      for (auto& f : from_config) f(doc);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigurationError(config + ": " + e.what());
    }
  }

  ExperimentPlan plan(ExperimentKind kind) const {
    ExperimentPlan p;
    p.experiment = kind;
    p.datasets = datasets;
    p.error_probabilities = p_grid;
    p.bit_widths = bits;
    p.networks_per_cell = nets;
    p.evo.population_size = pop;
    p.evo.generations = gens;
    p.evo.quantize_thresholds = grid_thresholds;
    p.epoch = parse_epoch_policy(epoch_policy);
    p.master_seed = seed;
    p.workers = workers;
    p.train_fraction = train_fraction;
    p.encoder_window = window;
    if (!data_dir.empty()) p.data_dir = data_dir;
    return p;
  }
};

std::string sweep_csv(SweepKind kind, std::optional<double> control, double step) {
  std::ostringstream os;
  os << "kind,control_v,resolution_nA,anchor\n";
  auto row = [&](double v) {
    bool anchor = false;
    for (const auto& a : sweep_anchors(kind)) anchor = anchor || a.control_v == v;
    os << to_string(kind) << ',' << format_number(v) << ',' << format_number(sweep_resolution(kind, v) * 1e9)
       << ',' << (anchor ? "yes" : "no") << '\n';
  };
  if (control) {
    row(*control);
    return os.str();
  }
  if (!(step > 0.0)) throw DomainError("sweep step must be positive");
  const auto a = sweep_anchors(kind);
  const double lo = a.front().control_v, hi = a.back().control_v;
  const auto steps = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int k = 0; k <= steps; ++k) {
    // Snap to a decimal grid so anchors are hit exactly.
    const double v = std::round((lo + k * step) * 1e9) / 1e9;
    row(v);
  }
  if (lo + steps * step < hi - 1e-12) row(hi);
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memsyn: memristive synapse READ model and read-error experiments"};
  app.require_subcommand(1);

  // device ------------------------------------------------------------------
  auto* device = app.add_subcommand("device", "device-level READ model");
  device->require_subcommand(1);

  std::string device_out;
  auto* table = device->add_subcommand("table", "preset table with resolution improvements and power");
  table->add_option("--out", device_out, "output CSV (default stdout)");
  table->callback([&] { emit(device_out, device_table_csv()); });

  auto* presets = device->add_subcommand("presets", "preset configurations as CSV");
  presets->add_option("--out", device_out, "output CSV (default stdout)");
  presets->callback([&] {
    std::ostringstream os;
    write_presets_csv(os);
    emit(device_out, os.str());
  });

  std::string sweep_kind = "v_read";
  std::optional<double> sweep_control;
  double sweep_step = 0.01;
  auto* sweep = device->add_subcommand("sweep", "interpolated resolution over V_READ or body bias");
  sweep->add_option("--kind", sweep_kind, "v_read | body_bias")->capture_default_str();
  sweep->add_option("--control", sweep_control, "single control voltage (V)");
  sweep->add_option("--step", sweep_step, "grid step (V)")->capture_default_str();
  sweep->add_option("--out", device_out, "output CSV (default stdout)");
  sweep->callback([&] { emit(device_out, sweep_csv(parse_sweep_kind(sweep_kind), sweep_control, sweep_step)); });

  std::optional<std::string> ep_preset;
  std::optional<double> ep_delta;
  double ep_sigma = 0.0;
  bool ep_boundary = false;
  auto* errp = device->add_subcommand("error-prob", "adjacent-level read-error probability");
  auto* ep_preset_opt = errp->add_option("--preset", ep_preset, "preset name (uses its resolution)");
  errp->add_option("--delta", ep_delta, "level spacing (A)")->excludes(ep_preset_opt);
  errp->add_option("--sigma", ep_sigma, "read noise std. dev. (A)")->required();
  errp->add_flag("--boundary", ep_boundary, "boundary level (one error direction)");
  errp->add_option("--out", device_out, "output CSV (default stdout)");
  errp->callback([&] {
    std::ostringstream os;
    os << "source,delta_A,sigma_A,interior,error_prob\n";
    auto row = [&](const std::string& src, double delta) {
      os << src << ',' << csv_number(delta) << ',' << csv_number(ep_sigma) << ','
         << (ep_boundary ? "no" : "yes") << ',' << csv_number(adjacent_error_prob(delta, ep_sigma, !ep_boundary))
         << '\n';
    };
    if (ep_delta) {
      row("delta", *ep_delta);
    } else if (ep_preset) {
      const auto& cfg = preset(parse_preset(*ep_preset));
      row(std::string(to_string(cfg.name)), cfg.resolution());
    } else {
      for (const auto& cfg : preset_table()) row(std::string(to_string(cfg.name)), cfg.resolution());
    }
    emit(device_out, os.str());
  });

  std::string mc_preset = "BaseSizing", mc_law = "uniform";
  int mc_level = 7;
  double mc_sigma = 0.0;
  std::size_t mc_n = 1000;
  std::uint64_t mc_seed = 1;
  auto* mc = device->add_subcommand("monte-carlo", "noisy-read statistics for one level");
  mc->add_option("--preset", mc_preset)->capture_default_str();
  mc->add_option("--law", mc_law, "uniform | affine")->capture_default_str();
  mc->add_option("--level", mc_level, "level index (4-bit)")->capture_default_str();
  mc->add_option("--sigma", mc_sigma, "read noise std. dev. (A)")->capture_default_str();
  mc->add_option("--n", mc_n, "samples")->capture_default_str();
  mc->add_option("--seed", mc_seed)->capture_default_str();
  mc->add_option("--out", device_out, "output CSV (default stdout)");
  mc->callback([&] {
    const auto& cfg = preset(parse_preset(mc_preset));
    Rng rng = make_rng(mc_seed);
    const WeightLevel level(mc_level);
    const auto s = monte_carlo_read_stats(cfg, level, NoiseModel(mc_sigma), mc_n, rng, parse_law(mc_law));
    const double analytic = mc_sigma > 0 ? adjacent_error_prob(min_resolution(cfg, parse_law(mc_law)), mc_sigma,
                                                               !level.is_boundary())
                                         : 0.0;
    std::ostringstream os;
    os << "preset,law,level,sigma_A,n,mean_A,std_A,error_rate,analytic_error_prob\n"
       << mc_preset << ',' << mc_law << ',' << mc_level << ',' << csv_number(mc_sigma) << ',' << mc_n << ','
       << csv_number(s.mean) << ',' << csv_number(s.std) << ',' << csv_number(s.error_rate) << ','
       << csv_number(analytic) << '\n';
    emit(device_out, os.str());
  });

  // train ---------------------------------------------------------------------
  RunOptions train_opts;
  train_opts.datasets = {"iris"};
  double train_p = 0.0;
  std::string network_out;
  auto* train = app.add_subcommand("train", "train one network; writes the fitness history CSV");
  train_opts.attach(*train, true);
  auto* train_p_opt = train->add_option("--p", train_p, "read-error probability during training");
  train->add_option("--network-out", network_out, "write the best network as JSON");
  train->callback([&] {
    train_opts.resolve();
    if (train_p_opt->count() == 0 && train->get_option("--p-grid")->count() > 0) train_p = train_opts.p_grid.front();
    auto plan = train_opts.plan(ExperimentKind::TrainCleanTestNoisy);
    plan.datasets.resize(1);
    plan.bit_widths.resize(1);
    plan.error_probabilities = {train_p};
    const ExperimentRunner runner(plan);
    const Dataset& ds = runner.datasets().front();
    const Split parts = split(ds, plan.train_fraction, split_seed(plan.master_seed, ds.name, 0));
    Encoder enc(plan.encoder_window);
    enc.fit(parts.train);
    const auto train_set = encode_set(parts.train, enc);
    const auto test_set = encode_set(parts.test, enc);
    EvoParams evo = plan.evo;
    evo.master_seed = plan.master_seed;
    const ReadErrorModel model{train_p, plan.epoch};
    const auto res = evolve(train_set, evo, model, plan.bit_widths.front());
    Rng rng = make_rng(derive_seed(plan.master_seed, hash_name("test")));
    const double test_acc = evaluate_fitness(res.best, test_set, model, rng);
    std::ostringstream os;
    write_history_csv(os, res.history);
    emit(train_opts.out, os.str());
    if (!network_out.empty()) emit(network_out, serialize(res.best));
    std::cerr << "dataset=" << ds.name << " bits=" << plan.bit_widths.front() << " p=" << train_p
              << " best_train=" << csv_number(res.best_fitness) << " test=" << csv_number(test_acc) << '\n';
  });

  // experiment ----------------------------------------------------------------
  auto* experiment = app.add_subcommand("experiment", "protocol grids (CSV)");
  experiment->require_subcommand(1);
  RunOptions read_opts, clean_opts, prec_opts;
  prec_opts.bits = {2, 3, 4};
  auto run_experiment = [](RunOptions& o, ExperimentKind kind) {
    o.resolve();
    const ExperimentRunner runner(o.plan(kind));
    ExperimentResult res;
    switch (kind) {
      case ExperimentKind::ReadErrorTrainTest: res = runner.read_error_train_test(); break;
      case ExperimentKind::TrainCleanTestNoisy: res = runner.train_clean_test_noisy(); break;
      default: res = runner.precision_sweep(); break;
    }
    std::ostringstream os;
    write_result_csv(os, res, o.timing);
    emit(o.out, os.str());
  };
  auto* read_error = experiment->add_subcommand("read-error", "train and test with read errors");
  read_opts.attach(*read_error, false);
  read_error->callback([&] { run_experiment(read_opts, ExperimentKind::ReadErrorTrainTest); });
  auto* clean_noisy = experiment->add_subcommand("clean-noisy", "train without, test with read errors");
  clean_opts.attach(*clean_noisy, false);
  clean_noisy->callback([&] { run_experiment(clean_opts, ExperimentKind::TrainCleanTestNoisy); });
  auto* precision = experiment->add_subcommand("precision", "bit-width sweep at p = 0");
  prec_opts.attach(*precision, false);
  precision->callback([&] { run_experiment(prec_opts, ExperimentKind::PrecisionSweep); });

  // link ----------------------------------------------------------------------
  RunOptions link_opts;
  std::string link_preset = "BaseSizing";
  double link_sigma = 0.0;
  auto* link = app.add_subcommand("link", "device resolution -> read-error probability -> accuracy");
  link_opts.attach(*link, false);
  link->add_option("--preset", link_preset, "preset name")->capture_default_str();
  link->add_option("--sigma", link_sigma, "read noise std. dev. (A)")->required();
  link->callback([&] {
    link_opts.resolve();
    const ExperimentRunner runner(link_opts.plan(ExperimentKind::DeviceLink));
    const auto res = runner.device_link(parse_preset(link_preset), link_sigma);
    std::ostringstream os;
    write_result_csv(os, res, link_opts.timing);
    emit(link_opts.out, os.str());
    std::cerr << "preset=" << link_preset << " sigma=" << csv_number(link_sigma)
              << " derived_p=" << csv_number(res.link->derived_p) << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "memsyn: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
