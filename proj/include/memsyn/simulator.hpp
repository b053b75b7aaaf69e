#pragma once

// Discrete-time integrate-and-fire simulation.
//
// Per step t = 0..T-1:
//   1. deliver every charge due at t (external spike: 1.0, synapse: weight),
//   2. every neuron at or above threshold fires, schedules weight_of(level)
//      at t + delay on each outgoing synapse and resets to 0,
//   3. non-firing neurons keep their potential (Leak::None) or drop to 0
//      (Leak::Full).
// Potentials may go negative. There is no refractory period.

#include <algorithm>
#include <array>
#include <concepts>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "memsyn/network.hpp"

namespace memsyn {

struct ExternalSpike {
  int neuron = 0;  ///< neuron id
  int time = 0;

  friend bool operator==(const ExternalSpike&, const ExternalSpike&) = default;
};

struct SpikeSchedule {
  std::vector<ExternalSpike> spikes;
  int horizon = 0;
};

/// Index-based form of a network. Built from the canonical form, so
/// simulation results do not depend on the order neurons were listed in.
class CompiledNetwork {
 public:
  explicit CompiledNetwork(const Network& source) {
    require_valid(source);
    const Network net = canonical(source);
    leak_ = net.leak;
    const std::size_t n = net.neurons.size();
    ids_.reserve(n);
    threshold_.reserve(n);
    for (const auto& nr : net.neurons) {
      index_.emplace(nr.id, static_cast<int>(ids_.size()));
      ids_.push_back(nr.id);
      threshold_.push_back(nr.threshold);
    }
    for (int id : net.inputs) inputs_.push_back(index_.at(id));
    for (int id : net.outputs) outputs_.push_back(index_.at(id));

    // CSR adjacency over synapses in canonical order.
    const std::size_t m = net.synapses.size();
    pre_.resize(m);
    post_.resize(m);
    delay_.resize(m);
    level_.resize(m);
    weight_.resize(m);
    out_begin_.assign(n + 1, 0);
    for (std::size_t s = 0; s < m; ++s) {
      const auto& syn = net.synapses[s];
      pre_[s] = index_.at(syn.pre);
      post_[s] = index_.at(syn.post);
      delay_[s] = syn.delay;
      level_[s] = syn.level;
      weight_[s] = net.weight_of(syn.level);
      ++out_begin_[pre_[s] + 1];
    }
    for (std::size_t i = 0; i < n; ++i) out_begin_[i + 1] += out_begin_[i];
    out_syn_.resize(m);
    std::vector<int> fill(out_begin_.begin(), out_begin_.end() - 1);
    for (std::size_t s = 0; s < m; ++s) out_syn_[fill[pre_[s]]++] = static_cast<int>(s);
    bit_width_ = net.bit_width;
    weight_range_ = net.weight_range;
  }

  std::size_t neuron_count() const { return ids_.size(); }
  std::size_t synapse_count() const { return pre_.size(); }
  int index_of(int id) const {
    auto it = index_.find(id);
    if (it == index_.end())
      throw ConfigurationError("no neuron with id " + std::to_string(id));
    return it->second;
  }
  int id_of(int index) const { return ids_[index]; }

  std::span<const int> inputs() const { return inputs_; }
  std::span<const int> outputs() const { return outputs_; }
  std::span<const double> thresholds() const { return threshold_; }
  std::span<const int> levels() const { return level_; }
  std::span<const double> weights() const { return weight_; }
  std::span<const int> pre() const { return pre_; }
  std::span<const int> post() const { return post_; }
  std::span<const int> delays() const { return delay_; }
  std::span<const int> outgoing(int neuron) const {
    return std::span<const int>(out_syn_).subspan(out_begin_[neuron],
                                                  out_begin_[neuron + 1] - out_begin_[neuron]);
  }
  int bit_width() const { return bit_width_; }
  int level_count() const { return memsyn::level_count(bit_width_); }
  double weight_of(int level) const {
    return weight_range_.min + level * (weight_range_.max - weight_range_.min) / (level_count() - 1);
  }
  Leak leak() const { return leak_; }

 private:
  std::unordered_map<int, int> index_;
  std::vector<int> ids_;
  std::vector<double> threshold_;
  std::vector<int> inputs_, outputs_;
  std::vector<int> pre_, post_, delay_, level_;
  std::vector<double> weight_;
  std::vector<int> out_begin_, out_syn_;
  int bit_width_ = kDefaultBitWidth;
  WeightRange weight_range_{};
  Leak leak_ = Leak::None;
};

/// Reads each synapse's nominal weight.
struct NominalWeights {
  const CompiledNetwork* net;
  double operator()(int synapse) const { return net->weights()[synapse]; }
};

/// Reads weights from an externally owned per-synapse table.
struct TableWeights {
  std::span<const double> table;
  double operator()(int synapse) const { return table[synapse]; }
};

struct SimOptions {
  bool record_times = false;
  bool record_potentials = false;  ///< potential at the start of each step
  bool record_deliveries = false;
};

struct Delivery {
  int synapse;
  int arrival;
};

struct SimTrace {
  std::vector<int> counts;                  ///< per compiled index
  std::vector<std::vector<int>> times;      ///< per compiled index
  std::vector<std::vector<double>> potentials;  ///< [t][index]
  std::vector<Delivery> deliveries;
};

/// Reusable simulation state for one compiled network. Not thread safe;
/// use one per task.
class Simulator {
 public:
  explicit Simulator(const CompiledNetwork& net)
      : net_(&net),
        potential_(net.neuron_count(), 0.0),
        stamp_(net.neuron_count(), 0) {}

  /// `spikes` holds compiled indices. `read(s)` returns the charge carried
  /// by synapse s at delivery time.
  template <typename WeightReader>
    requires std::invocable<WeightReader&, int>
  const SimTrace& run(std::span<const ExternalSpike> spikes, int horizon,
                      WeightReader&& read, const SimOptions& opt = {}) {
    const auto& net = *net_;
    const std::size_t n = net.neuron_count();
    std::fill(potential_.begin(), potential_.end(), 0.0);
    for (auto& slot : pending_) slot.clear();
    trace_.counts.assign(n, 0);
    trace_.deliveries.clear();
    if (opt.record_times) {
      trace_.times.assign(n, {});
    } else {
      trace_.times.clear();
    }
    trace_.potentials.clear();

    external_.assign(spikes.begin(), spikes.end());
    std::stable_sort(external_.begin(), external_.end(),
                     [](const ExternalSpike& a, const ExternalSpike& b) { return a.time < b.time; });
    auto ext = external_.begin();
    while (ext != external_.end() && ext->time < 0) ++ext;

    const auto thresholds = net.thresholds();
    const auto post = net.post();
    const auto delays = net.delays();

    for (int t = 0; t < horizon; ++t) {
      if (opt.record_potentials) trace_.potentials.push_back(potential_);
      ++epoch_;
      touched_.clear();
      auto touch = [&](int i) {
        if (stamp_[i] != epoch_) {
          stamp_[i] = epoch_;
          touched_.push_back(i);
        }
      };
      for (; ext != external_.end() && ext->time == t; ++ext) {
        potential_[ext->neuron] += 1.0;
        touch(ext->neuron);
      }
      auto& slot = pending_[static_cast<std::size_t>(t) % pending_.size()];
      for (int s : slot) {
        potential_[post[s]] += read(s);
        touch(post[s]);
        if (opt.record_deliveries) trace_.deliveries.push_back({s, t});
      }
      slot.clear();

      std::sort(touched_.begin(), touched_.end());
      for (int i : touched_) {
        if (potential_[i] >= thresholds[i]) {
          ++trace_.counts[i];
          if (opt.record_times) trace_.times[i].push_back(t);
          for (int s : net.outgoing(i)) {
            const int arrival = t + delays[s];
            if (arrival < horizon)
              pending_[static_cast<std::size_t>(arrival) % pending_.size()].push_back(s);
          }
          potential_[i] = 0.0;
        } else if (net.leak() == Leak::Full) {
          potential_[i] = 0.0;
        }
      }
    }
    return trace_;
  }

  const SimTrace& run(std::span<const ExternalSpike> spikes, int horizon,
                      const SimOptions& opt = {}) {
    return run(spikes, horizon, NominalWeights{net_}, opt);
  }

 private:
  const CompiledNetwork* net_;
  std::vector<double> potential_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t epoch_ = 0;
  std::vector<int> touched_;
  std::vector<ExternalSpike> external_;
  std::array<std::vector<int>, kMaxDelay + 1> pending_;
  SimTrace trace_;
};

/// Spike record of one simulation, keyed by neuron id.
struct SimulationResult {
  std::unordered_map<int, std::vector<int>> spike_times;
  std::unordered_map<int, int> spike_counts;

  int count(int id) const {
    auto it = spike_counts.find(id);
    return it == spike_counts.end() ? 0 : it->second;
  }
  const std::vector<int>& times(int id) const {
    static const std::vector<int> none;
    auto it = spike_times.find(id);
    return it == spike_times.end() ? none : it->second;
  }
};

/// Simulates `net` on an id-based schedule. Rejects invalid networks and
/// schedules that reference unknown neurons or times outside [0, T).
inline SimulationResult simulate(const Network& net, const SpikeSchedule& schedule) {
  const CompiledNetwork compiled(net);
  if (schedule.horizon < 0) throw DomainError("negative horizon");
  std::vector<ExternalSpike> indexed;
  indexed.reserve(schedule.spikes.size());
  for (const auto& sp : schedule.spikes) {
    if (sp.time < 0 || sp.time >= schedule.horizon)
      throw DomainError("external spike time " + std::to_string(sp.time) +
                        " outside [0, " + std::to_string(schedule.horizon) + ")");
    indexed.push_back({compiled.index_of(sp.neuron), sp.time});
  }
  Simulator sim(compiled);
  const auto& trace = sim.run(indexed, schedule.horizon, SimOptions{.record_times = true});
  SimulationResult out;
  for (std::size_t i = 0; i < compiled.neuron_count(); ++i) {
    const int id = compiled.id_of(static_cast<int>(i));
    out.spike_counts[id] = trace.counts[i];
    out.spike_times[id] = trace.times[i];
  }
  return out;
}

}  // namespace memsyn
