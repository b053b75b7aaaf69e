#pragma once

// Evolutionary optimization of spiking network topology and parameters.
// Fitness is training accuracy under a read-error model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "memsyn/dataset.hpp"
#include "memsyn/network.hpp"
#include "memsyn/rng.hpp"
#include "memsyn/simulator.hpp"
#include "memsyn/synapse_fault.hpp"

namespace memsyn {

struct MutationRates {
  double add_neuron = 0.15;
  double del_neuron = 0.10;
  double add_synapse = 0.50;
  double del_synapse = 0.25;
  double bump_level = 0.70;
  double set_random_level = 0.25;
  double jitter_threshold = 0.50;
  double jitter_delay = 0.20;

  static MutationRates none() { return {0, 0, 0, 0, 0, 0, 0, 0}; }
};

struct EvoParams {
  std::size_t population_size = 100;
  int generations = 50;
  std::size_t tournament_size = 4;
  std::size_t elitism_count = 2;
  double crossover_rate = 0.5;
  MutationRates rates{};
  int hidden_min = 0;
  int hidden_max = 4;
  double connection_prob = 0.5;
  double threshold_min = 0.25;
  double threshold_max = 2.0;
  double threshold_jitter = 0.25;
  double threshold_floor = 0.05;
  /// Draw and jitter thresholds on the grid of the synapse weight step
  /// (integer thresholds in weight units). Off: continuous thresholds.
  bool quantize_thresholds = false;
  int init_max_delay = 3;
  WeightRange weight_range{};
  std::uint64_t master_seed = 1;

  void check() const {
    auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
    const auto& m = rates;
    for (double r : {crossover_rate, connection_prob, m.add_neuron, m.del_neuron, m.add_synapse,
                     m.del_synapse, m.bump_level, m.set_random_level, m.jitter_threshold,
                     m.jitter_delay})
      if (!rate_ok(r)) throw ConfigurationError("evolution rates must lie in [0, 1]");
    if (elitism_count > population_size)
      throw ConfigurationError("elitism_count exceeds population_size");
    if (population_size == 0) throw ConfigurationError("population_size must be >= 1");
    if (tournament_size < 1) throw ConfigurationError("tournament_size must be >= 1");
    if (hidden_min < 0 || hidden_max < hidden_min) throw ConfigurationError("bad hidden_init_range");
    if (init_max_delay < kMinDelay || init_max_delay > kMaxDelay)
      throw ConfigurationError("init_max_delay outside [1, 15]");
    if (!(threshold_min > 0.0 && threshold_max >= threshold_min))
      throw ConfigurationError("bad threshold range");
    if (generations < 0) throw ConfigurationError("generations must be >= 0");
  }
};

struct Genome {
  std::uint64_t id = 0;
  Network net;
};

struct FitnessRecord {
  std::uint64_t genome_id = 0;
  double accuracy = 0.0;
  std::uint64_t eval_seed = 0;
};

// ---------------------------------------------------------------------------
// Construction and variation

namespace detail {

inline int random_level(const Network& net, Rng& rng) { return uniform_int(rng, 0, net.levels() - 1); }

inline int bump(int level, int levels, Rng& rng) {
  if (level <= 0) return 1;
  if (level >= levels - 1) return levels - 2;
  return coin(rng, 0.5) ? level + 1 : level - 1;
}

template <typename T>
T& pick(std::vector<T>& v, Rng& rng) {
  return v[uniform_int<std::size_t>(rng, 0, v.size() - 1)];
}

inline double weight_step(const Network& net) {
  return (net.weight_range.max - net.weight_range.min) / (net.levels() - 1);
}

/// Allowed threshold multiples [lo, hi] of the weight step.
inline std::pair<int, int> threshold_steps(const EvoParams& p, const Network& net) {
  const double step = weight_step(net);
  const int lo = std::max(1, static_cast<int>(std::ceil(p.threshold_min / step - 1e-9)));
  const int hi = std::max(lo, static_cast<int>(std::floor(p.threshold_max / step + 1e-9)));
  return {lo, hi};
}

inline double random_threshold(const EvoParams& p, const Network& net, Rng& rng) {
  if (p.quantize_thresholds) {
    const auto [lo, hi] = threshold_steps(p, net);
    return uniform_int(rng, lo, hi) * weight_step(net);
  }
  return std::uniform_real_distribution<double>(p.threshold_min, p.threshold_max)(rng);
}

inline double jitter_threshold(double threshold, const EvoParams& p, const Network& net, Rng& rng) {
  if (p.quantize_thresholds) {
    const auto [lo, hi] = threshold_steps(p, net);
    const double step = weight_step(net);
    const int k = static_cast<int>(std::lround(threshold / step));
    const int moved = k <= lo ? lo + 1 : k >= hi ? hi - 1 : k + (coin(rng, 0.5) ? 1 : -1);
    return std::clamp(moved, lo, hi) * step;
  }
  return std::max(p.threshold_floor, threshold + std::normal_distribution<double>(0.0, p.threshold_jitter)(rng));
}

inline Synapse random_synapse(const Network& net, int pre, int post, const EvoParams& p, Rng& rng) {
  return {pre, post, random_level(net, rng), uniform_int(rng, kMinDelay, p.init_max_delay)};
}

}  // namespace detail

/// Inputs get ids 0..ni-1, outputs ni..ni+no-1, hidden neurons follow.
/// Every (input|hidden) -> (hidden|output) pair is wired with probability
/// `connection_prob`. Valid by construction; reachability is not guaranteed.
inline Network random_network(int num_inputs, int num_outputs, const EvoParams& params, Rng& rng,
                              int bit_width = kDefaultBitWidth) {
  if (num_inputs < 1 || num_outputs < 1) throw ConfigurationError("need at least one input and one output");
  check_bit_width(bit_width);
  params.check();
  Network net;
  net.bit_width = bit_width;
  net.weight_range = params.weight_range;
  int id = 0;
  for (int i = 0; i < num_inputs; ++i, ++id) {
    net.neurons.push_back({id, detail::random_threshold(params, net, rng), Role::Input});
    net.inputs.push_back(id);
  }
  for (int i = 0; i < num_outputs; ++i, ++id) {
    net.neurons.push_back({id, detail::random_threshold(params, net, rng), Role::Output});
    net.outputs.push_back(id);
  }
  const int hidden = uniform_int(rng, params.hidden_min, params.hidden_max);
  for (int i = 0; i < hidden; ++i, ++id)
    net.neurons.push_back({id, detail::random_threshold(params, net, rng), Role::Hidden});

  for (const auto& pre : net.neurons) {
    if (pre.role == Role::Output) continue;
    for (const auto& post : net.neurons) {
      if (post.role == Role::Input) continue;
      if (coin(rng, params.connection_prob))
        net.synapses.push_back(detail::random_synapse(net, pre.id, post.id, params, rng));
    }
  }
  return net;
}

/// Child keeps every io neuron plus each parental hidden neuron with
/// probability 1/2. A synapse is inherited when both endpoints survive,
/// from a uniformly chosen parent among those that carry it.
inline Network crossover(const Network& a_in, const Network& b_in, Rng& rng) {
  if (a_in.inputs != b_in.inputs || a_in.outputs != b_in.outputs)
    throw ConfigurationError("crossover parents differ in io layout");
  if (a_in.bit_width != b_in.bit_width) throw ConfigurationError("crossover parents differ in bit width");
  const Network a = canonical(a_in);
  const Network b = canonical(b_in);

  Network child;
  child.bit_width = a.bit_width;
  child.weight_range = a.weight_range;
  child.leak = a.leak;
  child.inputs = a.inputs;
  child.outputs = a.outputs;

  // Merge neurons by id (both lists are sorted).
  std::size_t i = 0, j = 0;
  while (i < a.neurons.size() || j < b.neurons.size()) {
    const Neuron* na = i < a.neurons.size() ? &a.neurons[i] : nullptr;
    const Neuron* nb = j < b.neurons.size() ? &b.neurons[j] : nullptr;
    const Neuron* pick = nullptr;
    if (na && nb && na->id == nb->id) {
      pick = coin(rng, 0.5) ? na : nb;
      ++i, ++j;
    } else if (na && (!nb || na->id < nb->id)) {
      pick = na;
      ++i;
    } else {
      pick = nb;
      ++j;
    }
    if (pick->role != Role::Hidden || coin(rng, 0.5)) child.neurons.push_back(*pick);
  }

  std::set<int> alive;
  for (const auto& n : child.neurons) alive.insert(n.id);
  auto key = [](const Synapse& s) { return std::pair{s.pre, s.post}; };
  i = j = 0;
  while (i < a.synapses.size() || j < b.synapses.size()) {
    const Synapse* sa = i < a.synapses.size() ? &a.synapses[i] : nullptr;
    const Synapse* sb = j < b.synapses.size() ? &b.synapses[j] : nullptr;
    const Synapse* pick = nullptr;
    if (sa && sb && key(*sa) == key(*sb)) {
      pick = coin(rng, 0.5) ? sa : sb;
      ++i, ++j;
    } else if (sa && (!sb || key(*sa) < key(*sb))) {
      pick = sa;
      ++i;
    } else {
      pick = sb;
      ++j;
    }
    if (alive.contains(pick->pre) && alive.contains(pick->post)) child.synapses.push_back(*pick);
  }
  return child;
}

/// Applies each operator at most once, independently, with its rate.
/// io neurons are never removed.
inline Network mutate(const Network& source, const EvoParams& params, Rng& rng) {
  Network net = source;
  const auto& r = params.rates;

  if (coin(rng, r.add_neuron)) {
    const int id = net.next_id();
    std::vector<int> pres, posts;
    for (const auto& n : net.neurons) {
      if (n.role != Role::Output) pres.push_back(n.id);
      if (n.role != Role::Input) posts.push_back(n.id);
    }
    net.neurons.push_back({id, detail::random_threshold(params, net, rng), Role::Hidden});
    if (!pres.empty()) net.synapses.push_back(detail::random_synapse(net, detail::pick(pres, rng), id, params, rng));
    if (!posts.empty()) net.synapses.push_back(detail::random_synapse(net, id, detail::pick(posts, rng), params, rng));
  }

  if (coin(rng, r.del_neuron)) {
    std::vector<int> hidden;
    for (const auto& n : net.neurons)
      if (n.role == Role::Hidden) hidden.push_back(n.id);
    if (!hidden.empty()) {
      const int victim = detail::pick(hidden, rng);
      std::erase_if(net.neurons, [&](const Neuron& n) { return n.id == victim; });
      std::erase_if(net.synapses, [&](const Synapse& s) { return s.pre == victim || s.post == victim; });
    }
  }

  if (coin(rng, r.add_synapse)) {
    std::set<std::pair<int, int>> used;
    for (const auto& s : net.synapses) used.emplace(s.pre, s.post);
    std::vector<std::pair<int, int>> free;
    for (const auto& pre : net.neurons)
      for (const auto& post : net.neurons)
        if (post.role != Role::Input && !used.contains({pre.id, post.id})) free.emplace_back(pre.id, post.id);
    if (!free.empty()) {
      const auto [pre, post] = detail::pick(free, rng);
      net.synapses.push_back(detail::random_synapse(net, pre, post, params, rng));
    }
  }

  if (coin(rng, r.del_synapse) && !net.synapses.empty())
    net.synapses.erase(net.synapses.begin() +
                       static_cast<std::ptrdiff_t>(uniform_int<std::size_t>(rng, 0, net.synapses.size() - 1)));

  if (coin(rng, r.bump_level) && !net.synapses.empty()) {
    auto& s = detail::pick(net.synapses, rng);
    s.level = detail::bump(s.level, net.levels(), rng);
  }

  if (coin(rng, r.set_random_level) && !net.synapses.empty()) {
    auto& s = detail::pick(net.synapses, rng);
    s.level = detail::random_level(net, rng);
  }

  if (coin(rng, r.jitter_threshold) && !net.neurons.empty()) {
    auto& n = detail::pick(net.neurons, rng);
    n.threshold = detail::jitter_threshold(n.threshold, params, net, rng);
  }

  if (coin(rng, r.jitter_delay) && !net.synapses.empty()) {
    auto& s = detail::pick(net.synapses, rng);
    if (s.delay <= kMinDelay) s.delay = kMinDelay + 1;
    else if (s.delay >= kMaxDelay) s.delay = kMaxDelay - 1;
    else s.delay += coin(rng, 0.5) ? 1 : -1;
  }
  return net;
}

/// k uniform draws with replacement; the fittest wins, ties go to the
/// lower genome id. Returns an index into `population`.
inline std::size_t tournament_select(std::span<const Genome> population, std::span<const double> fitness,
                                     std::size_t k, Rng& rng) {
  if (population.empty()) throw DomainError("tournament on an empty population");
  std::size_t best = uniform_int<std::size_t>(rng, 0, population.size() - 1);
  for (std::size_t draw = 1; draw < k; ++draw) {
    const std::size_t c = uniform_int<std::size_t>(rng, 0, population.size() - 1);
    if (fitness[c] > fitness[best] || (fitness[c] == fitness[best] && population[c].id < population[best].id))
      best = c;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Fitness

/// Dataset pre-encoded as per-feature spike counts.
struct EncodedSet {
  std::size_t d = 0;
  int num_classes = 0;
  int horizon = 0;
  std::vector<std::vector<int>> counts;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

inline EncodedSet encode_set(const Dataset& ds, const Encoder& enc) {
  EncodedSet out;
  out.d = ds.d;
  out.num_classes = ds.num_classes;
  out.horizon = enc.horizon();
  out.labels = ds.labels;
  out.counts.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<int> c(ds.d);
    for (std::size_t j = 0; j < ds.d; ++j) c[j] = enc.spike_count(j, ds.row(i)[j]);
    out.counts.push_back(std::move(c));
  }
  return out;
}

/// Fraction of samples classified correctly with read errors applied per
/// the model's epoch policy. Each sample starts from zero potentials.
inline double evaluate_fitness(const Network& net, const EncodedSet& data, const ReadErrorModel& model, Rng& rng) {
  if (net.inputs.size() != data.d || net.outputs.size() != static_cast<std::size_t>(data.num_classes))
    throw ConfigurationError("network io arity (" + std::to_string(net.inputs.size()) + " in, " +
                             std::to_string(net.outputs.size()) + " out) does not match dataset (" +
                             std::to_string(data.d) + " features, " + std::to_string(data.num_classes) +
                             " classes)");
  if (data.size() == 0) return 0.0;
  const CompiledNetwork compiled(net);
  Simulator sim(compiled);
  FaultyWeights weights(compiled, model, rng);
  weights.enter(EpochContext::Evaluation);

  const auto inputs = compiled.inputs();
  const auto outputs = compiled.outputs();
  std::vector<ExternalSpike> spikes;
  std::vector<int> out_counts(outputs.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    weights.enter(EpochContext::Inference);
    spikes.clear();
    for (std::size_t j = 0; j < data.d; ++j)
      for (int t = 0; t < data.counts[i][j]; ++t) spikes.push_back({inputs[j], t});
    const auto& trace = sim.run(spikes, data.horizon, weights);
    for (std::size_t k = 0; k < outputs.size(); ++k) out_counts[k] = trace.counts[outputs[k]];
    if (decode(out_counts) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

inline double evaluate_fitness(const Network& net, const Dataset& ds, const Encoder& enc,
                               const ReadErrorModel& model, Rng& rng) {
  return evaluate_fitness(net, encode_set(ds, enc), model, rng);
}

// ---------------------------------------------------------------------------
// Evolution loop

struct GenerationStats {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
};

struct EvolutionResult {
  Network best;
  std::uint64_t best_id = 0;
  double best_fitness = 0.0;
  std::vector<GenerationStats> history;  ///< one entry per generation
};

inline std::uint64_t evaluation_seed(std::uint64_t master_seed, std::uint64_t genome_id) {
  return derive_seed(master_seed, hash_name("fitness"), genome_id);
}

/// Generational loop: evaluate, copy the elite unchanged (fitness kept),
/// fill the rest by tournament + crossover/mutation. Each genome is
/// evaluated once with a seed derived from its id, so elites keep their
/// score and best-so-far never decreases when elitism_count >= 1.
inline EvolutionResult evolve(const EncodedSet& train, const EvoParams& params, const ReadErrorModel& model,
                              int bit_width = kDefaultBitWidth) {
  params.check();
  model.check();
  check_bit_width(bit_width);
  const int ni = static_cast<int>(train.d);
  const int no = train.num_classes;

  std::uint64_t next_id = 0;
  std::vector<Genome> pop;
  pop.reserve(params.population_size);
  {
    Rng rng = make_rng(derive_seed(params.master_seed, hash_name("init")));
    for (std::size_t i = 0; i < params.population_size; ++i)
      pop.push_back({next_id++, random_network(ni, no, params, rng, bit_width)});
  }

  auto score = [&](const Genome& g) {
    Rng rng = make_rng(evaluation_seed(params.master_seed, g.id));
    return evaluate_fitness(g.net, train, model, rng);
  };
  std::vector<double> fit(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) fit[i] = score(pop[i]);

  auto ranking = [&] {
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return fit[x] != fit[y] ? fit[x] > fit[y] : pop[x].id < pop[y].id;
    });
    return order;
  };

  EvolutionResult result;
  for (int gen = 0; gen < params.generations; ++gen) {
    Rng rng = make_rng(derive_seed(params.master_seed, hash_name("vary"), static_cast<std::uint64_t>(gen)));
    const auto order = ranking();
    std::vector<Genome> next;
    std::vector<double> next_fit;
    next.reserve(pop.size());
    for (std::size_t e = 0; e < params.elitism_count; ++e) {
      next.push_back(pop[order[e]]);
      next_fit.push_back(fit[order[e]]);
    }
    while (next.size() < pop.size()) {
      const auto& p1 = pop[tournament_select(pop, fit, params.tournament_size, rng)];
      Network child;
      if (coin(rng, params.crossover_rate)) {
        const auto& p2 = pop[tournament_select(pop, fit, params.tournament_size, rng)];
        child = mutate(crossover(p1.net, p2.net, rng), params, rng);
      } else {
        child = mutate(p1.net, params, rng);
      }
      next.push_back({next_id++, std::move(child)});
      next_fit.push_back(score(next.back()));
    }
    pop = std::move(next);
    fit = std::move(next_fit);

    GenerationStats st;
    st.generation = gen + 1;
    st.best_fitness = *std::max_element(fit.begin(), fit.end());
    double sum = 0.0;
    for (double f : fit) sum += f;
    st.mean_fitness = sum / static_cast<double>(fit.size());
    result.history.push_back(st);
  }

  const std::size_t best = ranking().front();
  result.best = canonical(pop[best].net);
  result.best_id = pop[best].id;
  result.best_fitness = fit[best];
  return result;
}

}  // namespace memsyn
