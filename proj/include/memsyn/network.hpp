#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "memsyn/device_model.hpp"
#include "memsyn/errors.hpp"

namespace memsyn {

inline constexpr int kMinDelay = 1;
inline constexpr int kMaxDelay = 15;

enum class Role { Input, Hidden, Output };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::Input: return "input";
    case Role::Hidden: return "hidden";
    case Role::Output: return "output";
  }
  return "?";
}

inline Role parse_role(std::string_view s) {
  if (s == "input") return Role::Input;
  if (s == "hidden") return Role::Hidden;
  if (s == "output") return Role::Output;
  throw SchemaError("unknown neuron role '" + std::string(s) + "'");
}

/// What happens to the potential of a neuron that does not fire in a step.
enum class Leak { None, Full };

struct Neuron {
  int id = 0;
  double threshold = 1.0;
  Role role = Role::Hidden;

  friend bool operator==(const Neuron&, const Neuron&) = default;
};

struct Synapse {
  int pre = 0;
  int post = 0;
  int level = 0;
  int delay = 1;

  friend bool operator==(const Synapse&, const Synapse&) = default;
};

struct WeightRange {
  double min = -1.0;
  double max = 1.0;

  friend bool operator==(const WeightRange&, const WeightRange&) = default;
};

/// Integrate-and-fire network with delayed, level-quantized synapses.
/// At most one synapse per ordered (pre, post) pair; self-loops and cycles
/// are allowed.
struct Network {
  int bit_width = kDefaultBitWidth;
  WeightRange weight_range{};
  Leak leak = Leak::None;
  std::vector<Neuron> neurons;
  std::vector<Synapse> synapses;
  std::vector<int> inputs;
  std::vector<int> outputs;

  int levels() const { return level_count(bit_width); }

  /// Signed affine level -> weight map. The only place levels become charge.
  double weight_of(int level) const {
    return weight_range.min +
           level * (weight_range.max - weight_range.min) / (levels() - 1);
  }

  const Neuron* find(int id) const {
    for (const auto& n : neurons)
      if (n.id == id) return &n;
    return nullptr;
  }

  int next_id() const {
    int id = 0;
    for (const auto& n : neurons) id = std::max(id, n.id + 1);
    return id;
  }

  std::size_t hidden_count() const {
    return static_cast<std::size_t>(std::count_if(
        neurons.begin(), neurons.end(), [](const Neuron& n) { return n.role == Role::Hidden; }));
  }

  friend bool operator==(const Network&, const Network&) = default;
};

/// Neurons sorted by id and synapses by (pre, post); io order is kept since
/// it is meaningful.
inline Network canonical(Network net) {
  std::sort(net.neurons.begin(), net.neurons.end(),
            [](const Neuron& a, const Neuron& b) { return a.id < b.id; });
  std::sort(net.synapses.begin(), net.synapses.end(), [](const Synapse& a, const Synapse& b) {
    return std::tie(a.pre, a.post, a.delay, a.level) < std::tie(b.pre, b.post, b.delay, b.level);
  });
  return net;
}

/// Every invariant breach, in a stable order. Empty means valid.
inline std::vector<std::string> validate(const Network& net) {
  std::vector<std::string> out;
  auto add = [&](std::string s) { out.push_back(std::move(s)); };

  if (net.bit_width < kMinBitWidth || net.bit_width > kMaxBitWidth) {
    add("bit width out of range: " + std::to_string(net.bit_width));
  }
  if (!(net.weight_range.min < net.weight_range.max)) add("empty weight range");

  std::unordered_map<int, Role> roles;
  for (const auto& n : net.neurons) {
    if (!roles.emplace(n.id, n.role).second)
      add("duplicate neuron id " + std::to_string(n.id));
    if (!(n.threshold > 0.0))
      add("threshold must be positive on neuron " + std::to_string(n.id));
  }

  auto check_io = [&](const std::vector<int>& ids, Role want, std::string_view what) {
    std::unordered_set<int> seen;
    for (int id : ids) {
      auto it = roles.find(id);
      if (it == roles.end()) {
        add("missing neuron " + std::to_string(id) + " listed in " + std::string(what));
        continue;
      }
      if (it->second != want)
        add(std::string(what) + " neuron " + std::to_string(id) + " has role " +
            std::string(to_string(it->second)));
      if (!seen.insert(id).second)
        add("duplicate " + std::string(what) + " id " + std::to_string(id));
    }
  };
  check_io(net.inputs, Role::Input, "inputs");
  check_io(net.outputs, Role::Output, "outputs");

  const bool bits_ok = net.bit_width >= kMinBitWidth && net.bit_width <= kMaxBitWidth;
  std::set<std::pair<int, int>> pairs;
  for (const auto& s : net.synapses) {
    const std::string tag = std::to_string(s.pre) + "->" + std::to_string(s.post);
    if (!roles.contains(s.pre)) add("missing neuron " + std::to_string(s.pre) + " (synapse " + tag + ")");
    if (!roles.contains(s.post)) add("missing neuron " + std::to_string(s.post) + " (synapse " + tag + ")");
    if (s.delay < kMinDelay || s.delay > kMaxDelay)
      add("delay out of range on synapse " + tag + ": " + std::to_string(s.delay));
    if (bits_ok && (s.level < 0 || s.level >= net.levels()))
      add("level out of range on synapse " + tag + ": " + std::to_string(s.level));
    if (!pairs.emplace(s.pre, s.post).second) add("duplicate synapse " + tag);
  }
  return out;
}

inline void require_valid(const Network& net) {
  if (auto v = validate(net); !v.empty()) throw ValidationError(std::move(v));
}

}  // namespace memsyn
