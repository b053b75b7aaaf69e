#pragma once

// JSON persistence for networks:
//   {bit_width, weight_range:[min,max], leak, neurons:[{id,threshold,role}],
//    synapses:[{pre,post,level,delay}], inputs:[ids], outputs:[ids]}
// `leak` is optional and defaults to "none".

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>

#include "memsyn/errors.hpp"
#include "memsyn/network.hpp"

namespace memsyn {

using Json = nlohmann::ordered_json;

inline Json to_json(const Network& source) {
  const Network net = canonical(source);
  Json doc;
  doc["bit_width"] = net.bit_width;
  doc["weight_range"] = {net.weight_range.min, net.weight_range.max};
  doc["leak"] = net.leak == Leak::Full ? "full" : "none";
  Json neurons = Json::array();
  for (const auto& n : net.neurons)
    neurons.push_back({{"id", n.id}, {"threshold", n.threshold}, {"role", to_string(n.role)}});
  doc["neurons"] = std::move(neurons);
  Json synapses = Json::array();
  for (const auto& s : net.synapses)
    synapses.push_back({{"pre", s.pre}, {"post", s.post}, {"level", s.level}, {"delay", s.delay}});
  doc["synapses"] = std::move(synapses);
  doc["inputs"] = net.inputs;
  doc["outputs"] = net.outputs;
  return doc;
}

inline std::string serialize(const Network& net, int indent = 2) {
  return to_json(net).dump(indent) + "\n";
}

namespace detail {

inline const Json& field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + "/" + key + ": missing key");
  return *it;
}

template <typename T>
T get(const Json& obj, const char* key, const std::string& where) {
  const Json& v = field(obj, key, where);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + "/" + key + ": " + e.what());
  }
}

inline const Json& array_field(const Json& obj, const char* key, const std::string& where) {
  const Json& v = field(obj, key, where);
  if (!v.is_array()) throw ParseError(where + "/" + key + ": expected an array");
  return v;
}

}  // namespace detail

/// Parses and validates. Syntax and schema problems raise ParseError with a
/// line/column or JSON-pointer location; invariant breaches raise
/// ValidationError.
inline Network from_json(const Json& doc) {
  using detail::get;
  Network net;
  net.bit_width = get<int>(doc, "bit_width", "");

  const Json& range = detail::array_field(doc, "weight_range", "");
  if (range.size() != 2) throw ParseError("/weight_range: expected [min, max]");
  try {
    net.weight_range = {range[0].get<double>(), range[1].get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("/weight_range: ") + e.what());
  }

  if (auto it = doc.find("leak"); it != doc.end()) {
    const auto leak = get<std::string>(doc, "leak", "");
    if (leak == "none") net.leak = Leak::None;
    else if (leak == "full") net.leak = Leak::Full;
    else throw ParseError("/leak: expected \"none\" or \"full\"");
  }

  const Json& neurons = detail::array_field(doc, "neurons", "");
  for (std::size_t i = 0; i < neurons.size(); ++i) {
    const std::string at = "/neurons/" + std::to_string(i);
    Neuron n;
    n.id = get<int>(neurons[i], "id", at);
    n.threshold = get<double>(neurons[i], "threshold", at);
    try {
      n.role = parse_role(get<std::string>(neurons[i], "role", at));
    } catch (const SchemaError& e) {
      throw ParseError(at + "/role: " + e.what());
    }
    net.neurons.push_back(n);
  }

  const Json& synapses = detail::array_field(doc, "synapses", "");
  for (std::size_t i = 0; i < synapses.size(); ++i) {
    const std::string at = "/synapses/" + std::to_string(i);
    net.synapses.push_back({get<int>(synapses[i], "pre", at), get<int>(synapses[i], "post", at),
                            get<int>(synapses[i], "level", at),
                            get<int>(synapses[i], "delay", at)});
  }

  detail::array_field(doc, "inputs", "");
  detail::array_field(doc, "outputs", "");
  net.inputs = get<std::vector<int>>(doc, "inputs", "");
  net.outputs = get<std::vector<int>>(doc, "outputs", "");

  require_valid(net);
  return net;
}

inline Network deserialize(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
  return from_json(doc);
}

}  // namespace memsyn
