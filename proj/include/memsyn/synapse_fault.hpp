#pragma once

// Read-error injection: with probability p a synapse read returns the
// neighbouring level (above or below, equally likely). Boundary levels can
// only err inward, so their error rate stays p.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memsyn/device_model.hpp"
#include "memsyn/network.hpp"
#include "memsyn/rng.hpp"
#include "memsyn/simulator.hpp"

namespace memsyn {

/// When a fresh set of read errors is drawn.
enum class EpochPolicy {
  PerInference,   ///< once per input sample
  PerEvaluation,  ///< once per pass over a dataset
  PerRead,        ///< on every synaptic charge delivery
};

inline std::string_view to_string(EpochPolicy e) {
  switch (e) {
    case EpochPolicy::PerInference: return "per_inference";
    case EpochPolicy::PerEvaluation: return "per_evaluation";
    case EpochPolicy::PerRead: return "per_read";
  }
  return "?";
}

inline EpochPolicy parse_epoch_policy(std::string_view s) {
  if (s == "per_inference" || s == "inference") return EpochPolicy::PerInference;
  if (s == "per_evaluation" || s == "evaluation") return EpochPolicy::PerEvaluation;
  if (s == "per_read" || s == "read") return EpochPolicy::PerRead;
  throw ConfigurationError("unknown epoch policy '" + std::string(s) + "'");
}

enum class BoundaryRule { ClampInward };

struct ReadErrorModel {
  double p = 0.0;
  EpochPolicy epoch = EpochPolicy::PerInference;
  BoundaryRule boundary = BoundaryRule::ClampInward;

  void check() const {
    if (!(p >= 0.0 && p <= 1.0))
      throw DomainError("read-error probability " + std::to_string(p) + " outside [0, 1]");
  }
};

/// One read of a stored level under error probability p.
inline int read_level(int level, int level_count, double p, Rng& rng) {
  if (!coin(rng, p)) return level;
  if (level <= 0) return 1;
  if (level >= level_count - 1) return level_count - 2;
  return coin(rng, 0.5) ? level + 1 : level - 1;
}

/// Copy of `net` with every synapse level independently read once.
/// Topology, thresholds, delays and io lists are untouched.
inline Network perturb(const Network& net, const ReadErrorModel& model, Rng& rng) {
  model.check();
  Network out = net;
  if (model.p == 0.0) return out;
  for (auto& s : out.synapses) s.level = read_level(s.level, net.levels(), model.p, rng);
  return out;
}

enum class EpochContext { Evaluation, Inference };

/// Weight view of a compiled network under a read-error model. Call
/// `enter()` at the start of each dataset pass and each sample; the policy
/// decides whether that draws a fresh set of errors. Use as the weight
/// reader of Simulator::run.
class FaultyWeights {
 public:
  FaultyWeights(const CompiledNetwork& net, const ReadErrorModel& model, Rng& rng)
      : net_(&net), model_(model), rng_(&rng), weights_(net.weights().begin(), net.weights().end()) {
    model_.check();
  }

  void enter(EpochContext ctx) {
    const bool draw = (ctx == EpochContext::Evaluation && model_.epoch == EpochPolicy::PerEvaluation) ||
                      (ctx == EpochContext::Inference && model_.epoch == EpochPolicy::PerInference);
    if (!draw) return;
    ++draws_;
    if (model_.p == 0.0) return;
    const auto levels = net_->levels();
    for (std::size_t s = 0; s < levels.size(); ++s)
      weights_[s] = net_->weight_of(read_level(levels[s], net_->level_count(), model_.p, *rng_));
  }

  double operator()(int synapse) {
    if (model_.epoch != EpochPolicy::PerRead || model_.p == 0.0) return weights_[synapse];
    ++draws_;
    return net_->weight_of(read_level(net_->levels()[synapse], net_->level_count(), model_.p, *rng_));
  }

  /// Number of independent error samples drawn so far.
  std::size_t draws() const { return draws_; }
  std::span<const double> current() const { return weights_; }
  const ReadErrorModel& model() const { return model_; }

 private:
  const CompiledNetwork* net_;
  ReadErrorModel model_;
  Rng* rng_;
  std::vector<double> weights_;
  std::size_t draws_ = 0;
};

/// Adjacent-level error probability implied by a configuration's read
/// resolution under Gaussian read noise `sigma` (interior level).
inline double error_rate_from_device(const ReadConfiguration& cfg, double sigma) {
  return adjacent_error_prob(cfg.resolution(), sigma, true);
}

}  // namespace memsyn
