#include <gtest/gtest.h>

#include <cmath>

#include "memsyn/synapse_fault.hpp"
#include "oracles.hpp"

using namespace memsyn;

namespace {

Network dense(int synapses_per_row = 10, int level = 7) {
  Network net;
  for (int i = 0; i < synapses_per_row; ++i) {
    net.neurons.push_back({i, 1.0, Role::Input});
    net.neurons.push_back({100 + i, 1.0, Role::Output});
    net.inputs.push_back(i);
    net.outputs.push_back(100 + i);
  }
  for (int i = 0; i < synapses_per_row; ++i)
    for (int j = 0; j < synapses_per_row; ++j) net.synapses.push_back({i, 100 + j, level, 1 + (i + j) % 15});
  return net;
}

}  // namespace

TEST(ReadLevel, ZeroProbabilityNeverChangesOrConsumes) {
  Rng a = make_rng(1), b = make_rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(read_level(i % 16, 16, 0.0, a), i % 16);
  EXPECT_EQ(a(), b());
}

TEST(ReadLevel, InteriorSplitsEvenly) {
  Rng rng = make_rng(2);
  int up = 0, down = 0;
  constexpr int n = 10000;
  for (int i = 0; i < n; ++i) {
    const int l = read_level(7, 16, 1.0, rng);
    ASSERT_TRUE(l == 6 || l == 8);
    (l == 8 ? up : down)++;
  }
  EXPECT_NEAR(up / double(n), 0.5, 0.02);
  EXPECT_NEAR(down / double(n), 0.5, 0.02);
}

TEST(ReadLevel, BoundariesClampInward) {
  Rng rng = make_rng(3);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(read_level(15, 16, 1.0, rng), 14);
    EXPECT_EQ(read_level(0, 16, 1.0, rng), 1);
    EXPECT_EQ(read_level(3, 4, 1.0, rng), 2);
  }
}

TEST(ReadLevel, NeverMoreThanOneLevel) {
  Rng rng = make_rng(4);
  for (int b = 2; b <= 4; ++b)
    for (int i = 0; i < 5000; ++i) {
      const int L = level_count(b), l = i % L;
      const int r = read_level(l, L, 0.6, rng);
      ASSERT_GE(r, 0);
      ASSERT_LT(r, L);
      ASSERT_LE(std::abs(r - l), 1);
    }
}

TEST(Perturb, ZeroProbabilityIsIdentity) {
  Rng rng = make_rng(5);
  const auto net = dense();
  EXPECT_EQ(perturb(net, {0.0}, rng), net);
}

TEST(Perturb, FractionWithinThreeStandardErrors) {
  Rng rng = make_rng(6);
  const auto net = dense(10);  // 100 synapses
  for (double p : {0.1, 0.3, 0.5}) {
    long changed = 0, total = 0;
    for (int trial = 0; trial < 100; ++trial) {  // 10^4 synapse reads
      const auto out = perturb(net, {p}, rng);
      for (std::size_t s = 0; s < net.synapses.size(); ++s) changed += out.synapses[s].level != net.synapses[s].level;
      total += static_cast<long>(net.synapses.size());
    }
    const double se = std::sqrt(p * (1 - p) / total);
    EXPECT_NEAR(changed / double(total), p, 3 * se) << "p=" << p;
  }
}

TEST(Perturb, PreservesEverythingButLevels) {
  Rng rng = make_rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Network net = oracle::exact_random_network(rng);
    const Network original = net;
    const Network out = perturb(net, {uniform01(rng)}, rng);
    ASSERT_EQ(net, original);
    ASSERT_TRUE(validate(out).empty());
    ASSERT_EQ(out.neurons, net.neurons);
    ASSERT_EQ(out.inputs, net.inputs);
    ASSERT_EQ(out.outputs, net.outputs);
    ASSERT_EQ(out.synapses.size(), net.synapses.size());
    for (std::size_t s = 0; s < net.synapses.size(); ++s) {
      ASSERT_EQ(out.synapses[s].pre, net.synapses[s].pre);
      ASSERT_EQ(out.synapses[s].post, net.synapses[s].post);
      ASSERT_EQ(out.synapses[s].delay, net.synapses[s].delay);
      ASSERT_LE(std::abs(out.synapses[s].level - net.synapses[s].level), 1);
    }
  }
}

TEST(Perturb, ReproducibleForSeed) {
  const auto net = dense();
  Rng a = make_rng(42), b = make_rng(42);
  EXPECT_EQ(perturb(net, {0.4}, a), perturb(net, {0.4}, b));
}

TEST(Perturb, InvalidProbabilityIsDomainError) {
  Rng rng = make_rng(8);
  EXPECT_THROW(perturb(dense(), {-0.1}, rng), DomainError);
  EXPECT_THROW(perturb(dense(), {1.5}, rng), DomainError);
  EXPECT_THROW(perturb(dense(), {std::nan("")}, rng), DomainError);
}

TEST(EpochPolicy, NamesRoundTrip) {
  for (auto e : {EpochPolicy::PerInference, EpochPolicy::PerEvaluation, EpochPolicy::PerRead})
    EXPECT_EQ(parse_epoch_policy(to_string(e)), e);
  EXPECT_THROW(parse_epoch_policy("sometimes"), ConfigurationError);
}

TEST(FaultyWeights, PerEvaluationDrawsOncePerPass) {
  const CompiledNetwork net(dense());
  Rng rng = make_rng(9);
  FaultyWeights w(net, {0.5, EpochPolicy::PerEvaluation}, rng);
  w.enter(EpochContext::Evaluation);
  const std::vector<double> first(w.current().begin(), w.current().end());
  for (int sample = 0; sample < 150; ++sample) {
    w.enter(EpochContext::Inference);
    for (std::size_t s = 0; s < net.synapse_count(); ++s) ASSERT_EQ(w(static_cast<int>(s)), first[s]);
  }
  EXPECT_EQ(w.draws(), 1u);
}

TEST(FaultyWeights, PerInferenceDrawsPerSample) {
  const CompiledNetwork net(dense());
  Rng rng = make_rng(10);
  FaultyWeights w(net, {0.5, EpochPolicy::PerInference}, rng);
  w.enter(EpochContext::Evaluation);
  std::vector<std::vector<double>> seen;
  for (int sample = 0; sample < 100; ++sample) {
    w.enter(EpochContext::Inference);
    seen.emplace_back(w.current().begin(), w.current().end());
  }
  EXPECT_EQ(w.draws(), 100u);
  int distinct = 0;
  for (std::size_t i = 1; i < seen.size(); ++i) distinct += seen[i] != seen[i - 1];
  EXPECT_EQ(distinct, 99);
}

TEST(FaultyWeights, PerReadResamplesEveryDelivery) {
  const CompiledNetwork net(dense(2, 7));
  Rng rng = make_rng(11);
  FaultyWeights w(net, {1.0, EpochPolicy::PerRead}, rng);
  w.enter(EpochContext::Inference);
  int up = 0;
  for (int i = 0; i < 2000; ++i) {
    const double v = w(0);
    ASSERT_TRUE(v == net.weight_of(6) || v == net.weight_of(8));
    up += v == net.weight_of(8);
  }
  EXPECT_EQ(w.draws(), 2000u);
  EXPECT_GT(up, 800);
  EXPECT_LT(up, 1200);
}

TEST(FaultyWeights, PerReadAtZeroMatchesNominal) {
  Rng rng = make_rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const Network source = oracle::exact_random_network(rng);
    const CompiledNetwork net(source);
    Rng fault_rng = make_rng(trial);
    FaultyWeights w(net, {0.0, EpochPolicy::PerRead}, fault_rng);
    std::vector<ExternalSpike> spikes;
    for (int i : net.inputs())
      for (int t = 0; t < 20; t += 3) spikes.push_back({i, t});
    Simulator a(net), b(net);
    const auto ta = a.run(spikes, 30, SimOptions{.record_times = true});
    const auto tb = b.run(spikes, 30, w, SimOptions{.record_times = true});
    ASSERT_EQ(ta.times, tb.times);
  }
}

TEST(DeviceLink, ErrorRateFromDevice) {
  EXPECT_EQ(error_rate_from_device(preset(PresetName::BodyBias03), 0.0), 0.0);
  EXPECT_NEAR(error_rate_from_device(preset(PresetName::BaseSizing), 9.5e-9), 0.3173, 1e-4);
  EXPECT_NEAR(error_rate_from_device(preset(PresetName::BaseSizing), 9.5e-9),
              2 * oracle::gaussian_tail_quadrature(1.0), 1e-9);
}

TEST(DeviceLink, StrictlyDecreasingAcrossPresetOrdering) {
  for (double sigma : {5e-9, 9.5e-9, 20e-9, 50e-9, 100e-9, 300e-9}) {
    EXPECT_GE(error_rate_from_device(preset(PresetName::BaseSizing), sigma),
              error_rate_from_device(preset(PresetName::BodyBias03), sigma));
    const auto& t = preset_table();
    for (std::size_t i = 1; i < t.size(); ++i)
      EXPECT_LT(error_rate_from_device(t[i], sigma), error_rate_from_device(t[i - 1], sigma)) << sigma;
  }
}
