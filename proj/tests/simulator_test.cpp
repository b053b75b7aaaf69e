#include <gtest/gtest.h>

#include <algorithm>

#include "memsyn/serialization.hpp"
#include "memsyn/simulator.hpp"
#include "oracles.hpp"

using namespace memsyn;

namespace {

// Input 1 -> output 2, one synapse at `level` with delay 1.
Network chain(int level, WeightRange range = {}) {
  Network net;
  net.weight_range = range;
  net.neurons = {{1, 0.5, Role::Input}, {2, 0.5, Role::Output}};
  net.synapses = {{1, 2, level, 1}};
  net.inputs = {1};
  net.outputs = {2};
  return net;
}

Network two_into_one() {
  Network net;
  net.weight_range = {0.0, 0.3};
  net.neurons = {{1, 0.5, Role::Input}, {2, 0.5, Role::Input}, {3, 0.5, Role::Output}};
  net.synapses = {{1, 3, 15, 1}, {2, 3, 15, 1}};
  net.inputs = {1, 2};
  net.outputs = {3};
  return net;
}

bool has(const std::vector<std::string>& v, std::string_view needle) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

std::vector<std::pair<int, int>> random_schedule(Rng& rng, const Network& net, int horizon) {
  std::vector<std::pair<int, int>> out;
  for (int id : net.inputs)
    for (int t = 0; t < horizon; ++t)
      if (coin(rng, 0.3)) out.emplace_back(id, t);
  return out;
}

SpikeSchedule to_schedule(const std::vector<std::pair<int, int>>& s, int horizon) {
  SpikeSchedule out;
  out.horizon = horizon;
  for (auto [id, t] : s) out.spikes.push_back({id, t});
  return out;
}

}  // namespace

TEST(Validate, ExamplesFromContract) {
  Network empty;
  empty.inputs = {0};
  EXPECT_TRUE(has(validate(empty), "missing neuron"));

  Network ok;
  ok.neurons = {{0, 1.0, Role::Input}, {1, 1.0, Role::Hidden}, {2, 1.0, Role::Output}};
  ok.synapses = {{0, 1, 10, 1}, {1, 2, 10, 1}};
  ok.inputs = {0};
  ok.outputs = {2};
  EXPECT_TRUE(validate(ok).empty());

  auto bad = ok;
  bad.synapses[0].delay = 0;
  EXPECT_TRUE(has(validate(bad), "delay out of range"));
  bad.synapses[0].delay = 16;
  EXPECT_TRUE(has(validate(bad), "delay out of range"));
}

TEST(Validate, ReportsEveryBreach) {
  Network net;
  net.bit_width = 4;
  net.neurons = {{0, 0.0, Role::Input}, {0, 1.0, Role::Output}, {3, 1.0, Role::Hidden}};
  net.synapses = {{0, 9, 16, 1}, {0, 3, 0, 1}, {0, 3, 1, 2}};
  net.inputs = {3};
  net.outputs = {};
  const auto v = validate(net);
  EXPECT_TRUE(has(v, "duplicate neuron id"));
  EXPECT_TRUE(has(v, "threshold must be positive"));
  EXPECT_TRUE(has(v, "missing neuron 9"));
  EXPECT_TRUE(has(v, "level out of range"));
  EXPECT_TRUE(has(v, "duplicate synapse"));
  EXPECT_TRUE(has(v, "has role hidden"));
  EXPECT_THROW(require_valid(net), ValidationError);

  Network bits;
  bits.bit_width = 5;
  EXPECT_TRUE(has(validate(bits), "bit width out of range"));
  Network range;
  range.weight_range = {1.0, 1.0};
  EXPECT_TRUE(has(validate(range), "empty weight range"));
}

TEST(Validate, SelfLoopsAndCyclesAreAllowed) {
  Network net = chain(15);
  net.synapses.push_back({2, 2, 3, 1});
  net.synapses.push_back({2, 1, 3, 4});
  EXPECT_TRUE(validate(net).empty());
}

TEST(WeightMap, SignedAffineEndpoints) {
  Network net;
  EXPECT_EQ(net.weight_of(0), -1.0);
  EXPECT_EQ(net.weight_of(15), 1.0);
  net.bit_width = 2;
  EXPECT_NEAR(net.weight_of(1), -1.0 / 3.0, 1e-15);
  EXPECT_NEAR(net.weight_of(2), 1.0 / 3.0, 1e-15);
}

TEST(Simulate, SinglePathPropagation) {
  const auto r = simulate(chain(15), {{{1, 0}}, 5});
  EXPECT_EQ(r.times(1), std::vector<int>{0});
  EXPECT_EQ(r.times(2), std::vector<int>{1});
}

TEST(Simulate, InhibitionBlocksOutput) {
  const auto r = simulate(chain(0), {{{1, 0}}, 5});
  EXPECT_EQ(r.count(1), 1);
  EXPECT_EQ(r.count(2), 0);
}

TEST(Simulate, CoincidenceDetection) {
  const auto both = simulate(two_into_one(), {{{1, 0}, {2, 0}}, 5});
  EXPECT_EQ(both.times(3), std::vector<int>{1});
  const auto one = simulate(two_into_one(), {{{1, 0}}, 5});
  EXPECT_EQ(one.count(3), 0);
}

TEST(Simulate, PotentialPersistsWithoutLeakAndClearsWithLeak) {
  // Two spikes at different times integrate without leak.
  auto r = simulate(two_into_one(), {{{1, 0}, {2, 3}}, 8});
  EXPECT_EQ(r.times(3), std::vector<int>{4});
  auto leaky = two_into_one();
  leaky.leak = Leak::Full;
  r = simulate(leaky, {{{1, 0}, {2, 3}}, 8});
  EXPECT_EQ(r.count(3), 0);
}

TEST(Simulate, ChargeBeyondHorizonIsDropped) {
  auto net = chain(15);
  net.synapses[0].delay = 4;
  const auto r = simulate(net, {{{1, 0}}, 4});
  EXPECT_EQ(r.count(1), 1);
  EXPECT_EQ(r.count(2), 0);
}

TEST(Simulate, SelfLoopFiresEveryDelay) {
  auto net = chain(15);
  net.synapses.push_back({2, 2, 15, 2});
  const auto r = simulate(net, {{{1, 0}}, 10});
  EXPECT_EQ(r.times(2), (std::vector<int>{1, 3, 5, 7, 9}));
}

TEST(Simulate, RejectsBadInputs) {
  auto net = chain(15);
  EXPECT_THROW(simulate(net, {{{1, 5}}, 5}), DomainError);
  EXPECT_THROW(simulate(net, {{{1, -1}}, 5}), DomainError);
  EXPECT_THROW(simulate(net, {{{7, 0}}, 5}), Error);
  net.synapses[0].level = 16;
  EXPECT_THROW(simulate(net, {{}, 5}), ValidationError);
}

TEST(Simulate, ZeroHorizonProducesNothing) {
  const auto r = simulate(chain(15), {{}, 0});
  EXPECT_EQ(r.count(1), 0);
  EXPECT_EQ(r.count(2), 0);
}

TEST(SimulateProperty, MatchesReferenceOnRandomNetworks) {
  Rng rng = make_rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const Network net = oracle::exact_random_network(rng);
    ASSERT_TRUE(validate(net).empty());
    const int horizon = uniform_int(rng, 1, 40);
    const auto sched = random_schedule(rng, net, horizon);
    const auto ref = oracle::reference_simulate(net, sched, horizon);
    const auto got = simulate(net, to_schedule(sched, horizon));
    for (const auto& [id, times] : ref.times) {
      ASSERT_EQ(got.times(id), times) << "trial " << trial << " neuron " << id;
      ASSERT_EQ(got.count(id), static_cast<int>(times.size()));
    }
  }
}

TEST(SimulateProperty, IndependentOfListingOrderAndRepeatable) {
  Rng rng = make_rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const Network net = oracle::exact_random_network(rng);
    Network shuffled = net;
    std::shuffle(shuffled.neurons.begin(), shuffled.neurons.end(), rng);
    std::shuffle(shuffled.synapses.begin(), shuffled.synapses.end(), rng);
    const int horizon = 30;
    auto sched = random_schedule(rng, net, horizon);
    const auto a = simulate(net, to_schedule(sched, horizon));
    std::reverse(sched.begin(), sched.end());
    const auto b = simulate(shuffled, to_schedule(sched, horizon));
    const auto c = simulate(net, to_schedule(sched, horizon));
    for (const auto& n : net.neurons) {
      ASSERT_EQ(a.times(n.id), b.times(n.id));
      ASSERT_EQ(a.times(n.id), c.times(n.id));
    }
  }
}

TEST(SimulateProperty, ResetCausalityAndBounds) {
  Rng rng = make_rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    const Network net = oracle::exact_random_network(rng);
    const CompiledNetwork compiled(net);
    const int horizon = uniform_int(rng, 1, 40);
    std::vector<ExternalSpike> spikes;
    for (auto [id, t] : random_schedule(rng, net, horizon)) spikes.push_back({compiled.index_of(id), t});
    Simulator sim(compiled);
    const auto& tr = sim.run(spikes, horizon,
                             SimOptions{.record_times = true, .record_potentials = true, .record_deliveries = true});
    ASSERT_EQ(tr.potentials.size(), static_cast<std::size_t>(horizon));
    for (std::size_t i = 0; i < compiled.neuron_count(); ++i) {
      ASSERT_GE(tr.counts[i], 0);
      ASSERT_LE(tr.counts[i], horizon);
      for (int t : tr.times[i]) {
        ASSERT_LT(t, horizon);
        if (t + 1 < horizon) ASSERT_EQ(tr.potentials[t + 1][i], 0.0) << "potential not reset";
      }
    }
    for (const auto& d : tr.deliveries) {
      const int pre = compiled.pre()[d.synapse];
      const auto& fired = tr.times[pre];
      ASSERT_LT(d.arrival, horizon);
      ASSERT_TRUE(std::find(fired.begin(), fired.end(), d.arrival - compiled.delays()[d.synapse]) != fired.end())
          << "delivery without a matching firing";
    }
  }
}

TEST(Simulator, ReaderIsConsultedAtDelivery) {
  const auto net = chain(15);
  const CompiledNetwork compiled(net);
  Simulator sim(compiled);
  std::vector<ExternalSpike> spikes = {{compiled.index_of(1), 0}, {compiled.index_of(1), 2}};
  int calls = 0;
  auto reader = [&](int) {
    ++calls;
    return 0.25;  // nominal weight is 1.0
  };
  const auto& tr = sim.run(spikes, 6, reader, SimOptions{.record_times = true});
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(tr.times[compiled.index_of(2)], std::vector<int>{3});  // 0.25 + 0.25 reaches 0.5
}

TEST(Serialization, RoundTripIsIdentityOnCanonicalForm) {
  Rng rng = make_rng(10);
  for (int trial = 0; trial < 1000; ++trial) {
    Network net = oracle::exact_random_network(rng);
    net.neurons.front().threshold = uniform01(rng) + 0.1;  // non-dyadic value
    const Network back = deserialize(serialize(net));
    ASSERT_EQ(back, canonical(net));
    ASSERT_EQ(serialize(back), serialize(net));
  }
}

TEST(Serialization, KeepsIoOrdering) {
  auto net = two_into_one();
  net.inputs = {2, 1};
  EXPECT_EQ(deserialize(serialize(net)).inputs, (std::vector<int>{2, 1}));
}

TEST(Serialization, MissingOutputsIsParseErrorWithLocation) {
  auto doc = to_json(chain(15));
  doc.erase("outputs");
  try {
    deserialize(doc.dump());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("/outputs"), std::string::npos);
  }
}

TEST(Serialization, NestedLocations) {
  auto doc = to_json(chain(15));
  doc["synapses"][0].erase("delay");
  try {
    deserialize(doc.dump());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("/synapses/0/delay"), std::string::npos);
  }
  doc = to_json(chain(15));
  doc["neurons"][1]["role"] = "sideways";
  EXPECT_THROW(deserialize(doc.dump()), ParseError);
  EXPECT_THROW(deserialize("{ not json"), ParseError);
  EXPECT_THROW(deserialize("[]"), ParseError);
}

TEST(Serialization, LevelSixteenUnderFourBitsFailsValidation) {
  auto doc = to_json(chain(15));
  doc["synapses"][0]["level"] = 16;
  EXPECT_THROW(deserialize(doc.dump()), ValidationError);
}
